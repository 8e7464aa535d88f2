from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence


def parallel_map(fn: Callable, arg_tuples: Sequence[tuple], jobs: int = 1) -> list:
    """``[fn(*args) for args in arg_tuples]``, optionally over worker processes.

    Output order always follows input order.
    """
    if jobs <= 1 or len(arg_tuples) < 2:
        return [fn(*args) for args in arg_tuples]
    chunk = max(1, len(arg_tuples) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*arg_tuples), chunksize=chunk))
