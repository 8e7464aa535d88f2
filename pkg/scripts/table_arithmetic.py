"""Recompute precision and recall of the published annotation tables from their counts.

Prints each row next to the printed values and flags rows that differ by more
than the tolerance.
"""

import argparse

from annofuse.evaluation import MetricsReport, format_table

N_REFERENCE = 2846
ROWS = [
    # name, (tp, fp, fn), printed (precision, recall)
    ("M", (1132, 232, 1714), (83.0, 39.8)),
    ("S", (2430, 3757, 416), (39.3, 85.4)),
    ("L", (739, 492, 2107), (60.0, 26.0)),
    ("M|L", (1316, 719, 1530), (64.7, 46.2)),
    ("M|S", (2507, 3917, 339), (39.0, 88.1)),
    ("M|S|L", (2526, 4169, 320), (37.7, 88.7)),
    ("M&L", (536, 24, 2310), (95.7, 18.8)),
    ("M&S", (1043, 84, 1803), (92.5, 36.6)),
    ("M&S&L", (508, 5, 2338), (99.0, 17.8)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tol", type=float, default=0.05, help="tolerance in percentage points")
    args = parser.parse_args()
    reports = [(name, MetricsReport(*counts)) for name, counts, _ in ROWS]
    print(format_table(reports, with_mae=False))
    print(f"{'row':>7}  {'prec':>8}  {'printed':>7}  {'rec':>8}  {'printed':>7}  TP+FN  status")
    for (name, counts, printed), (_, r) in zip(ROWS, reports):
        p, rc = 100 * r.precision, 100 * r.recall
        ok = abs(p - printed[0]) <= args.tol and abs(rc - printed[1]) <= args.tol
        ok = ok and counts[0] + counts[2] == N_REFERENCE
        print(f"{name:>7}  {p:8.3f}  {printed[0]:7.1f}  {rc:8.3f}  {printed[1]:7.1f}  "
              f"{counts[0] + counts[2]:5d}  {'ok' if ok else 'MISMATCH'}")


if __name__ == "__main__":
    main()
