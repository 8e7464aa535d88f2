"""Raster I/O. PPM (P6) and PGM (P5) are handled natively for bit-exact tests;
PNG goes through Pillow."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np


class RasterError(ValueError):
    pass


def _read_netpbm(data: bytes, path) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise RasterError(f"{path}: unsupported netpbm variant {magic!r}")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RasterError(f"{path}: truncated header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise RasterError(f"{path}: only 8-bit netpbm supported (maxval {maxval})")
    channels = 3 if magic == b"P6" else 1
    size = width * height * channels
    body = data[pos:pos + size]
    if len(body) != size:
        raise RasterError(f"{path}: expected {size} pixel bytes, found {len(body)}")
    arr = np.frombuffer(body, dtype=np.uint8)
    return arr.reshape((height, width, 3) if channels == 3 else (height, width)).copy()


def read_raster(path: str | os.PathLike) -> np.ndarray:
    """Load an 8-bit image as ``(H, W)`` or ``(H, W, 3)`` uint8."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".pgm", ".pnm"):
        return _read_netpbm(path.read_bytes(), path)
    from PIL import Image

    with Image.open(path) as im:
        # palette ("P") PNGs used as class masks keep their indices
        if im.mode not in ("L", "RGB", "P"):
            im = im.convert("RGB")
        return np.array(im, dtype=np.uint8)


def write_raster(path: str | os.PathLike, image: np.ndarray) -> None:
    path = Path(path)
    image = np.ascontiguousarray(image, dtype=np.uint8)
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".pgm", ".pnm"):
        if image.ndim == 3 and image.shape[2] == 3:
            magic = b"P6"
        elif image.ndim == 2:
            magic = b"P5"
        else:
            raise RasterError(f"cannot store array of shape {image.shape} as netpbm")
        h, w = image.shape[:2]
        path.write_bytes(magic + b"\n%d %d\n255\n" % (w, h) + image.tobytes())
        return
    from PIL import Image

    Image.fromarray(image).save(path)
