"""Binary file formats: FGT1 tensors, .fgw weight bundles, and P5 PGM images.

FGT1 layout: magic bytes ``FGT1``, uint32-LE rank, rank x uint32-LE dims,
then float32-LE values in C order (channel-major, then row-major).

A .fgw bundle is a length-prefixed name table (uint32-LE count, then per
entry uint32-LE byte length + UTF-8 name) followed by that many FGT1
tensors in table order.

PGM files are binary P5, maxval 255; gray values map to [0, 1] floats.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import DimensionError
from .grid import FeatureGrid

MAGIC = b"FGT1"


def write_tensor(fh: BinaryIO, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    fh.write(MAGIC)
    fh.write(struct.pack("<I", arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_tensor(fh: BinaryIO) -> np.ndarray:
    magic = fh.read(4)
    if magic != MAGIC:
        raise ValueError(f"bad tensor magic {magic!r}, expected {MAGIC!r}")
    (rank,) = struct.unpack("<I", fh.read(4))
    dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
    count = int(np.prod(dims)) if rank else 1
    raw = fh.read(4 * count)
    if len(raw) != 4 * count:
        raise ValueError("truncated tensor payload")
    return np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64)


def save_grid(path, grid: FeatureGrid) -> None:
    with open(path, "wb") as fh:
        write_tensor(fh, grid.data)


def load_grid(path) -> FeatureGrid:
    with open(path, "rb") as fh:
        arr = read_tensor(fh)
    if arr.ndim != 3:
        raise DimensionError(f"expected a rank-3 grid tensor, got rank {arr.ndim}")
    return FeatureGrid(arr)


def write_subbands(fh: BinaryIO, bands) -> None:
    """Write a SubbandSet as four consecutive tensors in LL, LH, HL, HH order."""
    for band in (bands.ll, bands.lh, bands.hl, bands.hh):
        write_tensor(fh, band.data)


def read_subbands(fh: BinaryIO):
    from .wavelet import SubbandSet

    grids = [FeatureGrid(read_tensor(fh)) for _ in range(4)]
    return SubbandSet(*grids)


def write_store(path, blocks: dict[str, np.ndarray]) -> None:
    names = list(blocks)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        for name in names:
            write_tensor(fh, blocks[name])


def read_store(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        (count,) = struct.unpack("<I", fh.read(4))
        names = []
        for _ in range(count):
            (nlen,) = struct.unpack("<I", fh.read(4))
            names.append(fh.read(nlen).decode("utf-8"))
        return {name: read_tensor(fh) for name in names}


def save_pgm(path, values: np.ndarray) -> None:
    """Write a 2-D array of [0, 1] floats (or uint8) as binary PGM."""
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise DimensionError(f"PGM wants a 2-D array, got rank {arr.ndim}")
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def load_pgm(path) -> np.ndarray:
    """Read a binary P5 PGM into a 2-D float array in [0, 1]."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P5":
        raise ValueError(f"unsupported PGM type {fields[0]!r} in {path}")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval} in {path}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=h * w, offset=pos)
    return pixels.reshape(h, w).astype(np.float64) / 255.0
