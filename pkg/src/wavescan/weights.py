"""Named parameter blocks with deterministic seeded initialization.

No trained checkpoint exists for this toolkit, so every consumer either
loads a .fgw file or draws weights from ``seeded_init``: uniform in
(-1/sqrt(fan_in), 1/sqrt(fan_in)) where fan_in is the product of all but
the leading dimension (the full length for rank-1 blocks).  Draws are
quantized to float32 so that save/load through the float32 file format
round-trips bit-exactly.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import fileio
from .errors import DimensionError


class WeightStore:
    """An ordered mapping of block name -> float64 ndarray."""

    def __init__(self, blocks: dict[str, np.ndarray] | None = None):
        self._blocks: dict[str, np.ndarray] = {}
        for name, arr in (blocks or {}).items():
            self[name] = arr

    def __setitem__(self, name: str, arr) -> None:
        self._blocks[name] = np.asarray(arr, dtype=np.float64)

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self._blocks:
            raise KeyError(f"weight block {name!r} not found")
        return self._blocks[name]

    def __contains__(self, name: str) -> bool:
        return name in self._blocks

    def __len__(self) -> int:
        return len(self._blocks)

    def names(self) -> list[str]:
        return list(self._blocks)

    def items(self):
        return self._blocks.items()

    def get(self, name: str, shape: Sequence[int]) -> np.ndarray:
        """Fetch a block, validating its declared shape."""
        arr = self[name]
        if arr.shape != tuple(shape):
            raise DimensionError(
                f"block {name!r} has shape {arr.shape}, consumer expects {tuple(shape)}"
            )
        return arr

    def param_count(self, prefix: str = "") -> int:
        return sum(a.size for n, a in self._blocks.items() if n.startswith(prefix))

    def save(self, path) -> None:
        fileio.write_store(path, self._blocks)

    @classmethod
    def load(cls, path) -> "WeightStore":
        return cls(fileio.read_store(path))


def seeded_init(spec: Iterable[tuple[str, Sequence[int]]], seed: int) -> WeightStore:
    """Build a WeightStore from (name, shape) pairs, deterministically per seed."""
    rng = np.random.default_rng(seed)
    store = WeightStore()
    for name, shape in spec:
        shape = tuple(int(s) for s in shape)
        if any(s < 1 for s in shape) or not shape:
            raise DimensionError(f"block {name!r} has non-positive shape {shape}")
        fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
        bound = 1.0 / np.sqrt(fan_in)
        values = rng.uniform(-bound, bound, size=shape)
        store[name] = values.astype(np.float32).astype(np.float64)
    return store
