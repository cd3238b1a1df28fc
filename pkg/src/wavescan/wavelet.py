"""Orthonormal single-level 2-D Haar analysis / synthesis.

Per 2x2 block [[a, b], [c, d]] the four coefficients are

    LL = (a + b + c + d) / 2      LH = (a + b - c - d) / 2
    HL = (a - b + c - d) / 2      HH = (a - b - c + d) / 2

i.e. 1/2-scaled Hadamard mixing, which is orthonormal (energy-preserving)
and self-inverse.  Band naming: first letter is the filter along the
horizontal axis, second along the vertical axis, so LH responds to
horizontal structures and HL to vertical ones.

Odd input dimensions are edge-replicated to even before the transform;
the inverse crops back to the requested target size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .grid import FeatureGrid


@dataclass(frozen=True, eq=False)
class SubbandSet:
    """The four half-resolution Haar bands of a grid."""

    ll: FeatureGrid
    lh: FeatureGrid
    hl: FeatureGrid
    hh: FeatureGrid

    def __post_init__(self):
        shapes = {b.shape for b in (self.ll, self.lh, self.hl, self.hh)}
        if len(shapes) != 1:
            raise DimensionError(f"sub-bands must share one shape, got {sorted(shapes)}")

    @property
    def band_shape(self) -> tuple[int, int, int]:
        return self.ll.shape

    def high(self) -> tuple[FeatureGrid, FeatureGrid, FeatureGrid]:
        return self.lh, self.hl, self.hh


def dwt_haar(x: FeatureGrid) -> SubbandSet:
    """Split a grid into LL/LH/HL/HH half-resolution bands."""
    if x.height < 2 or x.width < 2:
        raise DimensionError(f"transform needs H, W >= 2, got {x.height}x{x.width}")
    data = x.data
    ph, pw = x.height % 2, x.width % 2
    if ph or pw:
        data = np.pad(data, ((0, 0), (0, ph), (0, pw)), mode="edge")
    a = data[:, 0::2, 0::2]
    b = data[:, 0::2, 1::2]
    c = data[:, 1::2, 0::2]
    d = data[:, 1::2, 1::2]
    return SubbandSet(
        ll=FeatureGrid((a + b + c + d) / 2.0),
        lh=FeatureGrid((a + b - c - d) / 2.0),
        hl=FeatureGrid((a - b + c - d) / 2.0),
        hh=FeatureGrid((a - b - c + d) / 2.0),
    )


def idwt_haar(s: SubbandSet, target_h: int | None = None, target_w: int | None = None) -> FeatureGrid:
    """Reconstruct a grid from its bands; exact inverse of dwt_haar on even dims."""
    ll, lh, hl, hh = s.ll.data, s.lh.data, s.hl.data, s.hh.data
    ch, bh, bw = ll.shape
    target_h = 2 * bh if target_h is None else int(target_h)
    target_w = 2 * bw if target_w is None else int(target_w)
    if not (2 * bh - 1 <= target_h <= 2 * bh and 2 * bw - 1 <= target_w <= 2 * bw):
        raise DimensionError(
            f"target {target_h}x{target_w} incompatible with band shape {bh}x{bw}"
        )
    out = np.empty((ch, 2 * bh, 2 * bw))
    out[:, 0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    out[:, 0::2, 1::2] = (ll + lh - hl - hh) / 2.0
    out[:, 1::2, 0::2] = (ll - lh + hl - hh) / 2.0
    out[:, 1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return FeatureGrid(out[:, :target_h, :target_w])
