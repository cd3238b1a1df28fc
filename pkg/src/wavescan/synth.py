"""Deterministic synthetic thin-structure samples with exact ground truth.

Each sample carries the rendered image, the exact rasterized structure
mask, and the generating centerline (the mask before width dilation),
so along-structure diagnostics can use the true skeleton.  Structures
render darker than a value-noise textured background by ``contrast``.
Everything is a pure function of the config (seed included).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import FeatureGrid

ORIENTATIONS = ("horizontal", "vertical", "axis-aligned", "diagonal", "bezier")


@dataclass(frozen=True)
class SynthConfig:
    height: int = 64
    width: int = 64
    curves: int = 1
    width_min: int = 1
    width_max: int = 1
    orientation: str = "axis-aligned"
    contrast: float = 1.0
    texture: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.height < 4 or self.width < 4:
            raise ConfigError("canvas must be at least 4x4")
        if self.curves < 1:
            raise ConfigError("need at least one curve")
        if self.width_min < 1 or self.width_max < self.width_min:
            raise ConfigError("widths must satisfy 1 <= width_min <= width_max")
        if not 0.0 < self.contrast <= 1.0:
            raise ConfigError("contrast must lie in (0, 1]")
        if self.texture < 0.0:
            raise ConfigError("texture amplitude must be >= 0")
        if self.orientation not in ORIENTATIONS:
            raise ConfigError(f"orientation must be one of {ORIENTATIONS}")


@dataclass(frozen=True, eq=False)
class SynthSample:
    image: FeatureGrid
    gt: np.ndarray
    skeleton: np.ndarray


def _value_noise(h: int, w: int, rng: np.random.Generator, cell: int = 8) -> np.ndarray:
    gh, gw = h // cell + 2, w // cell + 2
    lattice = rng.uniform(0.0, 1.0, (gh, gw))
    ys = np.arange(h) / cell
    xs = np.arange(w) / cell
    y0 = ys.astype(int)
    x0 = xs.astype(int)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    v00 = lattice[np.ix_(y0, x0)]
    v01 = lattice[np.ix_(y0, x0 + 1)]
    v10 = lattice[np.ix_(y0 + 1, x0)]
    v11 = lattice[np.ix_(y0 + 1, x0 + 1)]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def _line_cells(cfg: SynthConfig, rng: np.random.Generator, orientation: str) -> np.ndarray:
    h, w = cfg.height, cfg.width
    if orientation == "horizontal":
        r = int(rng.integers(1, h - 1))
        return np.stack([np.full(w, r), np.arange(w)], axis=1)
    if orientation == "vertical":
        c = int(rng.integers(1, w - 1))
        return np.stack([np.arange(h), np.full(h, c)], axis=1)
    if orientation == "diagonal":
        off = int(rng.integers(-(h // 2), w // 2))
        i = np.arange(max(h, w))
        rr, cc = i, i + off
        keep = (rr < h) & (cc >= 0) & (cc < w)
        return np.stack([rr[keep], cc[keep]], axis=1)
    # quadratic Bezier chain with gently placed control points
    points = []
    p0 = rng.uniform([0.1 * h, 0.0], [0.9 * h, 0.15 * w])
    p2 = rng.uniform([0.1 * h, 0.85 * w], [0.9 * h, float(w - 1)])
    mid = (p0 + p2) / 2.0
    p1 = mid + rng.uniform(-0.25, 0.25, 2) * np.array([h, w])
    t = np.linspace(0.0, 1.0, 4 * max(h, w))[:, None]
    curve = (1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t ** 2 * p2
    cells = np.rint(curve).astype(int)
    keep = (cells[:, 0] >= 0) & (cells[:, 0] < h) & (cells[:, 1] >= 0) & (cells[:, 1] < w)
    return np.unique(cells[keep], axis=0)


def _dilate(skeleton: np.ndarray, width: int) -> np.ndarray:
    if width <= 1:
        return skeleton.copy()
    radius = (width - 1) / 2.0
    span = int(np.ceil(radius))
    out = np.zeros_like(skeleton)
    rows, cols = np.nonzero(skeleton)
    h, w = skeleton.shape
    for dr in range(-span, span + 1):
        for dc in range(-span, span + 1):
            if dr * dr + dc * dc > radius * radius + 1e-9:
                continue
            rr = np.clip(rows + dr, 0, h - 1)
            cc = np.clip(cols + dc, 0, w - 1)
            out[rr, cc] = True
    return out


def generate_sample(cfg: SynthConfig) -> SynthSample:
    """Render one seeded sample: image, exact mask, generating centerline."""
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.height, cfg.width
    skeleton = np.zeros((h, w), dtype=bool)
    gt = np.zeros((h, w), dtype=bool)
    for _ in range(cfg.curves):
        orientation = cfg.orientation
        if orientation == "axis-aligned":
            orientation = "horizontal" if rng.random() < 0.5 else "vertical"
        cells = _line_cells(cfg, rng, orientation)
        line = np.zeros((h, w), dtype=bool)
        line[cells[:, 0], cells[:, 1]] = True
        width = int(rng.integers(cfg.width_min, cfg.width_max + 1))
        skeleton |= line
        gt |= _dilate(line, width)
    noise = _value_noise(h, w, rng) if cfg.texture > 0 else np.zeros((h, w))
    image = np.clip(1.0 - cfg.texture * noise - cfg.contrast * gt, 0.0, 1.0)
    return SynthSample(image=FeatureGrid(image[None, :, :]), gt=gt, skeleton=skeleton)
