"""Active probing of the topology carrier and gated detail injection.

A small set of probes queries the low-frequency carrier to build a
coarse potential field M0 (probe-attention mean through a logistic).
Probes then evolve for a few steps, each step combining a bounded
learned semantic offset, gradient ascent on the bilinear surface of M0,
and a truncated pairwise repulsion that keeps them from collapsing onto
the strongest ridge; coordinates are clamped to [-1, 1]^2 throughout.
The refined probes are splatted back to pixel space as M1, and the
blended gate sigmoid(w*M1 + (1-w)*M0) multiplies the high-frequency
bands so only structure-consistent detail survives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError
from .grid import FeatureGrid, Mask, bilinear_gradient, bilinear_sample, require_single_channel
from .nn import avg_pool_2x2, relu, sigmoid
from .weights import WeightStore


@dataclass(frozen=True)
class AsgpConfig:
    steps: int = 3
    probes: int = 64
    radius: float = 0.15
    grad_gain: float = 0.1
    repulsion_gain: float = 0.05
    eps: float = 1e-5
    blend: float = 0.5
    splat_sigma: float = 0.1

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.probes < 1:
            raise ValueError("need at least one probe")
        if min(self.radius, self.grad_gain, self.repulsion_gain, self.eps) <= 0:
            raise ValueError("radius, gains and eps must be positive")
        if not 0.0 <= self.blend <= 1.0:
            raise ValueError("blend must lie in [0, 1]")
        if self.splat_sigma <= 0:
            raise ValueError("splat_sigma must be positive")


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """Probe coordinates in [-1, 1]^2 with their query embeddings and scores."""

    coords: np.ndarray
    embeddings: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        emb = np.asarray(self.embeddings, dtype=np.float64)
        scores = np.asarray(self.scores, dtype=np.float64)
        n = coords.shape[0]
        if coords.ndim != 2 or coords.shape[1] != 2 or n < 1:
            raise DimensionError(f"coords must be (N, 2) with N >= 1, got {coords.shape}")
        if emb.ndim != 2 or emb.shape[0] != n:
            raise DimensionError(f"embeddings must be (N, d), got {emb.shape}")
        if scores.shape != (n,):
            raise DimensionError(f"scores must be (N,), got {scores.shape}")
        if np.any(np.abs(coords) > 1.0):
            raise ValueError("probe coordinates must lie in [-1, 1]^2")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "scores", scores)

    @property
    def count(self) -> int:
        return self.coords.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.embeddings.shape[1]


def init_probes(n: int, embeddings: np.ndarray, seed: int, jitter: float = 0.5) -> ProbeSet:
    """Probes on a uniformly jittered grid over [-1, 1]^2 (deterministic per seed)."""
    grid_coords = probe_grid_coords(n, seed, jitter)
    return ProbeSet(coords=grid_coords, embeddings=np.asarray(embeddings), scores=np.full(n, 0.5))


def probe_grid_coords(n: int, seed: int, jitter: float = 0.5) -> np.ndarray:
    side = int(np.ceil(np.sqrt(n)))
    cell = 2.0 / side
    centers = -1.0 + cell * (np.arange(side) + 0.5)
    xx, yy = np.meshgrid(centers, centers)
    coords = np.stack([xx.ravel(), yy.ravel()], axis=1)[:n]
    rng = np.random.default_rng(seed)
    coords = coords + rng.uniform(-0.5, 0.5, coords.shape) * cell * jitter
    return np.clip(coords, -1.0, 1.0)


def asgp_weight_spec(channels: int, embed_dim: int, n_probes: int,
                     prefix: str = "") -> list[tuple[str, tuple]]:
    return [
        (prefix + "asgp.probe_embed", (n_probes, embed_dim)),
        (prefix + "asgp.key_w", (embed_dim, channels)),
        (prefix + "asgp.key_b", (embed_dim,)),
        (prefix + "asgp.sem_w1", (embed_dim, channels)),
        (prefix + "asgp.sem_b1", (embed_dim,)),
        (prefix + "asgp.sem_w2", (2, embed_dim)),
        (prefix + "asgp.sem_b2", (2,)),
        (prefix + "asgp.score_w", (1, channels)),
        (prefix + "asgp.score_b", (1,)),
    ]


def coarse_potential(probes: ProbeSet, x_ll: FeatureGrid, w: WeightStore,
                     prefix: str = "") -> Mask:
    """Probe-attention potential field over the carrier, values in (0, 1).

    Each probe's attention over all H*W positions (scaled dot product,
    softmax) is multiplied by H*W so a uniform map has value 1; the
    probe mean goes through a logistic.
    """
    d = probes.embed_dim
    channels, h, width = x_ll.shape
    key_w = w.get(prefix + "asgp.key_w", (d, channels))
    key_b = w.get(prefix + "asgp.key_b", (d,))
    keys = key_w @ x_ll.data.reshape(channels, -1) + key_b[:, None]  # (d, HW)
    logits = (probes.embeddings @ keys) / np.sqrt(d)  # (N, HW)
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    attn = expl / expl.sum(axis=1, keepdims=True)
    field = attn.mean(axis=0) * (h * width)
    return FeatureGrid(sigmoid(field).reshape(1, h, width))


def repulsion_forces(coords: np.ndarray, cfg: AsgpConfig) -> np.ndarray:
    """Truncated pairwise repulsion, active only below the separation radius."""
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    weight = np.maximum(0.0, 1.0 - dist / cfg.radius) / (dist + cfg.eps)
    np.fill_diagonal(weight, 0.0)
    return (diff * weight[:, :, None]).sum(axis=1)


def semantic_offsets(features: np.ndarray, w: WeightStore, prefix: str = "") -> np.ndarray:
    """Bounded learned offsets: tanh of a two-layer head on sampled features."""
    n, channels = features.shape
    w1 = w[prefix + "asgp.sem_w1"]
    if w1.ndim != 2 or w1.shape[1] != channels:
        raise DimensionError(f"offset head expects (d, {channels}) weights, got {w1.shape}")
    b1 = w.get(prefix + "asgp.sem_b1", (w1.shape[0],))
    w2 = w.get(prefix + "asgp.sem_w2", (2, w1.shape[0]))
    b2 = w.get(prefix + "asgp.sem_b2", (2,))
    hidden = relu(features @ w1.T + b1)
    return np.tanh(hidden @ w2.T + b2)


def evolve_probes(m0: Mask, x_ll: FeatureGrid, probes: ProbeSet, cfg: AsgpConfig,
                  w: WeightStore, prefix: str = "",
                  trajectory: list | None = None) -> ProbeSet:
    """Iterate the probe update rule for cfg.steps steps.

    Each step: sample carrier features at the current coordinates, add
    the bounded semantic offset, the scaled gradient of M0, and the
    scaled repulsion force, then clamp to [-1, 1]^2.  Scores come from
    the score head at the final coordinates.
    """
    require_single_channel(m0, "potential field")
    coords = probes.coords.copy()
    if trajectory is not None:
        trajectory.append(coords.copy())
    for _ in range(cfg.steps):
        feats = bilinear_sample(x_ll, coords)
        sem = semantic_offsets(feats, w, prefix)
        grad = bilinear_gradient(m0, coords)
        force = repulsion_forces(coords, cfg)
        coords = np.clip(
            coords + sem + cfg.grad_gain * grad + cfg.repulsion_gain * force,
            -1.0, 1.0,
        )
        if trajectory is not None:
            trajectory.append(coords.copy())
    feats = bilinear_sample(x_ll, coords)
    score_w = w.get(prefix + "asgp.score_w", (1, x_ll.channels))
    score_b = w.get(prefix + "asgp.score_b", (1,))
    scores = sigmoid(feats @ score_w.T + score_b).ravel()
    return ProbeSet(coords=coords, embeddings=probes.embeddings, scores=scores)


def refine_mask(probes: ProbeSet, shape: tuple[int, int],
                cfg: AsgpConfig | None = None) -> Mask:
    """Score-weighted Gaussian splats of the probes, through a logistic."""
    cfg = cfg or AsgpConfig()
    h, width = shape
    if h < 1 or width < 1:
        raise DimensionError(f"mask shape must be positive, got {shape}")
    xs = np.linspace(-1.0, 1.0, width) if width > 1 else np.zeros(1)
    ys = np.linspace(-1.0, 1.0, h) if h > 1 else np.zeros(1)
    px, py = np.meshgrid(xs, ys)
    dx = px[None, :, :] - probes.coords[:, 0, None, None]
    dy = py[None, :, :] - probes.coords[:, 1, None, None]
    splats = np.exp(-(dx ** 2 + dy ** 2) / (2.0 * cfg.splat_sigma ** 2))
    field = (probes.scores[:, None, None] * splats).sum(axis=0)
    return FeatureGrid(sigmoid(field)[None, :, :])


def _match_band_shape(mask: Mask, band_h: int, band_w: int) -> np.ndarray:
    if (mask.height, mask.width) == (band_h, band_w):
        return mask.data[0]
    if (mask.height, mask.width) == (2 * band_h, 2 * band_w):
        return avg_pool_2x2(mask.data)[0]
    raise DimensionError(
        f"mask {mask.height}x{mask.width} does not match bands {band_h}x{band_w}"
    )


def asgp_gate(m0: Mask, m1: Mask, bands: Sequence[FeatureGrid],
              cfg: AsgpConfig | None = None) -> list[FeatureGrid]:
    """Blend the two masks into a gate and multiply the high bands by it."""
    cfg = cfg or AsgpConfig()
    require_single_channel(m0, "coarse mask")
    require_single_channel(m1, "refined mask")
    bands = list(bands)
    if not bands:
        raise DimensionError("need at least one band to gate")
    band_h, band_w = bands[0].height, bands[0].width
    for band in bands[1:]:
        if (band.height, band.width) != (band_h, band_w):
            raise DimensionError("bands must share one spatial shape")
    coarse = _match_band_shape(m0, band_h, band_w)
    fine = _match_band_shape(m1, band_h, band_w)
    gate = sigmoid(cfg.blend * fine + (1.0 - cfg.blend) * coarse)
    return [FeatureGrid(band.data * gate) for band in bands]
