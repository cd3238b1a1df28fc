"""Geometry-aligned encoder block pieces.

fa_scan runs a local Haar split on the (already aligned) topology
carrier, serializes each sub-band along a traversal matched to its
dominant orientation, pushes every sequence through one shared scan
operator, and merges the results back.  cross_scan is the isotropic
comparison baseline: the same shared operator applied along four raster
directions per sub-band, outputs averaged.

lgb is the residual LightGate Bottleneck mixer: a C -> C/r -> C
bottleneck with a 3x3 depthwise conv inside, modulated by a per-stage
channel gate (ECA-style 1-D conv for early stages, squeeze/excite for
late stages) and added back to the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .grid import FeatureGrid
from .nn import conv1x1, depthwise_conv2d, global_avg_pool, relu, sigmoid
from .scanorder import ScanKind, build_scan_order, deserialize, parse_kind, serialize
from .ssm import SsmParams, _coefficients, ssm_scan_parallel, ssm_scan_sequential
from .wavelet import SubbandSet, dwt_haar, idwt_haar
from .weights import WeightStore


@dataclass(frozen=True)
class ScanAssignment:
    """Traversal kind per sub-band path."""

    ll: ScanKind = ScanKind.HILBERT
    lh: ScanKind = ScanKind.HORIZONTAL
    hl: ScanKind = ScanKind.VERTICAL
    hh: ScanKind = ScanKind.HILBERT

    @classmethod
    def uniform(cls, kind: ScanKind) -> "ScanAssignment":
        return cls(ll=kind, lh=kind, hl=kind, hh=kind)

    @classmethod
    def swapped(cls) -> "ScanAssignment":
        """Deliberately mismatched detail paths (LH vertical, HL horizontal)."""
        return cls(lh=ScanKind.VERTICAL, hl=ScanKind.HORIZONTAL)

    @classmethod
    def parse(cls, text: str) -> "ScanAssignment":
        """Parse e.g. 'll=hilbert,lh=h,hl=v,hh=hilbert' (missing keys keep defaults)."""
        kinds = {}
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            key, _, value = part.partition("=")
            key = key.strip().lower()
            if key not in ("ll", "lh", "hl", "hh") or not value:
                raise ValueError(f"bad assignment entry {part!r}, want band=kind")
            kinds[key] = parse_kind(value)
        return cls(**kinds)

    def format(self) -> str:
        return f"ll={self.ll.value},lh={self.lh.value},hl={self.hl.value},hh={self.hh.value}"


@dataclass(frozen=True)
class LgbConfig:
    """Stage-adaptive gating policy and bottleneck geometry."""

    stage: int = 1
    policy: str = "EEGG"
    ratio: int = 4
    eca_kernel: int = 3
    gse_reduction: int = 4

    def __post_init__(self):
        if not 1 <= self.stage <= 4:
            raise ValueError(f"stage must be 1..4, got {self.stage}")
        if len(self.policy) != 4 or any(ch not in "EG" for ch in self.policy):
            raise ValueError(f"policy must be 4 letters from E/G, got {self.policy!r}")
        if self.eca_kernel % 2 == 0 or self.eca_kernel < 1:
            raise ValueError(f"eca_kernel must be odd and positive, got {self.eca_kernel}")
        if self.ratio < 1 or self.gse_reduction < 1:
            raise ValueError("ratio and gse_reduction must be >= 1")

    @property
    def letter(self) -> str:
        return self.policy[self.stage - 1]


def _check_scan_input(x: FeatureGrid, minimum: int) -> None:
    if x.height < minimum or x.width < minimum:
        raise DimensionError(
            f"scan blocks need dims >= {minimum}, got {x.height}x{x.width}"
        )


def _scan_band(band: FeatureGrid, kind: ScanKind, psi: SsmParams, parallel: bool) -> FeatureGrid:
    order = build_scan_order(kind, band.height, band.width)
    seq = serialize(band, order).T  # (L, C) tokens
    scan = ssm_scan_parallel if parallel else ssm_scan_sequential
    return deserialize(scan(psi, seq).T, order)


def fa_scan(x_ll_aligned: FeatureGrid, psi: SsmParams, assign: ScanAssignment | None = None,
            parallel: bool = True) -> FeatureGrid:
    """Orientation-matched scan of the topology carrier; shape-preserving.

    Odd dimensions follow the wavelet module's policy (edge replication
    in, crop out), so any H, W >= 2 works.
    """
    assign = assign or ScanAssignment()
    _check_scan_input(x_ll_aligned, minimum=2)
    bands = dwt_haar(x_ll_aligned)
    out = SubbandSet(
        ll=_scan_band(bands.ll, assign.ll, psi, parallel),
        lh=_scan_band(bands.lh, assign.lh, psi, parallel),
        hl=_scan_band(bands.hl, assign.hl, psi, parallel),
        hh=_scan_band(bands.hh, assign.hh, psi, parallel),
    )
    return idwt_haar(out, x_ll_aligned.height, x_ll_aligned.width)


def _strip_recurrence(decay: np.ndarray, drive: np.ndarray, reverse: bool) -> np.ndarray:
    """Affine recurrence along axis 1 of (B, L, C, N), strips independent."""
    if reverse:
        decay = decay[:, ::-1]
        drive = drive[:, ::-1]
    out = np.empty_like(drive)
    state = drive[:, 0].copy()
    out[:, 0] = state
    for t in range(1, drive.shape[1]):
        state = decay[:, t] * state + drive[:, t]
        out[:, t] = state
    return out[:, ::-1] if reverse else out


def _scan_four_directions(band: FeatureGrid, psi: SsmParams) -> FeatureGrid:
    """Average of four directional passes: left/right along rows, down/up
    along columns, each strip scanned independently with zero initial state."""
    c, h, w = band.shape
    tokens = band.data.reshape(c, -1).T
    decay, drive, c_t = _coefficients(psi, tokens)
    n = psi.state_dim
    decay = decay.reshape(h, w, c, n)
    drive = drive.reshape(h, w, c, n)
    c_grid = c_t.reshape(h, w, n)
    acc = np.zeros((h, w, c))
    for reverse in (False, True):
        acc += np.einsum("hwcn,hwn->hwc", _strip_recurrence(decay, drive, reverse), c_grid)
    decay_t = decay.transpose(1, 0, 2, 3)
    drive_t = drive.transpose(1, 0, 2, 3)
    for reverse in (False, True):
        hs = _strip_recurrence(decay_t, drive_t, reverse).transpose(1, 0, 2, 3)
        acc += np.einsum("hwcn,hwn->hwc", hs, c_grid)
    out = acc / 4.0 + psi.d_skip * tokens.reshape(h, w, c)
    return FeatureGrid(np.ascontiguousarray(out.transpose(2, 0, 1)))


def cross_scan(x: FeatureGrid, psi: SsmParams) -> FeatureGrid:
    """Isotropic comparison baseline: four raster propagation directions
    per sub-band through the same shared operator, outputs averaged."""
    _check_scan_input(x, minimum=2)
    bands = dwt_haar(x)
    out = SubbandSet(
        ll=_scan_four_directions(bands.ll, psi),
        lh=_scan_four_directions(bands.lh, psi),
        hl=_scan_four_directions(bands.hl, psi),
        hh=_scan_four_directions(bands.hh, psi),
    )
    return idwt_haar(out, x.height, x.width)


def lgb_weight_spec(channels: int, cfg: LgbConfig, prefix: str = "") -> list[tuple[str, tuple]]:
    if channels % 4:
        raise DimensionError(f"mixer needs channels divisible by 4, got {channels}")
    inner = channels // cfg.ratio
    spec = [
        (prefix + "lgb.down_w", (inner, channels)),
        (prefix + "lgb.down_b", (inner,)),
        (prefix + "lgb.dw_w", (inner, 3, 3)),
        (prefix + "lgb.dw_b", (inner,)),
        (prefix + "lgb.up_w", (channels, inner)),
        (prefix + "lgb.up_b", (channels,)),
    ]
    if cfg.letter == "E":
        spec += [(prefix + "lgb.eca_w", (cfg.eca_kernel,)), (prefix + "lgb.eca_b", (1,))]
    else:
        hidden = max(1, channels // cfg.gse_reduction)
        spec += [
            (prefix + "lgb.gse_w1", (hidden, channels)),
            (prefix + "lgb.gse_b1", (hidden,)),
            (prefix + "lgb.gse_w2", (channels, hidden)),
            (prefix + "lgb.gse_b2", (channels,)),
        ]
    return spec


def lgb_gate(y: FeatureGrid, cfg: LgbConfig, w: WeightStore, prefix: str = "") -> np.ndarray:
    """Per-channel gate in (0, 1) selected by the stage's policy letter."""
    pooled = global_avg_pool(y.data)
    channels = y.channels
    if cfg.letter == "E":
        kernel = w.get(prefix + "lgb.eca_w", (cfg.eca_kernel,))
        bias = w.get(prefix + "lgb.eca_b", (1,))
        pre = np.correlate(pooled, kernel, mode="same") + bias[0]
    else:
        hidden = max(1, channels // cfg.gse_reduction)
        w1 = w.get(prefix + "lgb.gse_w1", (hidden, channels))
        b1 = w.get(prefix + "lgb.gse_b1", (hidden,))
        w2 = w.get(prefix + "lgb.gse_w2", (channels, hidden))
        b2 = w.get(prefix + "lgb.gse_b2", (channels,))
        pre = w2 @ relu(w1 @ pooled + b1) + b2
    return sigmoid(pre)


def lgb(y: FeatureGrid, cfg: LgbConfig, w: WeightStore, prefix: str = "") -> FeatureGrid:
    """Residual gated bottleneck: y + gate(y) * bottleneck(y)."""
    channels = y.channels
    if channels % 4:
        raise DimensionError(f"mixer needs channels divisible by 4, got {channels}")
    inner = channels // cfg.ratio
    down_w = w.get(prefix + "lgb.down_w", (inner, channels))
    down_b = w.get(prefix + "lgb.down_b", (inner,))
    dw_w = w.get(prefix + "lgb.dw_w", (inner, 3, 3))
    dw_b = w.get(prefix + "lgb.dw_b", (inner,))
    up_w = w.get(prefix + "lgb.up_w", (channels, inner))
    up_b = w.get(prefix + "lgb.up_b", (channels,))
    branch = relu(conv1x1(y.data, down_w, down_b))
    branch = relu(depthwise_conv2d(branch, dw_w, dw_b))
    branch = conv1x1(branch, up_w, up_b)
    gate = lgb_gate(y, cfg, w, prefix)
    return FeatureGrid(y.data + gate[:, None, None] * branch)
