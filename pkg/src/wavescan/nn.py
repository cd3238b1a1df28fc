"""Small dense/conv plumbing shared by the mixer, decoder and pipeline.

All 2-D convolutions use odd kernels with "same" replicate (edge)
padding, matching the border-clamp convention of the sampling code, and
are evaluated as im2col + BLAS matmul.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _pad_edge(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    if kh % 2 == 0 or kw % 2 == 0:
        raise DimensionError(f"kernel dims must be odd, got {kh}x{kw}")
    return np.pad(x, ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)), mode="edge")


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None,
           stride: int = 1) -> np.ndarray:
    """Dense convolution: x (C_in,H,W), w (C_out,C_in,kh,kw) -> (C_out,H',W').

    Gathers kernel taps channel-major and runs one BLAS matmul.
    """
    c_in, h, width = x.shape
    c_out, c_in_w, kh, kw = w.shape
    if c_in_w != c_in:
        raise DimensionError(f"kernel expects {c_in_w} input channels, grid has {c_in}")
    xp = _pad_edge(x, kh, kw)
    oh = -(-h // stride)
    ow = -(-width // stride)
    taps = np.empty((c_in, kh * kw, oh, ow))
    for i in range(kh):
        for j in range(kw):
            taps[:, i * kw + j] = xp[:, i : i + h : stride, j : j + width : stride]
    out = w.reshape(c_out, c_in * kh * kw) @ taps.reshape(c_in * kh * kw, oh * ow)
    out = out.reshape(c_out, oh, ow)
    if b is not None:
        out = out + b[:, None, None]
    return out


def depthwise_conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Per-channel convolution: x (C,H,W), w (C,kh,kw) -> (C,H,W)."""
    if w.shape[0] != x.shape[0]:
        raise DimensionError(f"depthwise kernel has {w.shape[0]} channels, grid has {x.shape[0]}")
    c, h, width = x.shape
    kh, kw = w.shape[1], w.shape[2]
    xp = _pad_edge(x, kh, kw)
    out = np.zeros_like(x)
    for i in range(kh):
        for j in range(kw):
            out += w[:, i, j, None, None] * xp[:, i : i + h, j : j + width]
    if b is not None:
        out = out + b[:, None, None]
    return out


def conv1x1(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Pointwise projection: x (C_in,H,W), w (C_out,C_in)."""
    if w.shape[1] != x.shape[0]:
        raise DimensionError(f"projection expects {w.shape[1]} channels, grid has {x.shape[0]}")
    out = np.tensordot(w, x, axes=([1], [0]))
    if b is not None:
        out = out + b[:, None, None]
    return out


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """(C,H,W) -> (C,) spatial mean."""
    return x.mean(axis=(1, 2))


def rms_normalize(x: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Scale a tensor to unit root-mean-square (zero stays zero)."""
    return x / np.sqrt(np.mean(x ** 2) + eps)


def avg_pool_2x2(x: np.ndarray) -> np.ndarray:
    """Non-overlapping 2x2 mean pooling of a (C,H,W) array with even dims."""
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"2x2 pooling needs even dims, got {h}x{w}")
    return x.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))
