"""Region, boundary and topology evaluation for thin-structure masks.

Masks are 2-D arrays: predictions are real-valued in [0, 1], ground
truth is boolean (anything nonzero counts as structure).  Conventions
for empty denominators: IoU of an absent class is 1, precision/recall
with an empty denominator are 0, clDice of two empty skeletons is 1
and of exactly one empty skeleton is 0.

mIoU is the two-class mean (foreground and background IoU).  ODS sweeps
the fixed threshold grid 0.01 .. 0.99 with dataset-aggregated confusion
counts and no boundary-tolerance matching.  clDice uses Zhang-Suen
thinning for its skeletons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError

ODS_THRESHOLDS = np.arange(1, 100) / 100.0


def _as_float_mask(mask) -> np.ndarray:
    arr = np.asarray(mask, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.ndim != 2:
        raise DimensionError(f"mask must be 2-D, got shape {arr.shape}")
    return arr


def _as_bool_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim == 3 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.ndim != 2:
        raise DimensionError(f"mask must be 2-D, got shape {arr.shape}")
    return arr != 0


@dataclass(frozen=True)
class RegionMetrics:
    miou: float
    f1: float
    precision: float
    recall: float


def _confusion(pred_bin: np.ndarray, gt: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(np.count_nonzero(pred_bin & gt))
    fp = int(np.count_nonzero(pred_bin & ~gt))
    fn = int(np.count_nonzero(~pred_bin & gt))
    tn = int(np.count_nonzero(~pred_bin & ~gt))
    return tp, fp, fn, tn


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def region_metrics(pred, gt, threshold: float = 0.5) -> RegionMetrics:
    """Confusion-count metrics of pred >= threshold against a boolean mask."""
    pred = _as_float_mask(pred)
    gt = _as_bool_mask(gt)
    if pred.shape != gt.shape:
        raise DimensionError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    tp, fp, fn, tn = _confusion(pred >= threshold, gt)
    precision, recall, f1 = _prf(tp, fp, fn)
    iou_fg = tp / (tp + fp + fn) if tp + fp + fn else 1.0
    iou_bg = tn / (tn + fp + fn) if tn + fp + fn else 1.0
    return RegionMetrics(
        miou=(iou_fg + iou_bg) / 2.0, f1=f1, precision=precision, recall=recall
    )


@dataclass(frozen=True)
class OdsResult:
    f1: float
    threshold: float


def ods(preds, gts) -> OdsResult:
    """Best dataset-aggregated F1 over the fixed threshold grid."""
    preds = list(preds)
    gts = list(gts)
    if not preds or len(preds) != len(gts):
        raise InputError(f"need equal non-empty mask lists, got {len(preds)} and {len(gts)}")
    tp = np.zeros(len(ODS_THRESHOLDS), dtype=np.int64)
    fp = np.zeros_like(tp)
    fn = np.zeros_like(tp)
    for pred, gt in zip(preds, gts):
        pred = _as_float_mask(pred)
        gt = _as_bool_mask(gt)
        if pred.shape != gt.shape:
            raise DimensionError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
        binned = pred.ravel()[None, :] >= ODS_THRESHOLDS[:, None]
        gt_flat = gt.ravel()[None, :]
        tp += (binned & gt_flat).sum(axis=1)
        fp += (binned & ~gt_flat).sum(axis=1)
        fn += (~binned & gt_flat).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        recall = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.maximum(denom, 1e-300), 0.0)
    best = int(np.argmax(f1))
    return OdsResult(f1=float(f1[best]), threshold=float(ODS_THRESHOLDS[best]))


def _zhang_suen_pass(img: np.ndarray, first: bool) -> np.ndarray:
    padded = np.pad(img, 1).astype(np.uint8)
    p2 = padded[:-2, 1:-1]
    p3 = padded[:-2, 2:]
    p4 = padded[1:-1, 2:]
    p5 = padded[2:, 2:]
    p6 = padded[2:, 1:-1]
    p7 = padded[2:, :-2]
    p8 = padded[1:-1, :-2]
    p9 = padded[:-2, :-2]
    ring = np.stack([p2, p3, p4, p5, p6, p7, p8, p9])
    b = ring.sum(axis=0, dtype=np.int32)
    a = ((ring == 0) & (np.roll(ring, -1, axis=0) == 1)).sum(axis=0)
    cond = img & (b >= 2) & (b <= 6) & (a == 1)
    if first:
        cond &= (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
    else:
        cond &= (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
    return img & ~cond


def skeletonize(mask) -> np.ndarray:
    """Zhang-Suen iterative thinning to a 1-pixel-wide skeleton (boolean)."""
    img = _as_bool_mask(mask).copy()
    while True:
        after = _zhang_suen_pass(_zhang_suen_pass(img, True), False)
        if np.array_equal(after, img):
            return after
        img = after


def dice(pred, gt) -> float:
    """Plain overlap Dice of two boolean masks."""
    pred = _as_bool_mask(pred)
    gt = _as_bool_mask(gt)
    if pred.shape != gt.shape:
        raise DimensionError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    total = int(pred.sum()) + int(gt.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((pred & gt).sum()) / total


def cldice(pred, gt) -> float:
    """Skeleton-overlap harmonic mean (connectivity-sensitive Dice).

    Tprec = |skel(pred) & gt| / |skel(pred)|,
    Tsens = |skel(gt) & pred| / |skel(gt)|,
    clDice = 2 * Tprec * Tsens / (Tprec + Tsens).
    """
    pred = _as_bool_mask(pred)
    gt = _as_bool_mask(gt)
    if pred.shape != gt.shape:
        raise DimensionError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    skel_p = skeletonize(pred)
    skel_g = skeletonize(gt)
    np_, ng = int(skel_p.sum()), int(skel_g.sum())
    if np_ == 0 and ng == 0:
        return 1.0
    if np_ == 0 or ng == 0:
        return 0.0
    tprec = int((skel_p & gt).sum()) / np_
    tsens = int((skel_g & pred).sum()) / ng
    if tprec + tsens == 0.0:
        return 0.0
    return 2.0 * tprec * tsens / (tprec + tsens)


def connected_components(mask, connectivity: int = 8) -> int:
    """Count connected foreground components (4- or 8-connectivity)."""
    arr = _as_bool_mask(mask)
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    visited = np.zeros_like(arr)
    if connectivity == 8:
        steps = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    h, w = arr.shape
    count = 0
    for start in zip(*np.nonzero(arr & ~visited)):
        if visited[start]:
            continue
        count += 1
        stack = [start]
        visited[start] = True
        while stack:
            r, c = stack.pop()
            for dr, dc in steps:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and arr[rr, cc] and not visited[rr, cc]:
                    visited[rr, cc] = True
                    stack.append((rr, cc))
    return count
