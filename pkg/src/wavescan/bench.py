"""Wall-clock benchmark harness for the core kernels and the forward pass.

Reports median (not mean) over >= 10 iterations with warmup discarded,
so scheduler noise cannot skew comparisons.  When the compiled
recurrence kernel is built, both it and the numpy fallback are timed so
their throughputs can be compared directly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import flops
from .fablock import cross_scan, fa_scan
from .grid import FeatureGrid
from .pipeline import PipelineConfig, default_weights, forward
from .scanorder import ScanKind, build_scan_order, deserialize, serialize
from .ssm import SsmParams, _coefficients, recurrence_backends, ssm_scan_parallel
from .wavelet import dwt_haar, idwt_haar


@dataclass(frozen=True)
class BenchReport:
    op: str
    shape: str
    iterations: int
    min_s: float
    median_s: float
    throughput: float
    flops: int


def _time(fn, iterations: int, warmup: int = 3) -> tuple[float, float]:
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(iterations):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return min(samples), float(np.median(samples))


def _report(op: str, shape: tuple, fn, iterations: int, elems: int, macs: int = 0) -> BenchReport:
    iterations = max(10, iterations)
    lo, med = _time(fn, iterations)
    return BenchReport(
        op=op,
        shape="x".join(str(s) for s in shape),
        iterations=iterations,
        min_s=lo,
        median_s=med,
        throughput=elems / med if med > 0 else float("inf"),
        flops=macs,
    )


def run_benchmarks(size: int = 256, forward_runs: int = 100, kernel_runs: int = 25,
                   ops: list[str] | None = None, seed: int = 0) -> list[BenchReport]:
    """Benchmark the hot operations at the given input size."""
    rng = np.random.default_rng(seed)
    reports: list[BenchReport] = []
    half = size // 2

    def wanted(name: str) -> bool:
        return ops is None or any(name.startswith(o) for o in ops)

    grid = FeatureGrid(rng.normal(size=(16, size, size)))
    if wanted("dwt"):
        reports.append(_report("dwt_haar", grid.shape, lambda: dwt_haar(grid),
                               kernel_runs, grid.data.size))
    bands = dwt_haar(grid)
    if wanted("idwt"):
        reports.append(_report("idwt_haar", grid.shape, lambda: idwt_haar(bands),
                               kernel_runs, grid.data.size))

    if wanted("hilbert_build"):
        uncached = build_scan_order.__wrapped__
        reports.append(_report("hilbert_build", (half, half),
                               lambda: uncached(ScanKind.HILBERT, half, half),
                               kernel_runs, half * half))
    if wanted("serialize"):
        order = build_scan_order(ScanKind.HILBERT, half, half)
        sub = FeatureGrid(rng.normal(size=(16, half, half)))
        reports.append(_report("serialize_roundtrip", sub.shape,
                               lambda: deserialize(serialize(sub, order), order),
                               kernel_runs, sub.data.size))

    length, channels, states = (half // 2) ** 2, 16, 8
    psi = SsmParams.random(channels, states, seed=seed)
    tokens = rng.normal(size=(length, channels))
    decay, drive, _ = _coefficients(psi, tokens)
    if wanted("ssm_recurrence"):
        for name, backend in recurrence_backends().items():
            out = np.empty_like(decay)
            reports.append(_report(f"ssm_recurrence[{name}]", decay.shape,
                                   lambda b=backend: b(decay, drive, out),
                                   kernel_runs, decay.size))
    if wanted("ssm_scan_parallel"):
        reports.append(_report("ssm_scan_parallel", (length, channels),
                               lambda: ssm_scan_parallel(psi, tokens),
                               kernel_runs, tokens.size,
                               flops.scan_macs(length, channels, states, True)))

    carrier = FeatureGrid(rng.normal(size=(16, half, half)))
    if wanted("fa_scan"):
        reports.append(_report("fa_scan", carrier.shape,
                               lambda: fa_scan(carrier, psi),
                               kernel_runs, carrier.data.size,
                               flops.fa_scan_macs(16, half, half, states)))
    if wanted("cross_scan"):
        reports.append(_report("cross_scan", carrier.shape,
                               lambda: cross_scan(carrier, psi),
                               kernel_runs, carrier.data.size,
                               flops.cross_scan_macs(16, half, half, states)))

    if wanted("forward"):
        cfg = PipelineConfig(seed=seed)
        weights = default_weights(cfg)
        image = FeatureGrid(rng.uniform(size=(1, size, size)))
        reports.append(_report("forward", image.shape,
                               lambda: forward(image, cfg, weights),
                               forward_runs, size * size,
                               flops.flop_estimate(cfg, (size, size))["total"]))
    return reports
