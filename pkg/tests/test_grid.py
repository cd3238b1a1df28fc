import numpy as np
import pytest

from wavescan.errors import DimensionError
from wavescan.grid import (
    FeatureGrid,
    NormCoord,
    bilinear_gradient,
    bilinear_sample,
    resize_bilinear,
)


def brute_force_sample(data, x, y):
    """Direct evaluation of the corner-aligned bilinear formula (scalar)."""
    _, h, w = data.shape
    col = (x + 1.0) * (w - 1) / 2.0 if w > 1 else 0.0
    row = (y + 1.0) * (h - 1) / 2.0 if h > 1 else 0.0
    col = min(max(col, 0.0), w - 1.0)
    row = min(max(row, 0.0), h - 1.0)
    c0 = min(int(np.floor(col)), w - 2) if w > 1 else 0
    r0 = min(int(np.floor(row)), h - 2) if h > 1 else 0
    fx = col - c0
    fy = row - r0
    c1 = min(c0 + 1, w - 1)
    r1 = min(r0 + 1, h - 1)
    out = np.empty(data.shape[0])
    for ch in range(data.shape[0]):
        top = data[ch, r0, c0] * (1 - fx) + data[ch, r0, c1] * fx
        bot = data[ch, r1, c0] * (1 - fx) + data[ch, r1, c1] * fx
        out[ch] = top * (1 - fy) + bot * fy
    return out


class TestFeatureGrid:
    def test_shape_properties(self):
        g = FeatureGrid.zeros(3, 4, 5)
        assert (g.channels, g.height, g.width) == (3, 4, 5)

    def test_rejects_bad_rank(self):
        with pytest.raises(DimensionError):
            FeatureGrid(np.zeros((4, 5)))

    def test_rejects_empty(self):
        with pytest.raises(DimensionError):
            FeatureGrid(np.zeros((0, 4, 4)))

    def test_rejects_non_finite(self):
        data = np.zeros((1, 2, 2))
        data[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            FeatureGrid(data)


class TestBilinearSample:
    def test_constant_grid(self):
        g = FeatureGrid.full(2, 5, 7, 5.0)
        pts = np.random.default_rng(0).uniform(-1, 1, (20, 2))
        assert np.allclose(bilinear_sample(g, pts), 5.0)

    def test_1x2_midpoint(self):
        g = FeatureGrid(np.array([[[3.0, 9.0]]]))
        out = bilinear_sample(g, NormCoord(0.0, 0.0))
        assert out.shape == (1, 1)
        assert out[0, 0] == pytest.approx(6.0, abs=1e-12)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(42)
        g = FeatureGrid(rng.normal(size=(1, 8, 8)))
        pts = rng.uniform(-1.2, 1.2, (100, 2))
        got = bilinear_sample(g, pts)
        for k, (x, y) in enumerate(pts):
            want = brute_force_sample(g.data, x, y)
            assert abs(got[k, 0] - want[0]) <= 1e-6

    def test_exact_at_lattice_points(self):
        rng = np.random.default_rng(1)
        g = FeatureGrid(rng.normal(size=(2, 6, 9)))
        for r in range(6):
            for c in range(9):
                x = -1.0 + 2.0 * c / 8.0
                y = -1.0 + 2.0 * r / 5.0
                got = bilinear_sample(g, (x, y))[0]
                assert np.allclose(got, g.data[:, r, c], atol=1e-9)

    def test_linearity_in_grid(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(3, 8, 8))
        b = rng.normal(size=(3, 8, 8))
        pts = rng.uniform(-1, 1, (30, 2))
        mixed = bilinear_sample(FeatureGrid(2.5 * a - 1.5 * b), pts)
        parts = 2.5 * bilinear_sample(FeatureGrid(a), pts) - 1.5 * bilinear_sample(FeatureGrid(b), pts)
        assert np.abs(mixed - parts).max() <= 1e-6

    def test_out_of_range_clamps_to_border(self):
        g = FeatureGrid(np.arange(16, dtype=float).reshape(1, 4, 4))
        left = bilinear_sample(g, (-5.0, 0.0))
        right = bilinear_sample(g, (5.0, 0.0))
        assert left[0, 0] == pytest.approx(bilinear_sample(g, (-1.0, 0.0))[0, 0])
        assert right[0, 0] == pytest.approx(bilinear_sample(g, (1.0, 0.0))[0, 0])

    def test_degenerate_single_column(self):
        g = FeatureGrid(np.array([[[1.0], [2.0]]]))  # 1 x 2 x 1
        for x in (-1.0, 0.0, 1.0):
            assert bilinear_sample(g, (x, -1.0))[0, 0] == pytest.approx(1.0)

    def test_rejects_nan_coords(self):
        g = FeatureGrid.zeros(1, 4, 4)
        with pytest.raises(ValueError):
            bilinear_sample(g, (np.nan, 0.0))


class TestBilinearGradient:
    def test_constant_field_zero_gradient(self):
        g = FeatureGrid.full(1, 6, 6, 3.3)
        grad = bilinear_gradient(g, np.random.default_rng(0).uniform(-1, 1, (10, 2)))
        assert np.allclose(grad, 0.0)

    def test_linear_ramp_chain_rule(self):
        # f(col) = col on a 4-wide grid: d/dx = (W-1)/2 = 1.5 everywhere interior
        data = np.tile(np.arange(4.0), (4, 1))[None]
        g = FeatureGrid(data)
        pts = np.random.default_rng(3).uniform(-0.9, 0.9, (25, 2))
        grad = bilinear_gradient(g, pts)
        assert np.allclose(grad[:, 0], 1.5, atol=1e-12)
        assert np.allclose(grad[:, 1], 0.0, atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        g = FeatureGrid(rng.normal(size=(1, 8, 8)))
        pts = rng.uniform(-0.85, 0.85, (50, 2))
        grad = bilinear_gradient(g, pts)
        h = 1e-4
        for k, (x, y) in enumerate(pts):
            fd_x = (bilinear_sample(g, (x + h, y))[0, 0] - bilinear_sample(g, (x - h, y))[0, 0]) / (2 * h)
            fd_y = (bilinear_sample(g, (x, y + h))[0, 0] - bilinear_sample(g, (x, y - h))[0, 0]) / (2 * h)
            for got, want in ((grad[k, 0], fd_x), (grad[k, 1], fd_y)):
                scale = max(abs(want), 1e-6)
                assert abs(got - want) / scale <= 1e-4

    def test_zero_normal_derivative_when_clamped(self):
        rng = np.random.default_rng(8)
        g = FeatureGrid(rng.normal(size=(1, 8, 8)))
        grad = bilinear_gradient(g, (1.5, 0.2))
        assert grad[0] == 0.0
        assert grad[1] != 0.0

    def test_single_coord_returns_vector(self):
        g = FeatureGrid.zeros(1, 4, 4)
        assert bilinear_gradient(g, NormCoord(0.1, 0.2)).shape == (2,)

    def test_requires_single_channel(self):
        g = FeatureGrid.zeros(2, 4, 4)
        with pytest.raises(DimensionError):
            bilinear_gradient(g, (0.0, 0.0))


class TestResize:
    def test_identity(self):
        g = FeatureGrid(np.random.default_rng(0).normal(size=(2, 5, 7)))
        out = resize_bilinear(g, 5, 7)
        assert np.array_equal(out.data, g.data)

    def test_upsample_preserves_corners(self):
        g = FeatureGrid(np.random.default_rng(1).normal(size=(1, 4, 4)))
        out = resize_bilinear(g, 9, 9)
        assert out.data[0, 0, 0] == pytest.approx(g.data[0, 0, 0])
        assert out.data[0, -1, -1] == pytest.approx(g.data[0, -1, -1])
        assert out.data[0, 0, -1] == pytest.approx(g.data[0, 0, -1])

    def test_matches_full_bilinear(self):
        g = FeatureGrid(np.random.default_rng(2).normal(size=(3, 6, 5)))
        out = resize_bilinear(g, 11, 8)
        xs = np.linspace(-1, 1, 8)
        ys = np.linspace(-1, 1, 11)
        for i, y in enumerate(ys):
            for j, x in enumerate(xs):
                want = brute_force_sample(g.data, x, y)
                assert np.allclose(out.data[:, i, j], want, atol=1e-9)
