import numpy as np
import pytest

from wavescan.asgp import (
    AsgpConfig,
    ProbeSet,
    asgp_gate,
    asgp_weight_spec,
    coarse_potential,
    evolve_probes,
    init_probes,
    probe_grid_coords,
    refine_mask,
    repulsion_forces,
)
from wavescan.errors import DimensionError
from wavescan.grid import FeatureGrid
from wavescan.nn import sigmoid
from wavescan.weights import WeightStore, seeded_init

SIGMOID_1 = 1.0 / (1.0 + np.exp(-1.0))


def zero_store(channels, embed_dim, probes):
    store = WeightStore()
    for name, shape in asgp_weight_spec(channels, embed_dim, probes):
        store[name] = np.zeros(shape)
    return store


def make_probes(coords, embed_dim=4, scores=None):
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    return ProbeSet(
        coords=coords,
        embeddings=np.zeros((n, embed_dim)),
        scores=np.full(n, 0.5) if scores is None else np.asarray(scores, float),
    )


def gaussian_peak_field(size=33, sigma=0.6, center=(0.0, 0.0)):
    xs = np.linspace(-1, 1, size)
    xx, yy = np.meshgrid(xs, xs)
    bump = np.exp(-((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / (2 * sigma ** 2))
    return FeatureGrid((0.1 + 0.8 * bump)[None])


class TestConfig:
    def test_defaults_are_calibrated(self):
        cfg = AsgpConfig()
        assert (cfg.steps, cfg.probes) == (3, 64)
        assert cfg.radius == pytest.approx(0.15)
        assert cfg.grad_gain == pytest.approx(0.1)
        assert cfg.repulsion_gain == pytest.approx(0.05)
        assert cfg.eps == pytest.approx(1e-5)
        assert cfg.blend == pytest.approx(0.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            AsgpConfig(steps=-1)
        with pytest.raises(ValueError):
            AsgpConfig(radius=0.0)
        with pytest.raises(ValueError):
            AsgpConfig(blend=1.5)
        with pytest.raises(ValueError):
            AsgpConfig(probes=0)


class TestProbeSet:
    def test_init_probes_grid_jitter(self):
        emb = np.zeros((64, 4))
        probes = init_probes(64, emb, seed=0)
        assert probes.count == 64
        assert np.all(np.abs(probes.coords) <= 1.0)
        again = init_probes(64, emb, seed=0)
        assert np.array_equal(probes.coords, again.coords)
        other = init_probes(64, emb, seed=1)
        assert not np.array_equal(probes.coords, other.coords)

    def test_grid_spacing_keeps_probes_apart(self):
        coords = probe_grid_coords(64, seed=3)
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff ** 2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        assert dist.min() > 0.05

    def test_coords_outside_range_rejected(self):
        with pytest.raises(ValueError):
            make_probes([[1.2, 0.0]])


class TestCoarsePotential:
    def test_uniform_attention_gives_sigmoid_one(self):
        x = FeatureGrid.zeros(3, 6, 8)
        store = zero_store(3, 4, 2)
        probes = make_probes([[0.0, 0.0], [0.5, -0.5]])
        m0 = coarse_potential(probes, x, store)
        assert m0.shape == (1, 6, 8)
        assert np.abs(m0.data - SIGMOID_1).max() <= 1e-12

    def test_dominant_key_concentrates_mass(self):
        channels, d = 2, 2
        x = FeatureGrid.zeros(channels, 4, 4)
        data = x.data.copy()
        data[:, 2, 3] = 40.0
        x = FeatureGrid(data)
        store = zero_store(channels, d, 1)
        store["asgp.key_w"] = np.eye(d)
        probes = ProbeSet(coords=np.zeros((1, 2)), embeddings=np.ones((1, d)),
                          scores=np.array([0.5]))
        m0 = coarse_potential(probes, x, store)
        assert np.unravel_index(np.argmax(m0.data[0]), (4, 4)) == (2, 3)

    def test_values_in_open_unit_interval_and_probe_order_invariant(self):
        rng = np.random.default_rng(0)
        x = FeatureGrid(rng.normal(size=(3, 8, 8)))
        store = seeded_init(asgp_weight_spec(3, 4, 5), 1)
        emb = rng.normal(size=(5, 4))
        probes = ProbeSet(coords=rng.uniform(-1, 1, (5, 2)), embeddings=emb,
                          scores=np.full(5, 0.5))
        m0 = coarse_potential(probes, x, store)
        assert np.all(m0.data > 0.0) and np.all(m0.data < 1.0)
        perm = rng.permutation(5)
        shuffled = ProbeSet(coords=probes.coords[perm], embeddings=emb[perm],
                            scores=np.full(5, 0.5))
        m0p = coarse_potential(shuffled, x, store)
        assert np.abs(m0.data - m0p.data).max() <= 1e-12


class TestEvolution:
    def test_pure_gradient_step_on_linear_ramp(self):
        # field value 0.5 + 0.2x: normalized-space gradient (0.2, 0)
        w = 9
        xs = np.linspace(-1, 1, w)
        field = FeatureGrid(np.tile(0.5 + 0.2 * xs, (w, 1))[None])
        cfg = AsgpConfig(steps=1)
        store = zero_store(1, 4, 1)
        probes = make_probes([[0.1, -0.2]], embed_dim=4)
        out = evolve_probes(field, FeatureGrid.zeros(1, w, w), probes, cfg, store)
        assert out.coords[0, 0] == pytest.approx(0.1 + 0.02, abs=1e-12)
        assert out.coords[0, 1] == pytest.approx(-0.2, abs=1e-12)

    def test_two_probe_repulsion_displacement(self):
        cfg = AsgpConfig(steps=1)
        store = zero_store(1, 4, 2)
        flat = FeatureGrid.full(1, 9, 9, 0.5)
        probes = make_probes([[-0.0375, 0.0], [0.0375, 0.0]], embed_dim=4)
        out = evolve_probes(flat, FeatureGrid.zeros(1, 9, 9), probes, cfg, store)
        moved = out.coords[:, 0] - probes.coords[:, 0]
        assert abs(moved[0] + 0.025) <= 1e-5
        assert abs(moved[1] - 0.025) <= 1e-5
        separation = out.coords[1, 0] - out.coords[0, 0]
        assert separation == pytest.approx(0.125, abs=2e-5)

    def test_forces_truncate_beyond_radius(self):
        cfg = AsgpConfig()
        forces = repulsion_forces(np.array([[0.0, 0.0], [0.3, 0.0]]), cfg)
        assert np.allclose(forces, 0.0)

    def test_clamp_projects_to_unit_box(self):
        # gradient 0.5 in x pushes the probe past the border; clamp holds it
        w = 9
        xs = np.linspace(-1, 1, w)
        field = FeatureGrid(np.tile(0.25 + 0.5 * (xs + 1) / 2, (w, 1))[None])
        cfg = AsgpConfig(steps=1)
        store = zero_store(1, 4, 1)
        probes = make_probes([[0.999, 0.0]], embed_dim=4)
        out = evolve_probes(field, FeatureGrid.zeros(1, w, w), probes, cfg, store)
        assert out.coords[0, 0] == pytest.approx(1.0)

    def test_coords_stay_in_box_random_weights(self):
        rng = np.random.default_rng(4)
        x = FeatureGrid(rng.normal(size=(3, 16, 16)))
        field = gaussian_peak_field()
        store = seeded_init(asgp_weight_spec(3, 4, 16), 2)
        probes = init_probes(16, store["asgp.probe_embed"], 5)
        cfg = AsgpConfig(steps=5, probes=16)
        trajectory: list[np.ndarray] = []
        evolve_probes(field, x, probes, cfg, store, trajectory=trajectory)
        assert len(trajectory) == 6
        for coords in trajectory:
            assert np.all(np.abs(coords) <= 1.0)

    def test_flat_field_min_distance_non_decreasing(self):
        cfg = AsgpConfig(steps=3, probes=9)
        store = zero_store(1, 4, 9)
        flat = FeatureGrid.full(1, 17, 17, 0.5)
        clump = np.array([
            [0.00, 0.00], [0.05, 0.00], [-0.06, 0.02], [0.02, 0.07],
            [-0.03, -0.06], [0.6, 0.6], [-0.6, 0.6], [0.6, -0.6], [-0.6, -0.6],
        ])
        coords = clump
        def min_dist(c):
            diff = c[:, None, :] - c[None, :, :]
            d = np.sqrt((diff ** 2).sum(-1))
            np.fill_diagonal(d, np.inf)
            return d.min()
        history = [min_dist(coords)]
        probes = make_probes(coords, embed_dim=4)
        trajectory: list[np.ndarray] = []
        evolve_probes(flat, FeatureGrid.zeros(1, 17, 17), probes, cfg, store,
                      trajectory=trajectory)
        dists = [min_dist(c) for c in trajectory]
        for before, after in zip(dists, dists[1:]):
            assert after >= before - 1e-12

    def test_without_repulsion_probes_collapse_to_peak(self):
        field = gaussian_peak_field()
        cfg = AsgpConfig(steps=6, probes=8, repulsion_gain=1e-12)
        store = zero_store(1, 4, 8)
        rng = np.random.default_rng(6)
        start = rng.uniform(-0.8, 0.8, (8, 2))
        probes = make_probes(start, embed_dim=4)
        out = evolve_probes(field, FeatureGrid.zeros(1, 33, 33), probes, cfg, store)
        before = np.sqrt((start ** 2).sum(1)).mean()
        after = np.sqrt((out.coords ** 2).sum(1)).mean()
        assert after < before

    def test_single_probe_ascent_is_monotone(self):
        from wavescan.grid import bilinear_sample

        field = gaussian_peak_field()
        cfg = AsgpConfig(steps=10, probes=1)
        store = zero_store(1, 4, 1)
        probes = make_probes([[0.55, -0.35]], embed_dim=4)
        trajectory: list[np.ndarray] = []
        evolve_probes(field, FeatureGrid.zeros(1, 33, 33), probes, cfg, store,
                      trajectory=trajectory)
        values = [bilinear_sample(field, c)[0, 0] for c in trajectory]
        for before, after in zip(values, values[1:]):
            assert after >= before - 1e-12

    def test_repulsion_resolution_invariant(self):
        # radius is normalized, so the force field ignores grid resolution
        cfg = AsgpConfig(steps=1)
        coords = np.array([[-0.05, 0.0], [0.05, 0.0], [0.3, 0.3]])
        moved = []
        for size in (9, 17, 33):
            store = zero_store(1, 4, 3)
            flat = FeatureGrid.full(1, size, size, 0.5)
            out = evolve_probes(flat, FeatureGrid.zeros(1, size, size),
                                make_probes(coords, 4), cfg, store)
            moved.append(out.coords)
        assert np.abs(moved[0] - moved[1]).max() <= 1e-12
        assert np.abs(moved[1] - moved[2]).max() <= 1e-12


class TestRefineMask:
    def test_zero_scores_give_half(self):
        probes = make_probes([[0.0, 0.0], [0.5, 0.5]], scores=[0.0, 0.0])
        m1 = refine_mask(probes, (6, 6))
        assert np.abs(m1.data - 0.5).max() <= 1e-12

    def test_single_probe_peak_at_center(self):
        probes = make_probes([[0.0, 0.0]], scores=[0.99])
        m1 = refine_mask(probes, (17, 17))
        center = m1.data[0, 8, 8]
        assert center == m1.data.max()
        # radially decreasing along a row
        row = m1.data[0, 8]
        assert np.all(np.diff(row[: 9]) >= -1e-12)
        assert np.all(np.diff(row[8:]) <= 1e-12)

    def test_mirror_symmetric_probes_give_symmetric_mask(self):
        probes = make_probes([[-0.4, 0.2], [0.4, 0.2]], scores=[0.7, 0.7])
        m1 = refine_mask(probes, (16, 16))
        assert np.abs(m1.data - m1.data[:, :, ::-1]).max() <= 1e-6


class TestGate:
    def test_zero_masks_halve_bands(self):
        m0 = FeatureGrid.zeros(1, 4, 4)
        m1 = FeatureGrid.zeros(1, 4, 4)
        band = FeatureGrid(np.random.default_rng(0).normal(size=(2, 4, 4)))
        gated = asgp_gate(m0, m1, [band])
        assert np.abs(gated[0].data - 0.5 * band.data).max() <= 1e-12

    def test_blend_formula(self):
        m0 = FeatureGrid.full(1, 2, 2, 0.8)
        m1 = FeatureGrid.full(1, 2, 2, 0.4)
        band = FeatureGrid(np.ones((1, 2, 2)))
        gated = asgp_gate(m0, m1, [band])
        want = 1.0 / (1.0 + np.exp(-0.6))
        assert np.abs(gated[0].data - want).max() <= 1e-9

    def test_zero_bands_stay_zero(self):
        m0 = FeatureGrid.full(1, 4, 4, 0.9)
        m1 = FeatureGrid.full(1, 4, 4, 0.1)
        gated = asgp_gate(m0, m1, [FeatureGrid.zeros(3, 4, 4)])
        assert np.all(gated[0].data == 0.0)

    def test_full_resolution_masks_are_pooled(self):
        rng = np.random.default_rng(1)
        m0 = FeatureGrid(rng.uniform(size=(1, 8, 8)))
        m1 = FeatureGrid(rng.uniform(size=(1, 8, 8)))
        band = FeatureGrid(rng.normal(size=(1, 4, 4)))
        gated = asgp_gate(m0, m1, [band])
        from wavescan.nn import avg_pool_2x2

        gate = sigmoid(0.5 * avg_pool_2x2(m1.data) + 0.5 * avg_pool_2x2(m0.data))
        assert np.abs(gated[0].data - band.data * gate).max() <= 1e-12

    def test_gate_never_flips_sign_and_stays_in_unit_interval(self):
        rng = np.random.default_rng(2)
        m0 = FeatureGrid(rng.uniform(size=(1, 6, 6)))
        m1 = FeatureGrid(rng.uniform(size=(1, 6, 6)))
        band = FeatureGrid(rng.normal(size=(2, 6, 6)))
        gated = asgp_gate(m0, m1, [band])[0]
        assert np.all(np.sign(gated.data) == np.sign(band.data))
        ratio = gated.data[band.data != 0] / band.data[band.data != 0]
        assert np.all(ratio > 0.0) and np.all(ratio < 1.0)

    def test_mismatched_masks_rejected(self):
        with pytest.raises(DimensionError):
            asgp_gate(FeatureGrid.zeros(1, 5, 5), FeatureGrid.zeros(1, 4, 4),
                      [FeatureGrid.zeros(1, 4, 4)])
