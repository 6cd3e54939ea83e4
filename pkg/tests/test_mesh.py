import numpy as np
import pytest

from esampler.errors import MeshError
from esampler.mesh import (GeometricSchedule, MagnitudeMode, anneal_q,
                           assign_magnitudes, build_grid, load_mesh, save_mesh)
from esampler.targets import TargetDensity, gaussian_unimodal


def constant_target(value=1.0, dim=2):
    return TargetDensity(name="const", dim=dim, scale="density",
                         fn=lambda x: np.full(x.shape[:-1], float(value)))


def lookup_log_target(mapping):
    """1D target whose log density is read off a lookup table of grid x values."""
    def fn(x):
        out = np.empty(x.shape[:-1])
        flat = x.reshape(-1, x.shape[-1])
        for i, xi in enumerate(flat):
            out.flat[i] = mapping[round(float(xi[0]), 6)]
        return out
    return TargetDensity(name="lookup", dim=1, scale="log", fn=fn)


class TestBuildGrid:
    def test_three_by_three(self):
        g = build_grid([(0, 1), (0, 1)], (3, 3))
        expected = [(a, b) for a in (0, 0.5, 1) for b in (0, 0.5, 1)]
        np.testing.assert_allclose(g.points, expected)

    def test_endpoints_only(self):
        g = build_grid([(0, 1)], (2,))
        np.testing.assert_allclose(g.points, [[0.0], [1.0]])

    def test_lv_scale_point_count(self):
        g = build_grid([(0.001, 1.0), (0.001, 0.05), (0.001, 0.05), (0.001, 1.0)],
                       (40, 20, 20, 40))
        assert g.n_points == 640000
        assert g.points.shape == (640000, 4)

    def test_row_major_order(self):
        g = build_grid([(0, 1), (0, 10)], (2, 3))
        np.testing.assert_allclose(g.points[:3, 0], [0, 0, 0])
        np.testing.assert_allclose(g.points[:3, 1], [0, 5, 10])

    def test_count_below_two_rejected(self):
        with pytest.raises(MeshError):
            build_grid([(0, 1)], (1,))

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(MeshError):
            build_grid([(1, 1)], (3,))


class TestAssignMagnitudes:
    def test_log_offset_subtracts_minimum(self):
        target = lookup_log_target({0.0: -5.0, 0.5: -2.0, 1.0: -1.0})
        g = assign_magnitudes(build_grid([(0, 1)], (3,)), target,
                              MagnitudeMode.LOG_DENSITY_OFFSET, 1.0)
        np.testing.assert_allclose(g.magnitudes, [0.0, 3.0, 4.0])
        assert g.magnitudes.min() == 0.0

    def test_constant_density_normalised_to_qmax(self):
        g = assign_magnitudes(build_grid([(0, 1), (0, 1)], (4, 4)), constant_target(0.37),
                              MagnitudeMode.NORMALIZED_DENSITY, 2.5)
        np.testing.assert_allclose(g.magnitudes, 2.5)

    def test_density_mode_scales_raw_density(self):
        g = assign_magnitudes(build_grid([(0, 1), (0, 1)], (4, 4)), constant_target(0.37),
                              MagnitudeMode.DENSITY, 2.0)
        np.testing.assert_allclose(g.magnitudes, 0.74)

    def test_unimodal_argmax_at_centre_gridpoint(self):
        target = gaussian_unimodal()
        g = assign_magnitudes(build_grid([(0, 1), (0, 1)], (50, 50)), target,
                              MagnitudeMode.DENSITY, 1.0)
        centre = np.array([0.5, 0.5])
        # brute-force: the winning grid point must be the one nearest the mode
        dist = np.linalg.norm(g.points - centre, axis=1)
        assert np.argmax(g.magnitudes) in np.flatnonzero(dist == dist.min())

    def test_invalid_points_get_zero(self):
        target = TargetDensity(name="halfplane", dim=2, scale="density",
                               fn=lambda x: np.ones(x.shape[:-1]),
                               valid_fn=lambda x: x[..., 0] > 0.4)
        g = assign_magnitudes(build_grid([(0, 1), (0, 1)], (3, 3)), target,
                              MagnitudeMode.DENSITY, 1.0)
        invalid = g.points[:, 0] <= 0.4
        assert (g.magnitudes[invalid] == 0).all()
        assert (g.magnitudes[~invalid] == 1).all()

    def test_all_invalid_rejected(self):
        target = TargetDensity(name="never", dim=1, scale="density",
                               fn=lambda x: np.ones(x.shape[:-1]),
                               valid_fn=lambda x: np.zeros(x.shape[:-1], dtype=bool))
        with pytest.raises(MeshError):
            assign_magnitudes(build_grid([(0, 1)], (3,)), target, MagnitudeMode.DENSITY, 1.0)

    def test_negative_density_rejected(self):
        bad = TargetDensity(name="bad", dim=1, scale="density",
                            fn=lambda x: -np.ones(x.shape[:-1]))
        with pytest.raises(MeshError):
            assign_magnitudes(build_grid([(0, 1)], (3,)), bad, MagnitudeMode.DENSITY, 1.0)

    def test_qmax_positive_required(self):
        with pytest.raises(MeshError):
            assign_magnitudes(build_grid([(0, 1)], (3,)), constant_target(dim=1),
                              MagnitudeMode.DENSITY, 0.0)

    def test_log_offset_invariant_under_rescaling(self):
        base = gaussian_unimodal()
        scaled = TargetDensity(name="scaled", dim=2, scale="density",
                               fn=lambda x: 37.5 * base.density(x))
        grid = build_grid([(0, 1), (0, 1)], (10, 10))
        a = assign_magnitudes(grid, base, MagnitudeMode.LOG_DENSITY_OFFSET, 1.0)
        b = assign_magnitudes(grid, scaled, MagnitudeMode.LOG_DENSITY_OFFSET, 1.0)
        np.testing.assert_allclose(a.magnitudes, b.magnitudes, rtol=1e-9, atol=1e-12)
        assert a.magnitudes.min() == 0.0

    def test_nonnegativity_across_modes(self):
        target = gaussian_unimodal()
        grid = build_grid([(0, 1), (0, 1)], (8, 8))
        for mode in MagnitudeMode:
            g = assign_magnitudes(grid, target, mode, 1.7)
            assert (g.magnitudes >= 0).all()
            annealed = anneal_q(g, GeometricSchedule(0.9, 0.1), 13)
            assert (annealed.magnitudes >= 0).all()


class TestAnnealing:
    def setup_method(self):
        self.mesh = assign_magnitudes(build_grid([(0, 1)], (4,)), constant_target(dim=1),
                                      MagnitudeMode.DENSITY, 1.0)

    def test_identity_schedule(self):
        out = anneal_q(self.mesh, lambda t: 1.0, 5)
        np.testing.assert_array_equal(out.magnitudes, self.mesh.magnitudes)

    def test_geometric_decay_value(self):
        sched = GeometricSchedule(gamma=0.99, floor=0.01)
        assert sched(100) == pytest.approx(0.99 ** 100, rel=1e-12)
        assert 0.99 ** 100 == pytest.approx(0.3660323, rel=1e-6)

    def test_floor_applies(self):
        sched = GeometricSchedule(gamma=0.5, floor=0.1)
        assert sched(50) == 0.1

    def test_zero_multiplier_rejected_at_construction(self):
        with pytest.raises(MeshError):
            GeometricSchedule(gamma=0.0)

    def test_out_of_range_multiplier_rejected(self):
        with pytest.raises(MeshError):
            anneal_q(self.mesh, lambda t: 0.0, 1)

    def test_base_cache_untouched(self):
        before = self.mesh.magnitudes.copy()
        anneal_q(self.mesh, lambda t: 0.5, 3)
        np.testing.assert_array_equal(self.mesh.magnitudes, before)


class TestGridIndexing:
    def test_round_trip_bijection_reduced_lv_grid(self):
        g = build_grid([(0.001, 1.0), (0.001, 0.05), (0.001, 0.05), (0.001, 1.0)],
                       (16, 8, 8, 16))
        for flat in range(g.n_points):
            assert g.flat_index(g.multi_index(flat)) == flat
        # and the other direction on the corners
        for multi in [(0, 0, 0, 0), (15, 7, 7, 15), (3, 4, 5, 6)]:
            assert g.multi_index(g.flat_index(multi)) == multi


class TestPersistence:
    def test_save_load_bit_exact(self, tmp_path):
        target = gaussian_unimodal()
        g = assign_magnitudes(build_grid([(0, 1), (0, 1)], (20, 20)), target,
                              MagnitudeMode.NORMALIZED_DENSITY, 0.55)
        path = tmp_path / "mesh.npz"
        save_mesh(g, path, target_id=target.name)
        loaded = load_mesh(path, expect_target_id=target.name)
        np.testing.assert_array_equal(loaded.magnitudes, g.magnitudes)
        np.testing.assert_array_equal(loaded.points, g.points)
        assert loaded.counts == g.counts
        assert loaded.bounds == g.bounds
        assert loaded.q_max == g.q_max
        assert loaded.mode == g.mode

    def test_target_key_mismatch(self, tmp_path):
        g = assign_magnitudes(build_grid([(0, 1)], (3,)), constant_target(dim=1),
                              MagnitudeMode.DENSITY, 1.0)
        save_mesh(g, tmp_path / "m.npz", target_id="const")
        with pytest.raises(MeshError):
            load_mesh(tmp_path / "m.npz", expect_target_id="something-else")

    def test_unassigned_mesh_not_persistable(self, tmp_path):
        with pytest.raises(MeshError):
            save_mesh(build_grid([(0, 1)], (3,)), tmp_path / "m.npz")
