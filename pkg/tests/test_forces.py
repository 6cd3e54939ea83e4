import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esampler import forces
from esampler.errors import (ForceAssemblyError, InvalidDimensionError,
                             SingularityError)
from esampler.forces import (assemble_forces, coulomb_constant, normalize_forces,
                             pairwise_force, repulsive_force, attractive_force)
from esampler.mesh import build_grid
from esampler.targets import TargetDensity

EPS0 = 8.854e-12


def make_mesh(bounds, counts, magnitudes):
    grid = build_grid(bounds, counts)
    return grid.__class__(bounds=grid.bounds, counts=grid.counts, points=grid.points,
                          magnitudes=np.ascontiguousarray(magnitudes, dtype=float))


def brute_force_oracle(pos, grid, charges=None):
    """Straightforward double-loop force sum, independent of the kernels."""
    n, d = pos.shape
    const = coulomb_constant(d)
    floor = grid.singularity_floor()
    q = np.ones(n) if charges is None else charges
    out = np.zeros((n, d))
    for j in range(n):
        rep = np.zeros(d)
        for i in range(n):
            diff = pos[j] - pos[i]
            r = math.sqrt(float((diff * diff).sum()))
            if r == 0.0:
                continue
            r = max(r, floor)
            rd = r
            for _ in range(d - 1):
                rd = rd * r
            rep += ((const * q[i]) * q[j]) / rd * diff
        att = np.zeros(d)
        for i in range(grid.n_points):
            diff = pos[j] - grid.points[i]
            r = math.sqrt(float((diff * diff).sum()))
            if r == 0.0:
                continue
            r = max(r, floor)
            rd = r
            for _ in range(d - 1):
                rd = rd * r
            att += ((const * grid.magnitudes[i]) * 1.0) / rd * diff
        out[j] = rep - att
    return out


class TestCoulombConstant:
    def test_1d_matches_half_inverse_permittivity(self):
        assert coulomb_constant(1) == pytest.approx(1 / (2 * EPS0), rel=1e-14)

    def test_2d_gamma_one(self):
        assert coulomb_constant(2) == pytest.approx(1 / (2 * math.pi * EPS0), rel=1e-14)

    def test_3d_reduces_to_quarter_form(self):
        # Gamma(3/2) = sqrt(pi)/2, so the constant collapses to 1/(4 pi eps0)
        expected = (math.sqrt(math.pi) / 2) / (2 * math.pi ** 1.5 * EPS0)
        assert expected == pytest.approx(1 / (4 * math.pi * EPS0), rel=1e-15)
        assert coulomb_constant(3) == pytest.approx(expected, rel=1e-14)
        assert coulomb_constant(3) == pytest.approx(8.988e9, rel=1e-3)

    def test_positive_for_many_dims(self):
        for d in range(1, 12):
            assert coulomb_constant(d) > 0

    def test_zero_dimension_rejected(self):
        with pytest.raises(InvalidDimensionError):
            coulomb_constant(0)


class TestPairwiseForce:
    def test_unit_charges_at_unit_distance_2d(self):
        f = pairwise_force([0.0, 0.0], [1.0, 0.0], 1.0, 1.0, 2)
        assert f == pytest.approx([coulomb_constant(2), 0.0], rel=1e-14)

    def test_square_centroid_cancels(self):
        corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
        centre = np.array([0.5, 0.5])
        total = sum(pairwise_force(c, centre, 1.0, 1.0, 2) for c in corners)
        assert np.linalg.norm(total) < 1e-12 * coulomb_constant(2)

    def test_newtons_third_law(self):
        rng = np.random.default_rng(3)
        for d in (1, 2, 3, 5):
            a, b = rng.normal(size=(2, d))
            f_ab = pairwise_force(a, b, 1.3, 0.7, d)
            f_ba = pairwise_force(b, a, 0.7, 1.3, d)
            np.testing.assert_allclose(f_ab, -f_ba, rtol=1e-12)

    def test_coincident_points_raise(self):
        with pytest.raises(SingularityError):
            pairwise_force([1.0, 2.0], [1.0, 2.0], 1.0, 1.0, 2)


class TestRepulsiveForce:
    def test_single_particle_zero(self):
        f = repulsive_force(0, np.zeros((1, 2)))
        np.testing.assert_array_equal(f, np.zeros(2))

    def test_two_unit_particles(self):
        pos = np.array([[0.0, 0.0], [1.0, 0.0]])
        f0 = repulsive_force(0, pos)
        f1 = repulsive_force(1, pos)
        assert np.linalg.norm(f0) == pytest.approx(coulomb_constant(2), rel=1e-12)
        np.testing.assert_allclose(f0, -f1, rtol=1e-12)

    def test_lattice_interior_near_cancellation(self):
        axes = np.linspace(0, 1, 5)
        pos = np.stack(np.meshgrid(axes, axes, indexing="ij"), -1).reshape(-1, 2)
        centre = 12  # (0.5, 0.5), centre of the 5x5 lattice
        f = repulsive_force(centre, pos)
        edge = repulsive_force(0, pos)
        assert np.linalg.norm(f) < 1e-10 * np.linalg.norm(edge)

    def test_nonpositive_charge_rejected(self):
        with pytest.raises(ForceAssemblyError):
            repulsive_force(0, np.zeros((2, 2)), neg_charges=[1.0, -1.0])


class TestAttractiveForce:
    def test_zero_magnitudes_zero_force(self):
        grid = make_mesh([(0, 1), (0, 1)], (3, 3), np.zeros(9))
        f = attractive_force(0, np.array([[0.3, 0.4]]), grid)
        np.testing.assert_array_equal(f, np.zeros(2))

    def test_single_charge_magnitude_and_direction(self):
        grid = make_mesh([(0, 1)], (2,), [5.0, 0.0])
        r = 0.25
        f = attractive_force(0, np.array([[r]]), grid)
        assert f[0] == pytest.approx(-5.0 * coulomb_constant(1), rel=1e-12)

    def test_equidistant_pair_cancels_on_axis(self):
        grid = make_mesh([(0, 1), (0, 1)], (2, 2), [1.0, 0.0, 0.0, 1.0])
        # charges at (0,0) and (1,1); midpoint is equidistant
        f = attractive_force(0, np.array([[0.5, 0.5]]), grid)
        assert np.linalg.norm(f) < 1e-12 * coulomb_constant(2)

    def test_particle_on_grid_point_skipped(self):
        grid = make_mesh([(0, 1), (0, 1)], (2, 2), np.ones(4))
        f = attractive_force(0, np.array([[0.0, 0.0]]), grid)
        assert np.isfinite(f).all()


class TestAssembleForces:
    def test_normalize_example(self):
        f = normalize_forces(np.array([[3.0, 4.0], [0.0, 0.0]]))
        np.testing.assert_allclose(f, [[0.6, 0.8], [0.0, 0.0]], rtol=1e-15)

    def test_normalize_all_zero_guarded(self):
        f = normalize_forces(np.zeros((3, 2)))
        np.testing.assert_array_equal(f, np.zeros((3, 2)))

    def test_symmetric_layout_respects_symmetry(self):
        grid = make_mesh([(-1, 1), (-1, 1)], (5, 5), np.ones(25))
        s = 0.4
        pos = np.array([[s, s], [-s, s], [-s, -s], [s, -s]])
        f = assemble_forces(pos, grid)
        # 90-degree rotation maps particle k to particle (k+1) % 4
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        for k in range(4):
            np.testing.assert_allclose(f[(k + 1) % 4], f[k] @ rot.T, rtol=1e-9, atol=1e-9 * np.abs(f).max())

    def test_brute_force_equality_small_ensembles(self):
        rng = np.random.default_rng(8)
        grid = make_mesh([(0, 1), (0, 1)], (3, 3), rng.uniform(0.1, 2.0, 9))
        for n in (1, 2, 7, 10):
            pos = np.ascontiguousarray(rng.uniform(-0.2, 1.2, (n, 2)))
            expected = brute_force_oracle(pos, grid)
            got = assemble_forces(pos, grid)
            np.testing.assert_array_equal(got, expected)

    def test_backends_bit_identical(self):
        if "compiled" not in forces.available_backends():
            pytest.skip("compiled kernel not built")
        rng = np.random.default_rng(5)
        grid = make_mesh([(0, 1), (0, 1), (0, 1)], (4, 4, 4), rng.uniform(0, 1, 64))
        pos = np.ascontiguousarray(rng.uniform(0, 1, (37, 3)))
        prev = forces.active_backend()
        try:
            forces.use_backend("compiled")
            fc = assemble_forces(pos, grid)
            forces.use_backend("python")
            fp = assemble_forces(pos, grid)
        finally:
            forces.use_backend(prev)
        np.testing.assert_array_equal(fc, fp)

    def test_workers_deterministic(self):
        rng = np.random.default_rng(6)
        grid = make_mesh([(0, 1), (0, 1)], (6, 6), rng.uniform(0, 1, 36))
        pos = np.ascontiguousarray(rng.uniform(0, 1, (101, 2)))
        np.testing.assert_array_equal(assemble_forces(pos, grid, workers=1),
                                      assemble_forces(pos, grid, workers=4))

    def test_coincident_particles_survive_via_clamp(self):
        grid = make_mesh([(0, 1), (0, 1)], (3, 3), np.ones(9))
        pos = np.array([[0.3, 0.3], [0.3, 0.3], [0.7, 0.2]])
        f = assemble_forces(pos, grid)
        assert np.isfinite(f).all()

    def test_nonfinite_input_names_particle(self):
        grid = make_mesh([(0, 1), (0, 1)], (3, 3), np.ones(9))
        pos = np.array([[0.2, 0.2], [np.nan, 0.5]])
        with pytest.raises(ForceAssemblyError, match="particle 0|particle 1"):
            assemble_forces(pos, grid)

    def test_unset_magnitudes_rejected(self):
        grid = build_grid([(0, 1), (0, 1)], (3, 3))
        with pytest.raises(ForceAssemblyError):
            assemble_forces(np.array([[0.5, 0.5]]), grid)


finite_coord = st.floats(min_value=-50, max_value=50, allow_nan=False)


class TestForceLawProperties:
    @given(st.lists(finite_coord, min_size=2, max_size=2),
           st.lists(finite_coord, min_size=2, max_size=2))
    @settings(max_examples=50, deadline=None)
    def test_antisymmetry(self, a, b):
        a, b = np.array(a), np.array(b)
        if np.allclose(a, b):
            return
        f_ab = pairwise_force(a, b, 1.0, 1.0, 2)
        f_ba = pairwise_force(b, a, 1.0, 1.0, 2)
        np.testing.assert_allclose(f_ab, -f_ba, rtol=1e-12, atol=0)

    @given(st.lists(finite_coord, min_size=3, max_size=3),
           st.lists(finite_coord, min_size=3, max_size=3),
           st.lists(finite_coord, min_size=3, max_size=3))
    @settings(max_examples=50, deadline=None)
    def test_translation_invariance(self, a, b, shift):
        a, b, shift = np.array(a), np.array(b), np.array(shift)
        if np.allclose(a, b):
            return
        f = pairwise_force(a, b, 1.0, 1.0, 3)
        f_shifted = pairwise_force(a + shift, b + shift, 1.0, 1.0, 3)
        np.testing.assert_allclose(f, f_shifted, rtol=1e-12,
                                   atol=1e-12 * np.linalg.norm(f))

    @pytest.mark.parametrize("d", [2, 3])
    def test_rotation_equivariance(self, d):
        rng = np.random.default_rng(17)
        for _ in range(10):
            q, _ = np.linalg.qr(rng.normal(size=(d, d)))
            a, b = rng.normal(size=(2, d))
            f = pairwise_force(a, b, 1.0, 1.0, d)
            f_rot = pairwise_force(q @ a, q @ b, 1.0, 1.0, d)
            np.testing.assert_allclose(f_rot, q @ f, rtol=1e-10,
                                       atol=1e-10 * np.linalg.norm(f))

    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
    def test_magnitude_law(self, d):
        # |F| * r^(d-1) must not depend on r
        direction = np.ones(d) / math.sqrt(d)
        values = []
        for r in (0.5, 1.0, 2.0, 4.0):
            f = pairwise_force(np.zeros(d), r * direction, 1.0, 1.0, d)
            values.append(np.linalg.norm(f) * r ** (d - 1))
        values = np.array(values)
        np.testing.assert_allclose(values, values[0], rtol=1e-10)
