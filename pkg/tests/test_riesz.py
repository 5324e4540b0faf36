"""Vector fractional kernels: truncations, operator constants, reversal."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import atoms, box, random_measure, unit_grid
from twoweight.calibration import (REVERSAL_COMBOS, frozen_bound,
                                   reversal_instances)
from twoweight.haar import HaarSystem
from twoweight.measure import DiscreteMeasure
from twoweight.poisson import FracParams, poisson_m_weighted, poisson_standard
from twoweight.quasigeom import make_map
from twoweight.riesz import testing_constant as t_constant
from twoweight.riesz import testing_constant_dual as t_constant_dual
from twoweight.riesz import (TruncationProfile, apply_truncated,
                             energy_reversal_check, haar_riesz_companion,
                             kernel_ellipticity_check,
                             kernel_gradient_constant, kernel_size_constant,
                             monotonicity_functional, operator_matrix,
                             operator_norm, pivotal_bound_check,
                             reversal_admissible, reversal_double_sum,
                             riesz_field, riesz_gradient,
                             riesz_gradient_trace_check, riesz_kernel,
                             semiharmonic_laplacian, strong_ellipticity_check,
                             tangent_truncation, truncation_constant,
                             truncation_difference_bound, truncation_majorant,
                             weak_boundedness)

ALL_KINDS = ("tangent-line", "cutoff", "smooth")


class TestKernel:
    def test_unit_offset_1d(self):
        assert riesz_kernel(np.array([1.0]), FracParams(1, 0.0))[0] == 1.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.floats(0.0, 0.9), st.integers(0, 2 ** 31 - 1))
    def test_odd(self, dim, afrac, seed):
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(dim)
        params = FracParams(dim, afrac * dim)
        np.testing.assert_allclose(riesz_kernel(-w, params),
                                   -riesz_kernel(w, params), rtol=1e-13)

    def test_three_four_five(self):
        vals = riesz_kernel(np.array([3.0, 4.0]), FracParams(2, 0.0))
        np.testing.assert_allclose(vals, [3.0 / 125.0, 4.0 / 125.0],
                                   rtol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.floats(0.0, 0.9), st.integers(0, 2 ** 31 - 1))
    def test_size_estimate(self, dim, afrac, seed):
        rng = np.random.default_rng(seed)
        params = FracParams(dim, afrac * dim)
        w = rng.standard_normal(dim) * np.exp(rng.uniform(-3, 3))
        r = np.linalg.norm(w)
        bound = kernel_size_constant(params) * r ** (params.alpha - dim)
        assert np.linalg.norm(riesz_kernel(w, params)) <= bound * (1 + 1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.floats(0.0, 0.9), st.integers(0, 2 ** 31 - 1))
    def test_gradient_estimate_and_fd(self, dim, afrac, seed):
        rng = np.random.default_rng(seed)
        params = FracParams(dim, afrac * dim)
        w = rng.standard_normal(dim)
        w *= np.exp(rng.uniform(-1, 1)) / np.linalg.norm(w)
        r = float(np.linalg.norm(w))
        h = 1e-6 * r
        jac = np.zeros((dim, dim))
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = h
            jac[:, j] = (riesz_kernel(w + e, params) -
                         riesz_kernel(w - e, params)) / (2 * h)
        # analytic Jacobian of w |w|^{alpha-n-1}
        unit = w / r
        expo = params.alpha - dim
        analytic = r ** (expo - 1) * (
            np.eye(dim) + (expo - 1) * np.outer(unit, unit))
        np.testing.assert_allclose(jac, analytic, rtol=1e-5, atol=1e-8)
        bound = kernel_gradient_constant(params) * r ** (expo - 1)
        spect = float(np.linalg.svd(analytic, compute_uv=False)[0])
        assert spect <= bound * (1 + 1e-12)


class TestTruncationProfiles:
    def test_tangent_closed_form(self):
        prof = TruncationProfile(0.25, 1.0, 0.0, 1)
        assert prof.S == pytest.approx(2.0, rel=1e-14)
        assert tangent_truncation(1.5, prof) == pytest.approx(0.5, rel=1e-13)
        assert tangent_truncation(prof.S, prof) == pytest.approx(0.0, abs=1e-13)
        assert prof(0.0) == 0.0

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_exact_on_window(self, kind):
        prof = TruncationProfile(0.25, 2.0, 0.5, 2, kind=kind)
        rs = np.linspace(0.25, 2.0, 101)
        np.testing.assert_allclose(prof(rs), rs ** (0.5 - 2.0), rtol=1e-14)

    def test_difference_zero_on_window(self):
        prof = TruncationProfile(0.25, 1.0, 0.0, 1)
        lhs, _ = truncation_difference_bound(np.array([0.6]), prof)
        assert lhs == 0.0

    def test_difference_zero_beyond_support(self):
        prof = TruncationProfile(0.25, 1.0, 0.0, 1)
        lhs, _ = truncation_difference_bound(np.array([prof.S + 0.3]), prof)
        assert lhs == 0.0

    def test_difference_at_mid_tail(self):
        prof = TruncationProfile(0.25, 1.0, 0.0, 1)
        lhs, rhs = truncation_difference_bound(np.array([1.5]), prof)
        # tangent value 0.5 vs sharp cutoff 0
        assert lhs == pytest.approx(0.5, rel=1e-13)
        assert 0.0 < lhs <= rhs

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @settings(max_examples=30, deadline=None)
    @given(st.floats(-4.0, 4.0))
    def test_majorant_pointwise(self, kind, logr):
        prof = TruncationProfile(0.25, 1.0, 0.5, 2, kind=kind)
        r = float(np.exp(logr))
        sharp = r ** (prof.alpha - prof.n) if prof.delta <= r <= prof.R else 0.0
        diff = abs(prof(r) - sharp)
        bound = truncation_constant(prof) * truncation_majorant(r, prof)
        assert diff <= bound * (1 + 1e-12)

    def test_constant_value_1d(self):
        prof = TruncationProfile(0.25, 1.0, 0.0, 1)
        assert truncation_constant(prof) == pytest.approx(4.0, rel=1e-12)


class TestApplyTruncated:
    def prof(self):
        return TruncationProfile(0.1, 10.0, 0.0, 1)

    def test_empty_measure(self):
        mu = DiscreteMeasure.empty(1)
        out = apply_truncated(mu, np.array([0.0]), self.prof())
        assert np.all(out == 0.0)

    def test_single_atom_closed_form(self):
        mu = atoms([[0.0]], [2.0])
        out = apply_truncated(mu, np.array([0.5]), self.prof())
        # psi(0.5) = 1/0.5 = 2 on the exact window, times mass 2
        assert out[0] == pytest.approx(4.0, rel=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 5.0), st.integers(0, 2 ** 31 - 1))
    def test_mass_linearity(self, scale, seed):
        rng = np.random.default_rng(seed)
        mu = atoms(rng.uniform(-2, 2, (5, 1)), rng.uniform(0.1, 2, 5))
        scaled = DiscreteMeasure(mu.points, scale * mu.masses)
        x = np.array([7.0])
        a = apply_truncated(mu, x, self.prof())
        b = apply_truncated(scaled, x, self.prof())
        np.testing.assert_allclose(b, scale * a, rtol=1e-12)


class TestOperatorMatrix:
    def test_one_by_one(self):
        sigma = atoms([[0.0]], [1.0])
        omega = atoms([[1.0]], [1.0])
        prof = TruncationProfile(0.1, 10.0, 0.0, 1)
        assert operator_norm(sigma, omega, prof) == pytest.approx(1.0,
                                                                  rel=1e-13)

    def test_empty_omega(self):
        sigma = atoms([[0.0]], [1.0])
        prof = TruncationProfile(0.1, 10.0, 0.0, 1)
        assert operator_norm(sigma, DiscreteMeasure.empty(1), prof) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_monotone_in_masses(self, seed):
        rng = np.random.default_rng(seed)
        sigma = atoms(rng.uniform(-1, 1, (6, 2)), rng.uniform(0.5, 2, 6))
        omega = atoms(rng.uniform(-1, 1, (6, 2)), rng.uniform(0.5, 2, 6))
        prof = TruncationProfile(0.05, 20.0, 0.5, 2)
        base = operator_norm(sigma, omega, prof)
        i = int(rng.integers(0, 6))
        cut = sigma.with_mass(i, sigma.masses[i] * float(rng.uniform(0, 1)))
        assert operator_norm(cut, omega, prof) <= base + 1e-10
        j = int(rng.integers(0, 6))
        cut_o = omega.with_mass(j, omega.masses[j] * float(rng.uniform(0, 1)))
        assert operator_norm(sigma, cut_o, prof) <= base + 1e-10


class TestTestingConstant:
    def test_two_atom_oracle(self):
        sigma = atoms([[0.5]], [1.0])
        omega = atoms([[0.75]], [1.0])
        prof = TruncationProfile(0.01, 100.0, 0.0, 1)
        q = box(0.0, 1.0, 1)
        val = t_constant(sigma, omega, prof, [q])
        assert val ** 2 == pytest.approx(16.0, rel=1e-12)

    def test_omega_outside_family(self):
        sigma = atoms([[0.5]], [1.0])
        omega = atoms([[5.0]], [1.0])
        prof = TruncationProfile(0.01, 100.0, 0.0, 1)
        assert t_constant(sigma, omega, prof, [box(0.0, 1.0, 1)]) == 0.0

    def test_dual_swaps(self, rng):
        grid = unit_grid(2, depth=2)
        sigma = random_measure(grid, rng, 8)
        omega = random_measure(grid, rng, 8)
        prof = TruncationProfile(0.01, 50.0, 0.5, 2)
        family = grid.active_cubes(sigma, omega)
        assert t_constant_dual(sigma, omega, prof, family) == \
            pytest.approx(t_constant(omega, sigma, prof, family),
                          rel=1e-13)


class TestWeakBoundedness:
    def test_zero_measures(self):
        prof = TruncationProfile(0.1, 10.0, 0.0, 1)
        pair = (box(0.0, 1.0, 1), box(1.0, 1.0, 1))
        assert weak_boundedness(DiscreteMeasure.empty(1),
                                DiscreteMeasure.empty(1), prof, [pair]) == 0.0

    def test_neighbouring_intervals_closed_form(self):
        sigma = atoms([[0.5]], [1.0])
        omega = atoms([[1.5]], [1.0])
        prof = TruncationProfile(0.1, 10.0, 0.0, 1)
        pair = (box(1.0, 1.0, 1), box(0.0, 1.0, 1))
        val = weak_boundedness(sigma, omega, prof, [pair])
        assert val == pytest.approx(1.0, rel=1e-13)

    def test_symmetric_pair_order(self, rng):
        sigma = atoms(rng.uniform(0, 1, (4, 1)), rng.uniform(0.5, 2, 4))
        omega = atoms(rng.uniform(1, 2, (4, 1)), rng.uniform(0.5, 2, 4))
        prof = TruncationProfile(0.05, 20.0, 0.0, 1)
        a, b = box(0.0, 1.0, 1), box(1.0, 1.0, 1)
        assert weak_boundedness(sigma, omega, prof, [(a, b)]) == \
            pytest.approx(weak_boundedness(sigma, omega, prof, [(b, a)]),
                          rel=1e-13)


class TestMonotonicityFunctional:
    def test_single_omega_atom(self):
        grid = unit_grid(1, depth=2, center=[0.5])
        omega = atoms([[0.25]], [1.0])
        mu = atoms([[3.0]], [2.0])
        phi = monotonicity_functional(grid.top(), omega, mu,
                                      FracParams(1, 0.0), grid)
        assert phi == 0.0

    def test_two_atom_closed_form(self):
        grid = unit_grid(1, depth=1, center=[0.5])
        omega = atoms([[0.25], [0.75]], [1.0, 1.0])
        mu = atoms([[3.0]], [2.0])
        params = FracParams(1, 0.0)
        phi = monotonicity_functional(grid.top(), omega, mu, params, grid)
        top = grid.top()
        p1 = poisson_standard(top, mu, params)
        p2 = poisson_m_weighted(top, mu, params, 2.0)
        expect = np.sqrt(p1 ** 2 * 0.125 + p2 ** 2 * 0.125)
        assert phi == pytest.approx(expect, rel=1e-12)

    def test_linearity_in_charge(self, rng):
        grid = unit_grid(1, depth=2, center=[0.5])
        omega = random_measure(grid, rng, 6)
        mu = atoms([[4.0], [-3.0]], [1.0, 2.0])
        params = FracParams(1, 0.0)
        phi = monotonicity_functional(grid.top(), omega, mu, params, grid)
        tripled = DiscreteMeasure(mu.points, 3.0 * mu.masses)
        phi3 = monotonicity_functional(grid.top(), omega, tripled, params,
                                       grid)
        assert phi3 == pytest.approx(3.0 * phi, rel=1e-12)

    def test_rejects_nearby_charge(self):
        grid = unit_grid(1, depth=2, center=[0.5])
        omega = atoms([[0.25], [0.75]])
        mu = atoms([[1.2]], [1.0])
        with pytest.raises(ValueError):
            monotonicity_functional(grid.top(), omega, mu, FracParams(1, 0.0),
                                    grid)

    def test_companion_bound_sampled(self):
        bound = frozen_bound("companion")
        grid = unit_grid(2, depth=3)
        rng = np.random.default_rng(31)
        omega = random_measure(grid, rng, 20)
        from twoweight.corpus import exterior_measure
        mu = exterior_measure(grid, rng, 5)
        system = HaarSystem(grid, omega)
        params = FracParams(2, 0.5)
        checked = 0
        for key in system.bases:
            cube = grid.cube(*key)
            if key[0] < 1 or cube.dilate(2.0).contains_points(mu.points).any():
                continue
            coef, phi = haar_riesz_companion(cube, omega, mu, params, grid,
                                             system=system)
            if phi > 0.0:
                assert coef <= bound * phi
                checked += 1
        assert checked > 0


class TestPivotalBound:
    def make_instance(self):
        grid = unit_grid(1, depth=1, center=[0.5])
        omega = atoms([[0.25], [0.75]], [1.0, 3.0])
        nu = atoms([[9.0]], [1.0])
        system = HaarSystem(grid, omega)
        basis = system.bases[grid.top().key]
        psi = np.array([basis.funcs[0, 0], basis.funcs[0, 1]])
        return grid, omega, nu, psi

    def test_zero_psi(self):
        grid, omega, nu, _ = self.make_instance()
        assert pivotal_bound_check(grid.top(), np.zeros(2), omega, nu,
                                   FracParams(1, 0.0)) == 0.0

    def test_zero_charge(self):
        grid, omega, _, psi = self.make_instance()
        assert pivotal_bound_check(grid.top(), psi, omega,
                                   DiscreteMeasure.empty(1),
                                   FracParams(1, 0.0)) == 0.0

    def test_minimal_instance_below_frozen(self):
        grid, omega, nu, psi = self.make_instance()
        ratio = pivotal_bound_check(grid.top(), psi, omega, nu,
                                    FracParams(1, 0.0))
        assert 0.0 < ratio <= frozen_bound("pivotal")

    def test_rejects_mean_violating_psi(self):
        grid, omega, nu, _ = self.make_instance()
        with pytest.raises(ValueError):
            pivotal_bound_check(grid.top(), np.ones(2), omega, nu,
                                FracParams(1, 0.0))


class TestSemiharmonic:
    def test_unit_sphere_value(self):
        x = np.array([np.sqrt(0.5), np.sqrt(0.5)])
        val = semiharmonic_laplacian(x, FracParams(2, 0.5), 2)
        assert val == pytest.approx(0.25, rel=1e-12)

    def test_harmonic_exponent(self, rng):
        params = FracParams(2, 1.0)  # alpha = n - 1: constant potential slope
        for _ in range(5):
            x = rng.standard_normal(2)
            assert semiharmonic_laplacian(x, params, 2) == 0.0

    @pytest.mark.parametrize("dim,ell,alpha", [
        (2, 2, 0.5), (2, 2, 1.5), (3, 2, 2.5), (3, 3, 0.5), (3, 3, 2.7)])
    def test_sign_constancy_when_admissible(self, dim, ell, alpha, rng):
        params = FracParams(dim, alpha)
        signs = set()
        for _ in range(50):
            x = rng.standard_normal(dim)
            v = semiharmonic_laplacian(x, params, ell)
            if v != 0.0:
                signs.add(v > 0.0)
        assert len(signs) == 1

    def test_fd_cross_check(self):
        # 5-point central FD Laplacian of |x|^beta in the first two coords
        params = FracParams(2, 0.5)
        x = np.array([0.8, -0.6])
        beta = params.alpha - params.dim + 1.0
        h = 1e-4

        def pot(p):
            return float(np.linalg.norm(p) ** beta)

        lap = 0.0
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            lap += (pot(x + e) - 2 * pot(x) + pot(x - e)) / h ** 2
        assert semiharmonic_laplacian(x, params, 2) == \
            pytest.approx(lap, rel=1e-6)


class TestRieszGradient:
    def test_single_axis_atom_eigenvalues(self):
        params = FracParams(2, 0.5)
        mu = atoms([[0.0, 0.0]], [1.0])
        d = 2.0
        mat, eig = riesz_gradient(np.array([d, 0.0]), mu, params)
        beta = params.alpha + 1.0 - params.dim
        radial = beta * (beta - 1.0) * d ** (beta - 2.0) / beta
        tangent = beta * d ** (beta - 2.0) / beta
        got = sorted(eig.tolist())
        assert got == pytest.approx(sorted([radial, tangent]), rel=1e-10)

    def test_symmetry(self, rng):
        params = FracParams(3, 1.5)
        mu = atoms(rng.uniform(3, 5, (4, 3)), rng.uniform(0.5, 2, 4))
        mat, _ = riesz_gradient(np.zeros(3), mu, params)
        assert np.abs(mat - mat.T).max() <= 1e-12

    def test_matches_field_fd(self):
        params = FracParams(2, 0.5)
        rng = np.random.default_rng(2)
        mu = atoms(rng.uniform(2, 4, (3, 2)), rng.uniform(0.5, 2, 3))
        z = np.array([-0.3, 0.4])
        mat, _ = riesz_gradient(z, mu, params)
        h = 1e-6
        fd = np.zeros((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd[:, j] = (riesz_field(np.array([z + e]), mu, params)[0] -
                        riesz_field(np.array([z - e]), mu, params)[0]) / (2 * h)
        np.testing.assert_allclose(mat, fd, rtol=1e-5, atol=1e-9)

    @pytest.mark.parametrize("dim,ell,alpha", [(2, 2, 0.5), (3, 2, 2.5),
                                               (3, 3, 1.5)])
    def test_trace_identity(self, dim, ell, alpha, rng):
        params = FracParams(dim, alpha)
        mu = atoms(rng.uniform(2, 4, (4, dim)), rng.uniform(0.5, 2, 4))
        z = rng.uniform(-0.4, 0.4, dim)
        lhs, rhs = riesz_gradient_trace_check(z, mu, params, ell)
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestEnergyReversal:
    def test_single_omega_atom(self):
        cube = box(0.0, 1.0, 1)
        omega = atoms([[0.5]], [1.0])
        mu = atoms([[9.0]], [1.0])
        lhs, rhs, ratio = energy_reversal_check(cube, mu, omega,
                                                FracParams(1, 0.0), 8.0)
        assert lhs == 0.0 and ratio == 0.0

    def test_zero_charge(self):
        cube = box(0.0, 1.0, 1)
        omega = atoms([[0.25], [0.75]], [1.0, 1.0])
        lhs, rhs, ratio = energy_reversal_check(cube, DiscreteMeasure.empty(1),
                                                omega, FracParams(1, 0.0), 8.0)
        assert ratio == 0.0

    def test_double_sum_identity(self, rng):
        cube = box([0.0, 0.0], 1.0, 2)
        omega = atoms(rng.uniform(0, 1, (6, 2)), rng.uniform(0.5, 2, 6))
        mu = atoms(rng.uniform(10, 12, (3, 2)), rng.uniform(0.5, 2, 3))
        params = FracParams(2, 1.5)
        _, rhs, _ = energy_reversal_check(cube, mu, omega, params, 8.0)
        assert reversal_double_sum(cube, mu, omega, params) == \
            pytest.approx(rhs, rel=1e-11)

    def test_rejects_nearby_charge(self):
        cube = box(0.0, 1.0, 1)
        omega = atoms([[0.25], [0.75]])
        mu = atoms([[2.0]], [1.0])
        with pytest.raises(ValueError):
            energy_reversal_check(cube, mu, omega, FracParams(1, 0.0), 8.0)

    def test_admissibility_window(self):
        assert reversal_admissible(1, 2, 0.5)       # k = n-1 branch
        assert not reversal_admissible(1, 2, 1.0)   # alpha = 1 excluded
        assert reversal_admissible(1, 3, 2.5)       # interior branch
        assert not reversal_admissible(1, 3, 2.0)   # alpha = n-1 excluded
        assert not reversal_admissible(1, 3, 1.5)   # below n-k
        assert reversal_admissible(2, 3, 0.5)       # k = n-1 branch
        assert not reversal_admissible(2, 3, 1.0)
        assert not reversal_admissible(0, 2, 0.5)
        assert not reversal_admissible(3, 3, 0.5)

    def test_frozen_bound_on_sampled_instances(self):
        bound = frozen_bound("reversal")
        stream = reversal_instances()
        for _ in range(10):
            grid, params, _, mu, omg = next(stream)
            _, _, ratio = energy_reversal_check(grid.top(), mu, omg, params,
                                                8.0, grid)
            assert np.isfinite(ratio) and ratio <= bound


class TestEllipticity:
    @pytest.mark.parametrize("dim,alpha", [(1, 0.0), (2, 0.5), (3, 1.5)])
    def test_kernel_lower_bound(self, dim, alpha):
        worst, analytic = kernel_ellipticity_check(FracParams(dim, alpha))
        assert worst >= analytic - 1e-12

    def test_identity_map_strong(self):
        worst = strong_ellipticity_check(make_map(2, "identity"),
                                         FracParams(2, 0.5), n_samples=50)
        assert worst > 0.0

    def test_shear_map_strong(self):
        worst = strong_ellipticity_check(make_map(2, "shear"),
                                         FracParams(2, 0.5), n_samples=50)
        assert worst > 0.0


class TestRieszField:
    def test_truncated_equals_untruncated_on_annulus(self, rng):
        params = FracParams(2, 0.5)
        mu = atoms(rng.uniform(-1, 1, (5, 2)), rng.uniform(0.5, 2, 5))
        x = np.array([[4.0, 4.0]])
        d = np.linalg.norm(mu.points - x, axis=1)
        prof = TruncationProfile(float(d.min()) * 0.9, float(d.max()) * 1.1,
                                 params.alpha, params.dim)
        full = riesz_field(x, mu, params)
        trunc = riesz_field(x, mu, params, profile=prof)
        np.testing.assert_allclose(trunc, full, rtol=1e-13)
