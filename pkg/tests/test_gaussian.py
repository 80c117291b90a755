"""Spectral covariance, coefficient transforms, and change-of-measure terms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsmcmc.gaussian import (
    CosineBasis,
    DenseBasis,
    DiagonalScaling,
    GaussianMeasure,
    SpectralCovariance,
    cameron_martin_norm_sq,
    change_of_measure_logterm,
    equivalence_diagnostic,
    sample_prior,
)


def random_dense_cov(rng, n_nodal, n_modes=None):
    n_modes = n_nodal if n_modes is None else n_modes
    q, _ = np.linalg.qr(rng.standard_normal((n_nodal, n_nodal)))
    vals = np.sort(rng.uniform(0.2, 3.0, n_modes))[::-1]
    return SpectralCovariance(DenseBasis(q[:, :n_modes]), vals)


def cosine_cov(shape, rng):
    vals = np.sort(rng.uniform(0.1, 2.0, shape[0] * shape[1]))[::-1]
    order = np.arange(vals.size)
    return SpectralCovariance(CosineBasis(shape, order), vals)


class TestTransforms:
    def test_zero_maps_to_zero(self):
        cov = random_dense_cov(np.random.default_rng(0), 5)
        assert np.allclose(cov.to_coefficients(np.zeros(5)), 0.0)
        assert np.allclose(cov.from_coefficients(np.zeros(5)), 0.0)

    def test_identity_basis_diagonal_scaling(self):
        cov = SpectralCovariance(DenseBasis(np.eye(2)), np.array([4.0, 1.0]))
        assert np.allclose(cov.to_coefficients(np.array([2.0, 3.0])), [1.0, 3.0])
        assert np.allclose(cov.from_coefficients(np.array([1.0, 3.0])), [2.0, 3.0])

    def test_round_trip_nodal(self):
        rng = np.random.default_rng(1)
        cov = random_dense_cov(rng, 8)
        for _ in range(100):
            u = rng.standard_normal(8)
            back = cov.from_coefficients(cov.to_coefficients(u))
            assert np.linalg.norm(back - u) <= 1e-10 * max(np.linalg.norm(u), 1.0)

    def test_round_trip_coefficients_all_dims(self):
        rng = np.random.default_rng(2)
        for dim in (1, 2, 3, 8, 17):
            cov = random_dense_cov(rng, dim)
            for _ in range(100):
                z = rng.standard_normal(dim)
                back = cov.to_coefficients(cov.from_coefficients(z))
                assert np.linalg.norm(back - z) <= 1e-10 * max(np.linalg.norm(z), 1.0)

    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, dim, seed):
        rng = np.random.default_rng(seed)
        cov = random_dense_cov(rng, dim)
        z = rng.standard_normal(dim)
        back = cov.to_coefficients(cov.from_coefficients(z))
        assert np.linalg.norm(back - z) <= 1e-10 * max(np.linalg.norm(z), 1.0)

    def test_round_trip_truncated_basis(self):
        # truncated expansions invert exactly from the coefficient side
        rng = np.random.default_rng(3)
        cov = random_dense_cov(rng, 10, n_modes=4)
        z = rng.standard_normal(4)
        assert np.allclose(cov.to_coefficients(cov.from_coefficients(z)), z, atol=1e-12)

    def test_cosine_basis_round_trip_and_orthonormality(self):
        rng = np.random.default_rng(4)
        cov = cosine_cov((4, 6), rng)
        z = rng.standard_normal(24)
        back = cov.to_coefficients(cov.from_coefficients(z))
        assert np.linalg.norm(back - z) / np.linalg.norm(z) < 1e-10
        basis = cov.basis
        w = rng.standard_normal(24)
        assert np.linalg.norm(basis.apply_t(basis.apply(w)) - w) / np.linalg.norm(w) < 1e-10

    def test_dimension_mismatch_rejected(self):
        cov = random_dense_cov(np.random.default_rng(5), 6)
        with pytest.raises(ValueError):
            cov.to_coefficients(np.zeros(5))
        with pytest.raises(ValueError):
            cov.from_coefficients(np.zeros(7))

    def test_pullback_gradient_is_adjoint(self):
        rng = np.random.default_rng(6)
        cov = random_dense_cov(rng, 7)
        z, g = rng.standard_normal(7), rng.standard_normal(7)
        # <from_coefficients(z), g> == <z, pullback_gradient(g)>
        assert np.isclose(cov.from_coefficients(z) @ g, z @ cov.pullback_gradient(g))

    def test_dense_factor_matches_transform(self):
        rng = np.random.default_rng(7)
        cov = random_dense_cov(rng, 6, n_modes=3)
        S = cov.dense_factor()
        z = rng.standard_normal(3)
        assert np.allclose(S @ z, cov.from_coefficients(z))


class TestConstruction:
    def test_eigenvalues_must_be_positive(self):
        with pytest.raises(ValueError):
            SpectralCovariance(DenseBasis(np.eye(2)), np.array([1.0, 0.0]))

    def test_eigenvalues_must_be_sorted(self):
        with pytest.raises(ValueError):
            SpectralCovariance(DenseBasis(np.eye(2)), np.array([1.0, 2.0]))

    def test_non_orthonormal_basis_rejected(self):
        with pytest.raises(ValueError):
            DenseBasis(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_measure_mean_must_match(self):
        cov = random_dense_cov(np.random.default_rng(8), 4)
        with pytest.raises(ValueError):
            GaussianMeasure(np.zeros(3), cov)


class TestSampling:
    def test_identity_scaling_unit_variances(self):
        rng = np.random.default_rng(9)
        cov = random_dense_cov(rng, 4)
        measure = GaussianMeasure(np.zeros(4), cov)
        draws = np.array([sample_prior(measure, rng) for _ in range(100_000)])
        assert np.allclose(draws.var(axis=0), 1.0, rtol=0.05)

    def test_scaled_coordinate_variance(self):
        rng = np.random.default_rng(10)
        cov = random_dense_cov(rng, 4)
        measure = GaussianMeasure(np.zeros(4), cov, DiagonalScaling(np.array([4.0, 1.0, 1.0, 1.0])))
        draws = np.array([sample_prior(measure, rng) for _ in range(100_000)])
        assert abs(draws[:, 0].var() - 4.0) / 4.0 < 0.05

    def test_empirical_covariance_diagonal(self):
        rng = np.random.default_rng(11)
        n, n_draws = 6, 100_000
        cov = random_dense_cov(rng, n)
        d = np.array([2.0, 1.5, 1.0, 1.0, 0.7, 0.5])
        measure = GaussianMeasure(np.zeros(n), cov, DiagonalScaling(d))
        draws = np.array([sample_prior(measure, rng) for _ in range(n_draws)])
        emp = np.cov(draws.T)
        # off-diagonals within 4 Monte Carlo standard errors of zero,
        # diagonals within 4 of d
        for i in range(n):
            for k in range(n):
                if i == k:
                    se = d[i] * np.sqrt(2.0 / n_draws)
                    assert abs(emp[i, i] - d[i]) < 4 * se
                else:
                    se = np.sqrt(d[i] * d[k] / n_draws)
                    assert abs(emp[i, k]) < 4 * se

    def test_fixed_seed_reproducible(self):
        cov = random_dense_cov(np.random.default_rng(12), 3)
        measure = GaussianMeasure(np.zeros(3), cov)
        a = sample_prior(measure, np.random.default_rng(77))
        b = sample_prior(measure, np.random.default_rng(77))
        assert np.array_equal(a, b)


class TestScalarDiagnostics:
    def test_equivalence_diagnostic_values(self):
        assert equivalence_diagnostic(DiagonalScaling(np.ones(5))) == 0.0
        assert equivalence_diagnostic(DiagonalScaling(np.array([2.0, 1.0, 1.0]))) == 1.0
        assert np.isclose(equivalence_diagnostic(DiagonalScaling(np.array([1.5, 0.5, 1.0]))), 0.5)

    @given(st.lists(st.floats(0.1, 5.0), min_size=2, max_size=10))
    @settings(max_examples=50, deadline=None)
    def test_equivalence_diagnostic_permutation_invariant(self, entries):
        d = np.array(entries)
        rng = np.random.default_rng(0)
        shuffled = rng.permutation(d)
        assert np.isclose(
            equivalence_diagnostic(DiagonalScaling(d)),
            equivalence_diagnostic(DiagonalScaling(shuffled)),
        )

    @given(st.lists(st.floats(-50.0, 50.0), min_size=1, max_size=12))
    @settings(max_examples=100, deadline=None)
    def test_logterm_identity_scaling_is_zero(self, entries):
        z = np.array(entries)
        assert change_of_measure_logterm(z, DiagonalScaling(np.ones(z.size))) == 0.0

    def test_logterm_direct_arithmetic(self):
        val = change_of_measure_logterm(np.array([2.0]), DiagonalScaling(np.array([2.0])))
        assert np.isclose(val, 1.0)

    def test_logterm_matches_dense_quadratic(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            n = rng.integers(2, 10)
            z = rng.standard_normal(n)
            d = rng.uniform(0.3, 3.0, n)
            dense = 0.5 * z @ (np.eye(n) - np.diag(1.0 / d)) @ z
            assert abs(change_of_measure_logterm(z, DiagonalScaling(d)) - dense) < 1e-12

    def test_cameron_martin_norm(self):
        assert cameron_martin_norm_sq(np.zeros(4), DiagonalScaling(np.ones(4))) == 0.0
        assert cameron_martin_norm_sq(np.array([3.0, 4.0]), DiagonalScaling(np.ones(2))) == 25.0
        assert cameron_martin_norm_sq(np.array([2.0, 0.0]), DiagonalScaling(np.array([4.0, 1.0]))) == 1.0

    def test_scaling_clamped_at_floor(self):
        s = DiagonalScaling(np.array([0.0, 1.0]))
        assert s.d[0] == pytest.approx(1e-8)
