"""Model potentials, derivatives, priors, simulators, and the quadrature oracle."""

import numpy as np
import pytest

from fsmcmc.gaussian import DenseBasis, SpectralCovariance
from fsmcmc.models import (
    BinomialLatticeModel,
    FlatPotentialModel,
    GaussianLikelihoodModel,
    LGCPModel,
    LogisticClassifierModel,
    posterior_moments,
    posterior_expectation,
    simulate_data,
)
from fsmcmc.models.base import sigmoid
from fsmcmc.models.lattice import lattice_prior


def diag_prior(eigenvalues):
    vals = np.asarray(eigenvalues, dtype=float)
    return SpectralCovariance(DenseBasis(np.eye(vals.size)), vals)


def make_models(rng):
    locs = rng.uniform(size=(6, 2))
    labels = rng.integers(0, 2, size=6)
    logistic = LogisticClassifierModel(locs, labels, kernel_variance=1.2, lengthscale=0.5)

    shape = (3, 4)
    trials = rng.integers(0, 6, size=12)
    successes = np.minimum(rng.integers(0, 6, size=12), trials)
    binomial = BinomialLatticeModel(shape, trials, successes, kappa=0.8, sigma=1.1)

    counts = rng.poisson(2.0, size=12)
    lgcp = LGCPModel((3, 4), counts, cell_area=0.7, sigma=1.0, tau=2.0)
    return {"logistic": logistic, "binomial": binomial, "lgcp": lgcp}


def central_diff_grad(f, u, h=1e-5):
    g = np.zeros_like(u)
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = h
        g[i] = (f(u + e) - f(u - e)) / (2 * h)
    return g


class TestPotentialValues:
    def test_logistic_at_zero(self):
        rng = np.random.default_rng(0)
        model = make_models(rng)["logistic"]
        assert np.isclose(model.potential(np.zeros(model.dim)), model.dim * np.log(2.0))

    def test_logistic_gradient_at_zero(self):
        rng = np.random.default_rng(1)
        model = make_models(rng)["logistic"]
        assert np.allclose(model.grad_potential(np.zeros(model.dim)), 0.5 - model.labels)

    def test_logistic_hessian_at_zero(self):
        rng = np.random.default_rng(2)
        model = make_models(rng)["logistic"]
        assert np.allclose(model.hessian_diag(np.zeros(model.dim)), 0.25)

    def test_lgcp_at_zero(self):
        counts = np.array([0.0, 1.0, 3.0, 0.0])
        model = LGCPModel((2, 2), counts, cell_area=1.0, sigma=1.0, tau=1.0)
        # area * exp(0) per cell, shifted by the declared constant
        expected = 4.0 - np.sum(counts[counts > 0] * (1.0 - np.log(counts[counts > 0])))
        assert np.isclose(model.potential(np.zeros(4)), expected)

    def test_lgcp_gradient_at_zero(self):
        counts = np.array([0.0, 1.0, 3.0, 0.0])
        model = LGCPModel((2, 2), counts, cell_area=1.0, sigma=1.0, tau=1.0)
        assert np.allclose(model.grad_potential(np.zeros(4)), 1.0 - counts)

    def test_lgcp_hessian_at_zero(self):
        model = LGCPModel((2, 2), np.zeros(4), cell_area=1.0, sigma=1.0, tau=1.0)
        assert np.allclose(model.hessian_diag(np.zeros(4)), 1.0)

    def test_binomial_matches_scalar_loglik(self):
        rng = np.random.default_rng(3)
        model = make_models(rng)["binomial"]
        u = rng.standard_normal(model.dim)
        # independent scalar evaluation of the binomial log-likelihood
        total = 0.0
        for ui, n, y in zip(u, model.trials, model.successes):
            p = 1.0 / (1.0 + np.exp(-ui))
            if n > 0:
                total -= y * np.log(p) + (n - y) * np.log1p(-p)
        assert abs(model.potential(u) - total) < 1e-12

    def test_potential_rejects_nonfinite(self):
        model = make_models(np.random.default_rng(4))["logistic"]
        bad = np.zeros(model.dim)
        bad[0] = np.nan
        with pytest.raises(ValueError):
            model.potential(bad)

    def test_nonnegative_on_prior_draws(self):
        rng = np.random.default_rng(5)
        for model in make_models(rng).values():
            K, p = model.growth_envelope
            for _ in range(1000):
                z = rng.standard_normal(model.prior.dim)
                u = model.prior.from_coefficients(z)
                phi = model.potential(u)
                assert phi >= 0.0
                assert phi <= K * (1.0 + np.linalg.norm(u) ** p)


class TestDerivativeOracles:
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(6)
        for model in make_models(rng).values():
            for _ in range(20):
                u = rng.uniform(-2.0, 2.0, model.dim)
                g = model.grad_potential(u)
                fd = central_diff_grad(model.potential, u)
                denom = max(np.linalg.norm(fd), 1.0)
                assert np.linalg.norm(g - fd) / denom < 1e-5

    def test_hessians_match_finite_differences(self):
        rng = np.random.default_rng(7)
        for model in make_models(rng).values():
            for _ in range(20):
                u = rng.uniform(-2.0, 2.0, model.dim)
                h = model.hessian_diag(u)
                # differences of the gradient; all three models are diagonal
                fd_diag = np.zeros(model.dim)
                for i in range(model.dim):
                    e = np.zeros(model.dim)
                    e[i] = 1e-5
                    fd_diag[i] = (model.grad_potential(u + e)[i] - model.grad_potential(u - e)[i]) / 2e-5
                denom = max(np.linalg.norm(fd_diag), 1.0)
                assert np.linalg.norm(h - fd_diag) / denom < 1e-4

    def test_capability_errors(self):
        class PotentialOnly(FlatPotentialModel):
            has_gradient = False
            has_hessian = False

            def grad_potential(self, u):
                raise NotImplementedError("no gradient")

            def hessian_diag(self, u):
                raise NotImplementedError("no hessian")

        model = PotentialOnly(diag_prior([1.0, 0.5]))
        with pytest.raises(NotImplementedError):
            model.grad_potential(np.zeros(2))
        with pytest.raises(NotImplementedError):
            model.hessian_diag(np.zeros(2))


class TestPriors:
    def test_single_cell_lattice_eigenvalue(self):
        prior = lattice_prior((1, 1), kappa=1.0, sigma=1.0)
        assert np.allclose(prior.eigenvalues, [1.0])

    def test_lattice_matches_dense_assembly(self):
        n1, n2 = 4, 4
        kappa, sigma = 0.9, 1.3
        # dense 5-point Neumann Laplacian on the 4x4 grid
        n = n1 * n2
        L = np.zeros((n, n))
        for i in range(n1):
            for j in range(n2):
                k = i * n2 + j
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < n1 and 0 <= jj < n2:
                        L[k, ii * n2 + jj] += 1.0
                        L[k, k] -= 1.0
        Q = (kappa**2 * np.eye(n) - L) @ (kappa**2 * np.eye(n) - L) / sigma**2
        dense_cov_eigs = np.sort(1.0 / np.linalg.eigvalsh(Q))[::-1]
        prior = lattice_prior((n1, n2), kappa, sigma)
        assert np.allclose(prior.eigenvalues, dense_cov_eigs, atol=1e-9)

    def test_duplicate_locations_survive_jitter(self):
        locs = np.array([[0.3, 0.3], [0.3, 0.3], [0.9, 0.1]])
        model = LogisticClassifierModel(locs, [0, 1, 1], kernel_variance=2.0, lengthscale=0.5,
                                        jitter_scale=1e-8)
        assert model.prior.eigenvalues[-1] > 0
        assert model.prior.eigenvalues[-1] < 1e-6

    def test_invalid_label_rejected(self):
        with pytest.raises(ValueError):
            LogisticClassifierModel(np.zeros((2, 1)), [0, 2])

    def test_lattice_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            BinomialLatticeModel((2, 2), trials=[1, 1, 1, 1], successes=[2, 0, 0, 0])


class TestSimulators:
    def test_binomial_trials_shifted_poisson(self):
        dataset, _ = simulate_data("binomial", {"shape": (12, 12), "trials_rate": 4.0,
                                                "observed_fraction": 1.0}, 1, 2)
        trials = dataset["trials"]
        assert trials.min() >= 1
        # 1 + Poisson(4): mean 5 within Monte Carlo slack
        assert abs(trials.mean() - 5.0) < 4 * np.sqrt(4.0 / trials.size)

    def test_simulators_deterministic(self):
        for kind in ("logistic", "binomial", "lgcp"):
            a, ua = simulate_data(kind, {}, 11, 12)
            b, ub = simulate_data(kind, {}, 11, 12)
            assert np.array_equal(ua, ub)
            for key in a:
                assert np.array_equal(np.asarray(a[key]), np.asarray(b[key]))

    def test_degenerate_prior_gives_fair_labels(self):
        dataset, _ = simulate_data(
            "logistic", {"n_points": 10_000, "kernel_variance": 1e-12}, 5, 6
        )
        mean = dataset["labels"].mean()
        assert abs(mean - 0.5) < 4 * 0.5 / np.sqrt(10_000)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            simulate_data("mystery", {}, 0, 0)


class TestQuadrature:
    def test_flat_potential_returns_prior(self):
        prior = diag_prior([1.0, 0.5])
        model = FlatPotentialModel(prior)
        mean, cov = posterior_moments(model, points_per_dim=200)
        assert np.allclose(mean, 0.0, atol=1e-6)
        assert np.allclose(cov, np.diag([1.0, 0.5]), atol=1e-6)

    def test_conjugate_gaussian_1d(self):
        prior = diag_prior([1.0])
        model = GaussianLikelihoodModel(prior, y=np.array([1.0]))
        mean, cov = posterior_moments(model, points_per_dim=400)
        assert abs(mean[0] - 0.5) < 1e-6
        assert abs(cov[0, 0] - 0.5) < 1e-6

    def test_logistic_2d_self_convergence(self):
        rng = np.random.default_rng(8)
        model = LogisticClassifierModel(rng.uniform(size=(2, 2)), [0, 1],
                                        kernel_variance=1.0, lengthscale=0.7)
        m1, c1 = posterior_moments(model, points_per_dim=150)
        m2, c2 = posterior_moments(model, points_per_dim=300)
        assert np.max(np.abs(m1 - m2)) < 1e-4
        assert np.max(np.abs(c1 - c2)) < 1e-4

    def test_dim_cap(self):
        prior = diag_prior(np.ones(4))
        with pytest.raises(NotImplementedError):
            posterior_moments(FlatPotentialModel(prior), points_per_dim=60)

    def test_fisher_identity_on_oracle_model(self):
        rng = np.random.default_rng(9)
        model = LogisticClassifierModel(rng.uniform(size=(2, 2)), [0, 1],
                                        kernel_variance=1.0, lengthscale=0.7)
        mean, _ = posterior_moments(model, points_per_dim=300)
        grad_mean = posterior_expectation(model, model.grad_potential, points_per_dim=300)
        S = model.prior.dense_factor()
        prior_precision = np.linalg.inv(S @ S.T)
        assert np.linalg.norm(grad_mean + prior_precision @ mean) < 1e-3
