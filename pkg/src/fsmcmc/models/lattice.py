"""Binomial observations of a lattice Gaussian field with sparse precision.

The latent field lives on a regular n1 x n2 grid.  Its prior precision is
``sigma^-2 (kappa^2 I - L)^a`` with ``L`` the 5-point Neumann Laplacian
(unit spacing), which the orthonormal cosine basis diagonalises exactly:
the mode (j, k) eigenvalue of ``-L`` is ``4 sin^2(pi j / 2 n1) + 4 sin^2(pi
k / 2 n2)``.  The exponent is fixed to 2 so the precision stays a polynomial
in the stencil.
"""

from __future__ import annotations

import numpy as np

from ..gaussian import CosineBasis, SpectralCovariance
from .base import TargetModel, sigmoid, softplus


def laplacian_mode_values(shape: tuple[int, int]) -> np.ndarray:
    """Eigenvalues of the negated 5-point Neumann Laplacian, grid order."""
    n1, n2 = shape
    lam1 = 4.0 * np.sin(np.pi * np.arange(n1) / (2 * n1)) ** 2
    lam2 = 4.0 * np.sin(np.pi * np.arange(n2) / (2 * n2)) ** 2
    return lam1[:, None] + lam2[None, :]


def lattice_prior(shape: tuple[int, int], kappa: float, sigma: float,
                  precision_exponent: int = 2) -> SpectralCovariance:
    """Spectral form of the covariance ``sigma^2 (kappa^2 I - L)^-a``.

    The grid-operator expression is precision-like, so its inverse powers
    are taken as covariance eigenvalues (config key ``precision_exponent``).
    """
    if kappa <= 0 or sigma <= 0:
        raise ValueError("kappa and sigma must be positive")
    if precision_exponent != 2:
        raise ValueError("only precision_exponent = 2 is supported")
    vals = sigma**2 * (kappa**2 + laplacian_mode_values(shape)) ** (-precision_exponent)
    flat = vals.ravel()
    order = np.argsort(-flat, kind="stable")
    return SpectralCovariance(CosineBasis(shape, order), flat[order])


class BinomialLatticeModel(TargetModel):
    """Binomial counts with logit link, observed on a subset of grid cells."""

    has_gradient = True
    has_hessian = True

    def __init__(self, shape, trials, successes, kappa=1.0, sigma=1.0,
                 precision_exponent=2):
        shape = tuple(int(s) for s in shape)
        trials = np.asarray(trials, dtype=float).ravel()
        successes = np.asarray(successes, dtype=float).ravel()
        n_cells = shape[0] * shape[1]
        if trials.shape != (n_cells,) or successes.shape != (n_cells,):
            raise ValueError("trials and successes must cover every grid cell")
        if np.any(trials < 0) or np.any(successes < 0) or np.any(successes > trials):
            raise ValueError("need 0 <= successes <= trials in every cell")

        self.shape = shape
        self.trials = trials
        self.successes = successes
        self.observed = trials > 0
        self.kappa = float(kappa)
        self.sigma = float(sigma)
        self.prior = lattice_prior(shape, kappa, sigma, precision_exponent)

        total = float(trials.sum())
        self.growth_envelope = (total * np.log(2.0) + float(np.linalg.norm(trials)), 1.0)

    def potential(self, u):
        u = self._check_input(u)
        # -log binomial likelihood without the combinatorial constant,
        # which is nonnegative term by term.
        return float(np.sum(self.successes * softplus(-u) + (self.trials - self.successes) * softplus(u)))

    def potential_many(self, U):
        return (softplus(-U) @ self.successes) + (softplus(U) @ (self.trials - self.successes))

    def grad_potential(self, u):
        u = self._check_input(u)
        return self.trials * sigmoid(u) - self.successes

    def hessian_diag(self, u):
        u = self._check_input(u)
        p = sigmoid(u)
        return self.trials * p * (1.0 - p)


def simulate_binomial(params: dict, field_seed: int, obs_seed: int):
    """Synthesise a sparsely observed binomial lattice dataset.

    Per-cell trial counts are one plus a Poisson draw; a random fraction of
    cells is observed, the rest carry zero trials.
    """
    shape = tuple(int(s) for s in params.get("shape", (16, 16)))
    kappa = float(params.get("kappa", 1.0))
    sigma = float(params.get("sigma", 1.0))
    trials_rate = float(params.get("trials_rate", 4.0))
    observed_fraction = float(params.get("observed_fraction", 0.5))
    n_cells = shape[0] * shape[1]

    prior = lattice_prior(shape, kappa, sigma)
    field_rng = np.random.default_rng(field_seed)
    u_true = prior.from_coefficients(field_rng.standard_normal(prior.dim))

    obs_rng = np.random.default_rng(obs_seed)
    observed = obs_rng.uniform(size=n_cells) < observed_fraction
    trials = np.zeros(n_cells, dtype=int)
    trials[observed] = 1 + obs_rng.poisson(trials_rate, size=int(observed.sum()))
    successes = np.zeros(n_cells, dtype=int)
    successes[observed] = obs_rng.binomial(trials[observed], sigmoid(u_true[observed]))

    dataset = {"shape": shape, "trials": trials, "successes": successes}
    return dataset, u_true
