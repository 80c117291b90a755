"""Log-Gaussian Cox process on a lattice of cells.

Cell counts are Poisson with intensity ``area * exp(u)``.  The latent field
has an exponential covariance ``s^2 exp(-r / t)`` represented in the cosine
basis: the mode eigenvalues are the even (Neumann) cosine transform of the
covariance function over grid offsets, clamped to stay positive.  That makes
every covariance product a pair of fast transforms and lets the prior be
rebuilt cheaply when the hyperparameters move inside a Gibbs sweep.
"""

from __future__ import annotations

import numpy as np

from ..gaussian import CosineBasis, SpectralCovariance
from .base import TargetModel

#: Hyper-prior on (log s, log t): independent normal means and standard deviations.
DEFAULT_HYPER_PRIOR = {"means": (0.0, 10.0), "sds": (1.5, 1.5)}


def exponential_cov_eigenvalues(shape, sigma, tau, spacing=1.0):
    """Cosine-basis eigenvalues of the stationary exponential covariance.

    Computes ``lam[j,k] = sum_pq w_p w_q R[p,q] cos(pi j p / n1) cos(pi k q / n2)``
    with ``R`` the covariance at lattice offsets and ``w_0 = 1, w_p = 2``;
    this is the symbol of the Toeplitz-plus-reflection covariance under
    Neumann boundary conditions.
    """
    n1, n2 = shape
    if sigma <= 0 or tau <= 0:
        raise ValueError("sigma and tau must be positive")
    p = np.arange(n1)[:, None]
    q = np.arange(n2)[None, :]
    r = spacing * np.sqrt((p.astype(float)) ** 2 + (q.astype(float)) ** 2)
    w1 = np.where(np.arange(n1) == 0, 1.0, 2.0)
    w2 = np.where(np.arange(n2) == 0, 1.0, 2.0)
    cos1 = np.cos(np.pi * np.outer(np.arange(n1), np.arange(n1)) / n1)  # [j, p]
    cos2 = np.cos(np.pi * np.outer(np.arange(n2), np.arange(n2)) / n2)  # [k, q]
    # extreme hyperparameter proposals may overflow; the finiteness check
    # below turns that into a rejection rather than a crash
    with np.errstate(over="ignore", invalid="ignore"):
        R = sigma**2 * np.exp(-r / tau)
        lam = cos1 @ (w1[:, None] * R * w2[None, :]) @ cos2.T
    if not np.all(np.isfinite(lam)):
        raise ValueError("covariance eigenvalues are not finite")
    floor = 1e-12 * float(lam.max())
    return np.maximum(lam, floor)


def lgcp_prior(shape, sigma, tau, spacing=1.0, mode_order=None) -> SpectralCovariance:
    """Spectral prior; ``mode_order`` fixes an existing coefficient-to-mode map.

    A fresh prior sorts modes by eigenvalue.  Rebuilds inside a
    hyperparameter sweep must reuse the original ordering so that a given
    whitened coefficient keeps meaning the same basis function; the
    eigenvalues are then only approximately sorted.
    """
    lam = exponential_cov_eigenvalues(shape, sigma, tau, spacing).ravel()
    if mode_order is None:
        order = np.argsort(-lam, kind="stable")
        return SpectralCovariance(CosineBasis(tuple(shape), order), lam[order])
    order = np.asarray(mode_order, dtype=int)
    return SpectralCovariance(CosineBasis(tuple(shape), order), lam[order],
                              require_sorted=False)


class LGCPModel(TargetModel):
    """Poisson counts driven by the exponential of a latent Gaussian field.

    The additive constant subtracts each cell's likelihood minimum so the
    potential is nonnegative; constants cancel in every acceptance ratio.
    """

    has_gradient = True
    has_hessian = True

    def __init__(self, shape, counts, cell_area=1.0, sigma=1.0, tau=1.0,
                 spacing=1.0, hyper_prior=None, mode_order=None):
        shape = tuple(int(s) for s in shape)
        counts = np.asarray(counts, dtype=float).ravel()
        if counts.shape != (shape[0] * shape[1],):
            raise ValueError("counts must cover every grid cell")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if cell_area <= 0:
            raise ValueError("cell_area must be positive")

        self.shape = shape
        self.counts = counts
        self.cell_area = float(cell_area)
        self.sigma = float(sigma)
        self.tau = float(tau)
        self.spacing = float(spacing)
        hp = dict(DEFAULT_HYPER_PRIOR if hyper_prior is None else hyper_prior)
        self.hyper_prior_means = tuple(float(x) for x in hp["means"])
        self.hyper_prior_sds = tuple(float(x) for x in hp["sds"])
        self.prior = lgcp_prior(shape, sigma, tau, spacing, mode_order=mode_order)

        pos = counts > 0
        self._const = float(np.sum(counts[pos] * (1.0 - np.log(counts[pos] / self.cell_area))))
        # exp link: no polynomial envelope; declared bound holds on prior draws
        self.growth_envelope = (self.cell_area * counts.size * 60.0 + float(counts.sum()), 4.0)

    def with_hyperparameters(self, sigma: float, tau: float) -> "LGCPModel":
        """Same data, rebuilt prior, original mode ordering kept fixed."""
        return LGCPModel(self.shape, self.counts, self.cell_area, sigma, tau,
                         self.spacing, {"means": self.hyper_prior_means,
                                        "sds": self.hyper_prior_sds},
                         mode_order=self.prior.basis.order)

    def log_hyper_prior(self, log_sigma: float, log_tau: float) -> float:
        m, s = self.hyper_prior_means, self.hyper_prior_sds
        return float(-0.5 * ((log_sigma - m[0]) / s[0]) ** 2
                     - 0.5 * ((log_tau - m[1]) / s[1]) ** 2)

    def potential(self, u):
        u = self._check_input(u)
        # exp may overflow for extreme proposals; the resulting inf makes
        # the step machinery reject rather than crash
        with np.errstate(over="ignore"):
            return float(np.sum(self.cell_area * np.exp(u) - self.counts * u) - self._const)

    def potential_many(self, U):
        with np.errstate(over="ignore"):
            return np.sum(self.cell_area * np.exp(U) - self.counts[None, :] * U, axis=1) - self._const

    def grad_potential(self, u):
        u = self._check_input(u)
        with np.errstate(over="ignore"):
            return self.cell_area * np.exp(u) - self.counts

    def hessian_diag(self, u):
        u = self._check_input(u)
        with np.errstate(over="ignore"):
            return self.cell_area * np.exp(u)


def simulate_lgcp(params: dict, field_seed: int, obs_seed: int):
    """Draw a latent field from the exponential-covariance prior and Poisson counts."""
    shape = tuple(int(s) for s in params.get("shape", (32, 32)))
    sigma = float(params.get("sigma", 1.0))
    tau = float(params.get("tau", 4.0))
    cell_area = float(params.get("cell_area", 1.0))
    spacing = float(params.get("spacing", 1.0))

    prior = lgcp_prior(shape, sigma, tau, spacing)
    field_rng = np.random.default_rng(field_seed)
    u_true = prior.from_coefficients(field_rng.standard_normal(prior.dim))

    obs_rng = np.random.default_rng(obs_seed)
    counts = obs_rng.poisson(cell_area * np.exp(u_true))
    dataset = {"shape": shape, "counts": counts}
    return dataset, u_true
