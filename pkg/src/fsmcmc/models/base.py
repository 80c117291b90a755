"""Target posterior contract.

A target model bundles a negative log-likelihood ``potential`` (the density of
the posterior with respect to the Gaussian prior is ``exp(-potential)``), its
derivatives where available, and the prior covariance in spectral form.
"""

from __future__ import annotations

import numpy as np

from ..gaussian import SpectralCovariance


def sigmoid(x):
    """Numerically stable logistic function."""
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x):
    """log(1 + exp(x)) without overflow."""
    return np.logaddexp(0.0, x)


class TargetModel:
    """Base class for target posteriors.

    Subclasses set ``prior`` (a :class:`SpectralCovariance`) and implement
    ``potential``; gradient and Hessian are optional capabilities advertised
    through ``has_gradient`` / ``has_hessian``.  ``potential`` must be
    nonnegative (additive constants are chosen per model) and obey the
    polynomial growth envelope declared in ``growth_envelope`` on typical
    prior draws.
    """

    has_gradient = False
    has_hessian = False
    #: (K, p) such that potential(u) <= K * (1 + ||u||^p) on probe draws.
    growth_envelope = (1.0, 1.0)

    prior: SpectralCovariance

    @property
    def dim(self) -> int:
        """Nodal dimension (number of field values the potential consumes)."""
        return self.prior.n_nodal

    def _check_input(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise ValueError(f"expected field vector of length {self.dim}, got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("field vector contains non-finite entries")
        return u

    def potential(self, u: np.ndarray) -> float:
        raise NotImplementedError

    def potential_many(self, U: np.ndarray) -> np.ndarray:
        """Potential evaluated on each row of U; subclasses may vectorise."""
        return np.array([self.potential(u) for u in U])

    def grad_potential(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} does not expose a gradient")

    def hessian_diag(self, u: np.ndarray) -> np.ndarray:
        """Diagonal of the (positive semidefinite) curvature of the potential."""
        raise NotImplementedError(f"{type(self).__name__} does not expose a Hessian")


class FlatPotentialModel(TargetModel):
    """Zero potential: the posterior equals the prior.

    Used for prior-preservation checks; gradient and Hessian are exposed (and
    identically zero) so that drift kernels reduce to their drift-free forms.
    """

    has_gradient = True
    has_hessian = True
    growth_envelope = (1.0, 1.0)

    def __init__(self, prior: SpectralCovariance):
        self.prior = prior

    def potential(self, u):
        self._check_input(u)
        return 0.0

    def potential_many(self, U):
        return np.zeros(U.shape[0])

    def grad_potential(self, u):
        return np.zeros_like(self._check_input(u))

    def hessian_diag(self, u):
        return np.zeros_like(self._check_input(u))


class GaussianLikelihoodModel(TargetModel):
    """Quadratic potential ``||y - u||^2 / (2 noise^2)``.

    Conjugate to the Gaussian prior, so posterior moments are available in
    closed form; the workhorse of the exactness tests.
    """

    has_gradient = True
    has_hessian = True

    def __init__(self, prior: SpectralCovariance, y: np.ndarray, noise: float = 1.0):
        y = np.asarray(y, dtype=float)
        if y.shape != (prior.n_nodal,):
            raise ValueError("observation vector must match the nodal dimension")
        if noise <= 0:
            raise ValueError("noise must be positive")
        self.prior = prior
        self.y = y
        self.noise = float(noise)
        self.growth_envelope = (float(np.dot(y, y) / noise**2 + 1.0 / noise**2), 2.0)

    def potential(self, u):
        u = self._check_input(u)
        r = self.y - u
        return float(0.5 * np.dot(r, r) / self.noise**2)

    def potential_many(self, U):
        R = self.y[None, :] - U
        return 0.5 * np.sum(R * R, axis=1) / self.noise**2

    def grad_potential(self, u):
        u = self._check_input(u)
        return (u - self.y) / self.noise**2

    def hessian_diag(self, u):
        self._check_input(u)
        return np.full(self.dim, 1.0 / self.noise**2)
