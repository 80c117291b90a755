"""Binary Gaussian-process classifier with logistic link."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ..gaussian import DenseBasis, SpectralCovariance
from .base import TargetModel, sigmoid, softplus


def classifier_kernel(locations: np.ndarray, kernel_variance: float, lengthscale: float) -> np.ndarray:
    """Covariance matrix ``s2 * exp(-||x - x'|| / (2 l^2))`` between locations."""
    dists = cdist(locations, locations)
    return kernel_variance * np.exp(-dists / (2.0 * lengthscale**2))


class LogisticClassifierModel(TargetModel):
    """Bernoulli-logistic likelihood over a latent GP at scattered locations.

    Parameters
    ----------
    locations: (N, D) array
        Input points.
    labels: (N,) array of {0, 1}
        Binary responses.
    kernel_variance, lengthscale: float
        Covariance hyperparameters.
    jitter_scale: float
        Relative diagonal jitter added to the kernel matrix before its
        eigendecomposition; real datasets routinely make it near-singular.
    n_components: int, optional
        Keep only the leading eigenpairs of the kernel (defaults to all N).
    """

    has_gradient = True
    has_hessian = True

    def __init__(self, locations, labels, kernel_variance=1.0, lengthscale=1.0,
                 jitter_scale=1e-8, n_components=None):
        locations = np.atleast_2d(np.asarray(locations, dtype=float))
        labels = np.asarray(labels)
        if labels.shape != (locations.shape[0],):
            raise ValueError("need one label per location")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if kernel_variance <= 0 or lengthscale <= 0:
            raise ValueError("kernel hyperparameters must be positive")

        self.locations = locations
        self.labels = labels.astype(float)
        self.kernel_variance = float(kernel_variance)
        self.lengthscale = float(lengthscale)
        jitter = jitter_scale * kernel_variance

        K = classifier_kernel(locations, kernel_variance, lengthscale)
        K[np.diag_indices_from(K)] += jitter
        vals, vecs = np.linalg.eigh(K)
        vals, vecs = vals[::-1], vecs[:, ::-1]
        if vals[-1] <= 0:
            raise ValueError("kernel matrix is not positive definite after jitter")
        n = locations.shape[0] if n_components is None else int(n_components)
        if not 1 <= n <= locations.shape[0]:
            raise ValueError("n_components out of range")
        self.prior = SpectralCovariance(DenseBasis(vecs[:, :n]), vals[:n])

        n_obs = locations.shape[0]
        self.growth_envelope = (n_obs * np.log(2.0) + np.sqrt(n_obs), 1.0)

    def potential(self, u):
        u = self._check_input(u)
        t = 2.0 * self.labels - 1.0
        return float(np.sum(softplus(-t * u)))

    def potential_many(self, U):
        t = 2.0 * self.labels - 1.0
        return np.sum(softplus(-t[None, :] * U), axis=1)

    def grad_potential(self, u):
        u = self._check_input(u)
        return sigmoid(u) - self.labels

    def hessian_diag(self, u):
        u = self._check_input(u)
        p = sigmoid(u)
        return p * (1.0 - p)


def simulate_classifier(params: dict, field_seed: int, obs_seed: int):
    """Draw locations, a latent field from the prior, and Bernoulli labels.

    Returns the dataset dict consumed by :class:`LogisticClassifierModel`
    plus the true latent field for oracle comparisons.
    """
    n_points = int(params.get("n_points", 100))
    input_dim = int(params.get("input_dim", 2))
    kernel_variance = float(params.get("kernel_variance", 1.0))
    lengthscale = float(params.get("lengthscale", 1.0))

    loc_rng = np.random.default_rng(obs_seed)
    locations = loc_rng.uniform(0.0, 1.0, size=(n_points, input_dim))

    K = classifier_kernel(locations, kernel_variance, lengthscale)
    K[np.diag_indices_from(K)] += 1e-8 * kernel_variance

    field_rng = np.random.default_rng(field_seed)
    chol = np.linalg.cholesky(K)
    u_true = chol @ field_rng.standard_normal(n_points)

    labels = (loc_rng.uniform(size=n_points) < sigmoid(u_true)).astype(int)
    dataset = {"locations": locations, "labels": labels}
    return dataset, u_true
