"""Truncated spectral representation of Gaussian measures.

A Gaussian reference measure is stored through the ordered eigenpairs of its
covariance operator.  All samplers in this package work on the whitened
Karhunen-Loeve coefficients ``z``, related to the nodal field ``u`` by

    u = B diag(sqrt(lam)) z        z = diag(1/sqrt(lam)) B^T u

where ``B`` is an orthonormal basis map (dense eigenvector matrix or a fast
cosine transform) and ``lam`` are the covariance eigenvalues in non-increasing
order.  Under the reference measure the coefficients are i.i.d. standard
normal, and a diagonal multiplicative perturbation of the eigenvalues turns
the coefficient law into ``N(m, diag(d))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

__all__ = [
    "DenseBasis",
    "CosineBasis",
    "SpectralCovariance",
    "DiagonalScaling",
    "GaussianMeasure",
    "sample_prior",
    "equivalence_diagnostic",
    "change_of_measure_logterm",
    "cameron_martin_norm_sq",
]


class DenseBasis:
    """Orthonormal basis map given by an explicit matrix.

    Columns are orthonormal vectors in nodal space; the matrix may be tall
    (truncated expansion keeping fewer modes than nodal points).
    """

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("basis matrix must be two-dimensional")
        gram = matrix.T @ matrix
        if not np.allclose(gram, np.eye(matrix.shape[1]), atol=1e-8):
            raise ValueError("basis columns are not orthonormal")
        self.matrix = matrix

    @property
    def n_nodal(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[1]

    def apply(self, w: np.ndarray) -> np.ndarray:
        """Synthesis: mode weights -> nodal vector."""
        return self.matrix @ w

    def apply_t(self, u: np.ndarray) -> np.ndarray:
        """Analysis: nodal vector -> mode weights."""
        return self.matrix.T @ u


class CosineBasis:
    """Orthonormal 2-d DCT-II basis on a regular grid, reordered by eigenvalue.

    ``order`` is a permutation of the flat frequency indices putting the
    associated covariance eigenvalues in non-increasing order, so that
    coefficient index 0 is always the largest-variance mode.
    """

    def __init__(self, shape: tuple[int, int], order: np.ndarray):
        self.shape = tuple(shape)
        order = np.asarray(order, dtype=int)
        if order.shape != (self.shape[0] * self.shape[1],):
            raise ValueError("order must be a permutation of all grid modes")
        self.order = order

    @property
    def n_nodal(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def n_modes(self) -> int:
        return self.n_nodal

    def apply(self, w: np.ndarray) -> np.ndarray:
        buf = np.zeros(self.n_nodal)
        buf[self.order] = w
        return idctn(buf.reshape(self.shape), type=2, norm="ortho").ravel()

    def apply_t(self, u: np.ndarray) -> np.ndarray:
        freq = dctn(np.asarray(u, dtype=float).reshape(self.shape), type=2, norm="ortho")
        return freq.ravel()[self.order]


class SpectralCovariance:
    """Covariance operator held as ordered eigenpairs.

    Parameters
    ----------
    basis: DenseBasis or CosineBasis
        Orthonormal map between nodal coordinates and eigen-coordinates.
    eigenvalues: np.ndarray
        Strictly positive, non-increasing eigenvalues, one per basis mode.
    """

    def __init__(self, basis, eigenvalues: np.ndarray, require_sorted: bool = True):
        eigenvalues = np.asarray(eigenvalues, dtype=float)
        if eigenvalues.ndim != 1 or eigenvalues.size != basis.n_modes:
            raise ValueError("need one eigenvalue per basis mode")
        if not np.all(eigenvalues > 0):
            raise ValueError("covariance eigenvalues must be strictly positive")
        # require_sorted=False admits rebuilds that keep an earlier mode
        # ordering fixed while hyperparameters move (the Gibbs field block
        # needs a parameter-independent coefficient-to-mode map)
        if require_sorted and np.any(np.diff(eigenvalues) > 1e-12 * eigenvalues[0]):
            raise ValueError("covariance eigenvalues must be non-increasing")
        self.basis = basis
        self.eigenvalues = eigenvalues
        self.sqrt_eigenvalues = np.sqrt(eigenvalues)
        self._dense_factor = None

    @property
    def dim(self) -> int:
        """Truncation dimension of the expansion."""
        return self.eigenvalues.size

    @property
    def n_nodal(self) -> int:
        return self.basis.n_nodal

    def to_coefficients(self, u: np.ndarray) -> np.ndarray:
        """Whiten a nodal vector: z = diag(1/sqrt(lam)) B^T u."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_nodal,):
            raise ValueError(f"expected nodal vector of length {self.n_nodal}, got {u.shape}")
        return self.basis.apply_t(u) / self.sqrt_eigenvalues

    def from_coefficients(self, z: np.ndarray) -> np.ndarray:
        """Colour a coefficient vector: u = B diag(sqrt(lam)) z."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"expected coefficient vector of length {self.dim}, got {z.shape}")
        return self.basis.apply(self.sqrt_eigenvalues * z)

    def pullback_gradient(self, grad_nodal: np.ndarray) -> np.ndarray:
        """Transport a nodal gradient to coefficient space.

        For a potential V the coefficient-space gradient of ``z -> V(u(z))``
        is ``diag(sqrt(lam)) B^T grad V``, the adjoint of ``from_coefficients``.
        """
        return self.sqrt_eigenvalues * self.basis.apply_t(grad_nodal)

    def dense_factor(self) -> np.ndarray:
        """The (n_nodal, dim) matrix mapping coefficients to nodal values."""
        if self._dense_factor is None:
            cols = [self.from_coefficients(e) for e in np.eye(self.dim)]
            self._dense_factor = np.column_stack(cols)
        return self._dense_factor


@dataclass(frozen=True)
class DiagonalScaling:
    """Diagonal multiplicative perturbation of the covariance eigenvalues.

    Entries below ``d_min`` are clamped at construction; degenerate variance
    estimates early in adaptation would otherwise make the inverse scaling
    blow up inside every adapted acceptance ratio.
    """

    d: np.ndarray
    d_min: float = 1e-8

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 1:
            raise ValueError("scaling entries must form a vector")
        object.__setattr__(self, "d", np.maximum(d, self.d_min))

    @classmethod
    def identity(cls, dim: int) -> "DiagonalScaling":
        return cls(np.ones(dim))

    @property
    def dim(self) -> int:
        return self.d.size


@dataclass(frozen=True)
class GaussianMeasure:
    """Gaussian measure with coefficient-space mean and perturbed covariance."""

    mean: np.ndarray
    cov: SpectralCovariance
    scaling: DiagonalScaling | None = None

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.shape != (self.cov.dim,):
            raise ValueError("mean must live in coefficient space")
        object.__setattr__(self, "mean", mean)
        if self.scaling is not None and self.scaling.dim != self.cov.dim:
            raise ValueError("scaling dimension does not match covariance")

    def scaling_or_identity(self) -> DiagonalScaling:
        if self.scaling is None:
            return DiagonalScaling.identity(self.cov.dim)
        return self.scaling


def sample_prior(measure: GaussianMeasure, rng: np.random.Generator) -> np.ndarray:
    """Draw a coefficient vector ``mean + sqrt(d) * xi`` with standard normal xi."""
    d = measure.scaling_or_identity().d
    xi = rng.standard_normal(measure.cov.dim)
    return measure.mean + np.sqrt(d) * xi


def equivalence_diagnostic(scaling: DiagonalScaling) -> float:
    """Sum of squared deviations of the scaling from one.

    Finiteness of this sum is the testable criterion for the perturbed and
    unperturbed reference measures to be equivalent rather than mutually
    singular; at finite truncation it doubles as a runtime health metric for
    estimated scalings.
    """
    return float(np.sum((scaling.d - 1.0) ** 2))


def change_of_measure_logterm(z: np.ndarray, scaling: DiagonalScaling) -> float:
    """Quadratic correction ``0.5 * sum((1 - 1/d_k) z_k^2)``.

    This is the term added to the potential when the posterior is rewritten
    against the perturbed reference measure, and (with both signs) the paired
    quadratics in the adapted acceptance ratios.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (scaling.dim,):
        raise ValueError("coefficient vector and scaling lengths differ")
    return float(0.5 * np.sum((1.0 - 1.0 / scaling.d) * z * z))


def cameron_martin_norm_sq(m: np.ndarray, scaling: DiagonalScaling) -> float:
    """Squared whitened norm ``sum(m_k^2 / d_k)`` of a coefficient-space mean.

    Finiteness is the admissibility condition for shifting the reference
    measure by ``m``; reported as a diagnostic alongside the equivalence sum.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (scaling.dim,):
        raise ValueError("coefficient vector and scaling lengths differ")
    return float(np.sum(m * m / scaling.d))
