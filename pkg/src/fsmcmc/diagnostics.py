"""Autocorrelation, effective sample size, and chain summaries.

ESS uses the initial-positive-sequence truncation of the autocorrelation
sum (pairwise sums of consecutive autocorrelations are kept while positive),
which is parameter-free and standard for reversible MCMC chains.  ESS is
capped at the chain length; super-efficient antithetic chains are reported
at the cap with a warning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Trace",
    "autocorrelation",
    "acf",
    "ess",
    "ess_summary",
    "EssSummary",
    "mcse_mean",
    "mcse_var",
]


@dataclass(frozen=True)
class Trace:
    """A chain trace: (iterations x coordinates) values plus a burn-in cut."""

    values: np.ndarray
    burn_in: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError("trace values must be (iterations x coordinates)")
        if not np.all(np.isfinite(values)):
            raise ValueError("trace contains non-finite values")
        if not 0 <= self.burn_in < values.shape[0]:
            raise ValueError("burn-in must be smaller than the trace length")
        object.__setattr__(self, "values", values)

    @property
    def post_burn_in(self) -> np.ndarray:
        return self.values[self.burn_in:]


def acf(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased-normalised sample autocorrelations at lags 0..max_lag (FFT)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError("lag must be smaller than the series length")
    x = x - x.mean()
    var = float(x @ x)
    if var == 0.0:
        warnings.warn("zero-variance series: autocorrelation defined as 0", RuntimeWarning)
        out = np.zeros(max_lag + 1)
        return out
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    corr = np.fft.irfft(f * np.conjugate(f), nfft)[: max_lag + 1]
    return corr / var


def autocorrelation(x: np.ndarray, lag: int) -> float:
    """Sample autocorrelation of a series at one lag."""
    return float(acf(x, lag)[lag])


def ess(x: np.ndarray) -> float:
    """Effective sample size of a single series."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 100:
        raise ValueError("need at least 100 samples for a stable ESS estimate")
    if np.var(x) == 0.0:
        warnings.warn("zero-variance series: ESS reported as the chain length", RuntimeWarning)
        return float(n)
    rho = acf(x, min(n - 1, n // 2))
    # pairwise sums of (rho[2k], rho[2k+1]); keep the initial positive run
    n_pairs = rho.size // 2
    tau = -1.0
    found_positive = False
    for k in range(n_pairs):
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        found_positive = True
    if not found_positive or tau <= 0.0:
        warnings.warn(
            "negative autocorrelation at lag one: ESS capped at the chain length",
            RuntimeWarning,
        )
        return float(n)
    return float(min(n, n / tau))


@dataclass(frozen=True)
class EssSummary:
    """Per-coordinate ESS extremes in the units the comparison tables use."""

    min_ess: float
    median_ess: float
    min_per_sec: float
    median_per_sec: float
    min_per_iter: float
    median_per_iter: float

    def as_dict(self) -> dict:
        return {
            "min_ess": self.min_ess,
            "median_ess": self.median_ess,
            "min_per_sec": self.min_per_sec,
            "median_per_sec": self.median_per_sec,
            "min_per_iter": self.min_per_iter,
            "median_per_iter": self.median_per_iter,
        }


def ess_summary(trace: Trace | np.ndarray, wall_seconds: float, iterations: int) -> EssSummary:
    """Min and median per-coordinate ESS, per second and per iteration."""
    values = trace.post_burn_in if isinstance(trace, Trace) else np.atleast_2d(np.asarray(trace, dtype=float))
    if values.ndim == 1:
        values = values[:, None]
    if values.size == 0:
        raise ValueError("empty trace")
    per_coord = np.array([ess(values[:, k]) for k in range(values.shape[1])])
    lo, mid = float(per_coord.min()), float(np.median(per_coord))
    return EssSummary(
        min_ess=lo,
        median_ess=mid,
        min_per_sec=lo / wall_seconds if wall_seconds > 0 else float("nan"),
        median_per_sec=mid / wall_seconds if wall_seconds > 0 else float("nan"),
        min_per_iter=lo / iterations,
        median_per_iter=mid / iterations,
    )


def mcse_mean(x: np.ndarray) -> float:
    """Monte Carlo standard error of the chain mean, discounted by ESS."""
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.var(x) / ess(x)))


def mcse_var(x: np.ndarray) -> float:
    """Monte Carlo standard error of the chain variance estimate.

    Uses the chain of squared deviations: the variance estimate is its mean,
    so its error follows from that chain's own variance and ESS.
    """
    x = np.asarray(x, dtype=float)
    sq = (x - x.mean()) ** 2
    if np.var(sq) == 0.0:
        return 0.0
    return float(np.sqrt(np.var(sq) / ess(sq)))
