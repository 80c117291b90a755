"""Online estimation of the proposal's mean and scaling, plus step-size tuning.

The directional mean and variance of the target are estimated recursively
from the chain's whitened coefficients:

    m[k] <- w * z[k] + (1 - w) * m[k]
    d[k] <- w * (z[k] - m[k])^2 + (1 - w) * d[k]        w = 1 / j

(in whitened coordinates the prior-eigenvalue division is already absorbed,
so ``d`` tracks the coefficient variance directly).  Only the leading
``n_trunc`` modes are kept; the tail is pinned to mean zero and scaling one,
which keeps the estimated reference measure equivalent to the prior by
construction.  ``n_trunc`` grows by 5 every 1000th iteration.

The step-size controller is Robbins-Monro on the logit of ``beta`` (log of
``delta`` for kernels parameterised by the discretisation step), driving the
realised acceptance rate to its target with gain ``j^-0.7``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = ["AdaptState", "update_moments", "apply_truncation", "tune_beta"]

#: modes added to the truncation window at each schedule tick
TRUNCATION_INCREMENT = 5
#: iterations between truncation-window advances
TRUNCATION_PERIOD = 1000
#: Robbins-Monro gain exponent
CONTROLLER_EXPONENT = 0.7
#: smoothing weight for the logged acceptance-rate estimate
ACCEPT_EMA_WEIGHT = 0.02

_BETA_MIN = 1e-4
_BETA_MAX = 1.0 - 1e-12
_DELTA_MIN = 1e-8
_DELTA_MAX = 1e8


@dataclass(frozen=True)
class AdaptState:
    """Running adaptation statistics for one chain.

    ``j`` counts completed moment updates, so the next update uses weight
    ``1 / (j + 1)``.  ``beta`` holds the controller's step parameter, which
    is the contraction step for beta-kernels and the discretisation step for
    delta-kernels (``scale_kind`` says which).  After ``apply_truncation``
    the stored estimates beyond ``n_trunc`` are exactly (0, 1).
    """

    m_hat: np.ndarray
    d_hat: np.ndarray
    j: int = 0
    n_trunc: int = 5
    beta: float = 0.5
    target_accept: float = 0.234
    accept_ema: float = 0.0
    frozen: bool = False
    scale_kind: str = "beta"
    untruncated: bool = False
    d_min: float = 1e-8

    @classmethod
    def initial(cls, dim: int, beta: float = 0.5, target_accept: float = 0.234,
                n0: int = 5, scale_kind: str = "beta", untruncated: bool = False) -> "AdaptState":
        """Prior-matching start: zero mean, unit scaling."""
        return cls(
            m_hat=np.zeros(dim),
            d_hat=np.ones(dim),
            n_trunc=min(int(n0), dim),
            beta=float(beta),
            target_accept=float(target_accept),
            scale_kind=scale_kind,
            untruncated=untruncated,
        )

    @property
    def dim(self) -> int:
        return self.m_hat.size


def update_moments(adapt: AdaptState, z: np.ndarray) -> AdaptState:
    """Apply one step of both moment recursions and advance the counter.

    The very first update makes the variance estimate degenerate (the mean
    equals the sample); it is clamped at ``d_min`` rather than special-cased
    so the recursion stays branch-free.
    """
    if adapt.frozen:
        return adapt
    z = np.asarray(z, dtype=float)
    if z.shape != adapt.m_hat.shape:
        raise ValueError("coefficient vector does not match the adaptation state")
    w = 1.0 / (adapt.j + 1)
    m_new = w * z + (1.0 - w) * adapt.m_hat
    d_new = w * (z - m_new) ** 2 + (1.0 - w) * adapt.d_hat
    d_new = np.maximum(d_new, adapt.d_min)
    return replace(adapt, m_hat=m_new, d_hat=d_new, j=adapt.j + 1)


def apply_truncation(adapt: AdaptState) -> AdaptState:
    """Advance the truncation window on schedule and pin the tails to (0, 1).

    The returned estimates are exactly what the kernel configuration
    consumes.  With ``untruncated`` set the window is the whole vector and
    nothing is pinned (kept only for the estimator-comparison experiment).
    """
    n = adapt.n_trunc
    if adapt.j > 0 and adapt.j % TRUNCATION_PERIOD == 0 and not adapt.frozen:
        n = min(n + TRUNCATION_INCREMENT, adapt.dim)
    if adapt.untruncated:
        return replace(adapt, n_trunc=n)
    m_new = adapt.m_hat.copy()
    d_new = adapt.d_hat.copy()
    m_new[n:] = 0.0
    d_new[n:] = 1.0
    return replace(adapt, m_hat=m_new, d_hat=d_new, n_trunc=n)


def tune_beta(adapt: AdaptState, accepted: bool) -> AdaptState:
    """Robbins-Monro update of the step parameter toward the target rate."""
    indicator = 1.0 if accepted else 0.0
    ema = adapt.accept_ema + ACCEPT_EMA_WEIGHT * (indicator - adapt.accept_ema)
    if adapt.frozen:
        # the step parameter stays bit-identical; only the logged rate moves
        return replace(adapt, accept_ema=ema)
    gain = max(adapt.j, 1) ** (-CONTROLLER_EXPONENT)
    innovation = gain * (indicator - adapt.target_accept)
    if adapt.scale_kind == "delta":
        value = math.exp(min(max(math.log(adapt.beta) + innovation,
                                 math.log(_DELTA_MIN)), math.log(_DELTA_MAX)))
    else:
        b = min(max(adapt.beta, _BETA_MIN), _BETA_MAX)
        logit = math.log(b / (1.0 - b)) + innovation
        value = 1.0 / (1.0 + math.exp(-logit))
        value = min(max(value, _BETA_MIN), _BETA_MAX)
    return replace(adapt, beta=value, accept_ema=ema)
