"""Proposal kernels and their exact Metropolis-Hastings log-ratios.

Every kernel operates on the whitened Karhunen-Loeve coefficients ``z`` of
the latent field; the reference (prior) law of ``z`` is standard normal, so
the unnormalised log-posterior is ``-potential(u(z)) - 0.5 ||z||^2``.  Each
kernel exposes

* ``propose_with_noise(state, xi)`` - the deterministic proposal map given a
  standard normal draw ``xi``,
* ``log_ratio(state_u, state_v)``   - the acceptance log-ratio J(u, v),
* ``proposal_logpdf(state_from, z_to)`` - the exact Gaussian proposal
  density, used by the detailed-balance test that validates every ratio:

      log pi(u) + log q(v|u) + J(u, v) == log pi(v) + log q(u|v).

Each step consumes exactly ``dim`` standard normals plus one uniform, so two
kernels driven by generators with the same seed see identical noise; the
reduction tests (adapted kernels at identity scaling collapse onto their
plain counterparts) rely on this layout.

Naming note: ``beta`` is the step-size parameter in (0, 1]; ``c_beta`` is the
contraction ``1 - sqrt(1 - beta^2)``; ``delta`` is the discretisation step
the per-mode and auxiliary kernels are parameterised by, related to ``beta``
through ``beta^2 = 8 delta / (2 + delta)^2`` on the branch ``delta in (0, 2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .gaussian import DiagonalScaling, change_of_measure_logterm

__all__ = [
    "ChainState",
    "KernelConfig",
    "StepOutcome",
    "evaluate_state",
    "log_posterior",
    "mh_accept",
    "delta_from_beta",
    "beta_from_delta",
    "per_mode_beta",
    "make_kernel",
    "KERNEL_KINDS",
]


@dataclass
class ChainState:
    """Current chain position with cached model evaluations.

    ``z`` is the coefficient vector; ``phi`` caches the potential at the
    corresponding field and ``grad`` the coefficient-space gradient when the
    kernel needs it.  ``aux`` is a per-state scratch slot for kernels with
    expensive state-dependent precomputations (the Hessian kernel's
    factorisation); states are otherwise treated as immutable.
    """

    z: np.ndarray
    phi: float
    grad: np.ndarray | None = None
    aux: dict = field(default_factory=dict)


@dataclass
class KernelConfig:
    """Tunable kernel parameters.

    The runner mutates ``beta``/``delta``/``scaling``/``mean`` in place as
    adaptation proceeds; kernels read them at call time.
    """

    kind: str
    beta: float = 0.5
    delta: float = 0.5
    scaling: DiagonalScaling | None = None
    mean: np.ndarray | None = None

    def validate(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")


@dataclass
class StepOutcome:
    proposed_z: np.ndarray
    log_ratio: float
    accepted: bool
    new_state: ChainState


#: re-derive cached potentials/gradients inside every step and compare;
#: doubles the model-evaluation cost, so meant for debugging runs only
CACHE_CHECKS = False


def evaluate_state(z: np.ndarray, model, need_grad: bool) -> ChainState:
    """Build a ChainState at ``z``, caching potential (and gradient)."""
    z = np.asarray(z, dtype=float)
    u = model.prior.from_coefficients(z)
    phi = model.potential(u)
    grad = None
    if need_grad:
        grad = model.prior.pullback_gradient(model.grad_potential(u))
    return ChainState(z=z, phi=phi, grad=grad)


def check_state_consistency(state: ChainState, model, atol: float = 1e-12):
    """Assert the cached evaluations still match the state's position."""
    fresh = evaluate_state(state.z, model, state.grad is not None)
    if abs(fresh.phi - state.phi) > atol * max(1.0, abs(state.phi)):
        raise AssertionError("cached potential is inconsistent with the state")
    if state.grad is not None and not np.allclose(fresh.grad, state.grad, atol=atol):
        raise AssertionError("cached gradient is inconsistent with the state")


def log_posterior(state: ChainState) -> float:
    """Unnormalised coefficient-space log-posterior at a state."""
    return -state.phi - 0.5 * float(state.z @ state.z)


def mh_accept(log_ratio: float, rng: np.random.Generator) -> bool:
    """Accept iff log(U) < J; always consumes one uniform draw."""
    if math.isnan(log_ratio):
        raise ValueError("acceptance log-ratio is NaN; the proposal ratio is inconsistent")
    u = rng.uniform()
    return math.log(u) < log_ratio if u > 0.0 else False


def c_beta(beta: float) -> float:
    """Contraction 1 - sqrt(1 - beta^2), in the cancellation-free form."""
    return beta * beta / (1.0 + math.sqrt(max(0.0, 1.0 - beta * beta)))


def delta_from_beta(beta: float) -> float:
    """Invert beta^2 = 8 delta / (2 + delta)^2 on the branch delta in (0, 2]."""
    s = math.sqrt(max(0.0, 1.0 - beta * beta))
    return 2.0 * (1.0 - s) / (1.0 + s)


def beta_from_delta(delta: float) -> float:
    return math.sqrt(8.0 * delta) / (2.0 + delta)


def per_mode_beta(delta: float, d: np.ndarray):
    """Per-mode step sizes beta_i^2 = 8 delta d_i / (2 + delta d_i)^2.

    Always lies in (0, 1]; returns (beta_i, c_i).
    """
    x = delta * d
    beta = np.sqrt(8.0 * x) / (2.0 + x)
    b2 = beta * beta
    c = b2 / (1.0 + np.sqrt(np.maximum(0.0, 1.0 - b2)))
    return beta, c


def _diag_normal_logpdf(x, mean, var):
    r = x - mean
    return float(-0.5 * np.sum(np.log(2.0 * np.pi * var) + r * r / var))


class ProposalKernel:
    """Shared step logic; subclasses define the proposal map and ratio."""

    kind: str = ""
    needs_gradient = False
    needs_hessian = False
    #: which scalar the acceptance-rate controller should tune
    step_scale = "beta"

    def __init__(self, cfg: KernelConfig, model):
        self.cfg = cfg
        self.model = model
        self.dim = model.prior.dim
        self.factorization_failures = 0

    # -- pieces read live from cfg so adaptation can mutate it ------------
    def _scaling(self) -> np.ndarray:
        if self.cfg.scaling is None:
            return np.ones(self.dim)
        return self.cfg.scaling.d

    def _scaling_obj(self) -> DiagonalScaling:
        if self.cfg.scaling is None:
            return DiagonalScaling.identity(self.dim)
        return self.cfg.scaling

    def _mean(self) -> np.ndarray:
        if self.cfg.mean is None:
            return np.zeros(self.dim)
        return self.cfg.mean

    # -- interface ---------------------------------------------------------
    def propose_with_noise(self, state: ChainState, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_ratio(self, state_u: ChainState, state_v: ChainState) -> float:
        raise NotImplementedError

    def proposal_logpdf(self, state_from: ChainState, z_to: np.ndarray) -> float:
        raise NotImplementedError

    def step(self, state: ChainState, rng: np.random.Generator) -> StepOutcome:
        if CACHE_CHECKS:
            check_state_consistency(state, self.model)
        xi = rng.standard_normal(self.dim)
        z_v = self.propose_with_noise(state, xi)
        state_v = evaluate_state(z_v, self.model, self.needs_gradient)
        if np.isfinite(state_v.phi):
            J = self.log_ratio(state, state_v)
        else:
            J = -np.inf
        accepted = mh_accept(J, rng)
        new_state = state_v if accepted else state
        return StepOutcome(proposed_z=z_v, log_ratio=J, accepted=accepted, new_state=new_state)


class PcnKernel(ProposalKernel):
    """Contraction toward zero with prior noise; ratio is the potential drop."""

    kind = "pcn"

    def propose_with_noise(self, state, xi):
        b = self.cfg.beta
        return math.sqrt(1.0 - b * b) * state.z + b * xi

    def log_ratio(self, su, sv):
        return su.phi - sv.phi

    def proposal_logpdf(self, s_from, z_to):
        b = self.cfg.beta
        mean = math.sqrt(1.0 - b * b) * s_from.z
        return _diag_normal_logpdf(z_to, mean, np.full(self.dim, b * b))


class PcnlKernel(ProposalKernel):
    """pCN with a prior-preconditioned drift down the potential gradient."""

    kind = "pcnl"
    needs_gradient = True

    def propose_with_noise(self, state, xi):
        b = self.cfg.beta
        c = c_beta(b)
        return math.sqrt(1.0 - b * b) * state.z - c * state.grad + b * xi

    def log_ratio(self, su, sv):
        quarter_delta = delta_from_beta(self.cfg.beta) / 4.0
        gu, gv = su.grad, sv.grad
        zu, zv = su.z, sv.z
        return float(
            su.phi - sv.phi
            + quarter_delta * (gu @ gu - gv @ gv)
            + 0.5 * (zv - zu) @ (gu + gv)
            + quarter_delta * (zv + zu) @ (gu - gv)
        )

    def proposal_logpdf(self, s_from, z_to):
        b = self.cfg.beta
        c = c_beta(b)
        mean = math.sqrt(1.0 - b * b) * s_from.z - c * s_from.grad
        return _diag_normal_logpdf(z_to, mean, np.full(self.dim, b * b))


class PcnAmKernel(ProposalKernel):
    """Gradient-free kernel contracting toward an estimated posterior mean,
    with noise drawn from the perturbed reference measure."""

    kind = "pcn_am"

    def propose_with_noise(self, state, xi):
        b = self.cfg.beta
        c = c_beta(b)
        d = self._scaling()
        return (1.0 - c) * state.z + c * self._mean() + b * np.sqrt(d) * xi

    def log_ratio(self, su, sv):
        scaling = self._scaling_obj()
        m = self._mean()
        cross = float((sv.z - su.z) @ (m / scaling.d))
        return (
            su.phi - sv.phi
            - change_of_measure_logterm(sv.z, scaling)
            + change_of_measure_logterm(su.z, scaling)
            - cross
        )

    def proposal_logpdf(self, s_from, z_to):
        b = self.cfg.beta
        c = c_beta(b)
        d = self._scaling()
        mean = (1.0 - c) * s_from.z + c * self._mean()
        return _diag_normal_logpdf(z_to, mean, b * b * d)


class PcnAm0Kernel(PcnAmKernel):
    """Adapted reference measure without the posterior-mean contraction."""

    kind = "pcn_am0"

    def _mean(self):
        return np.zeros(self.dim)


class PcnlAmKernel(ProposalKernel):
    """Langevin kernel under the adapted reference measure."""

    kind = "pcnl_am"
    needs_gradient = True

    def _mean_map(self, state):
        d = self._scaling()
        return state.z - d * (state.grad + state.z)

    def propose_with_noise(self, state, xi):
        b = self.cfg.beta
        c = c_beta(b)
        d = self._scaling()
        return (1.0 - c) * state.z + c * self._mean_map(state) + b * np.sqrt(d) * xi

    def log_ratio(self, su, sv):
        b = self.cfg.beta
        c = c_beta(b)
        scaling = self._scaling_obj()
        inv_d = 1.0 / scaling.d
        mu, mv = self._mean_map(su), self._mean_map(sv)
        forward = float((mu * inv_d) @ (sv.z - (1.0 - c) * su.z - 0.5 * c * mu))
        backward = float((mv * inv_d) @ (su.z - (1.0 - c) * sv.z - 0.5 * c * mv))
        return (
            su.phi - sv.phi
            - change_of_measure_logterm(sv.z, scaling)
            + change_of_measure_logterm(su.z, scaling)
            - (c / (b * b)) * forward
            + (c / (b * b)) * backward
        )

    def proposal_logpdf(self, s_from, z_to):
        b = self.cfg.beta
        c = c_beta(b)
        d = self._scaling()
        mean = (1.0 - c) * s_from.z + c * self._mean_map(s_from)
        return _diag_normal_logpdf(z_to, mean, b * b * d)


def _ascending_branch_delta(delta: float, d: np.ndarray) -> float:
    """Clamp the step so every per-mode beta_i is increasing in delta.

    beta_i^2 = 8 delta d_i / (2 + delta d_i)^2 peaks at delta d_i = 2 and
    then shrinks again; past the peak a larger step parameter produces a
    smaller move, which would flip the sign of the acceptance-rate feedback
    loop.  Restricting to the ascending branch keeps the controller stable,
    mirroring the delta in (0, 2] branch choice of the uniform-step kernels.
    """
    return min(delta, 2.0 / float(np.max(d)))


class PcnApKernel(ProposalKernel):
    """Per-mode step sizes derived from the estimated directional variances;
    the reference measure stays the prior, so the ratio only sees the mean."""

    kind = "pcn_ap"
    step_scale = "delta"

    def _betas(self):
        d = self._scaling()
        return per_mode_beta(_ascending_branch_delta(self.cfg.delta, d), d)

    def propose_with_noise(self, state, xi):
        beta, c = self._betas()
        return (1.0 - c) * state.z + c * self._mean() + beta * xi

    def log_ratio(self, su, sv):
        # (2 - c) c / beta^2 = 1 collapses the mode-weighted cross term.
        return float(su.phi - sv.phi - (sv.z - su.z) @ self._mean())

    def proposal_logpdf(self, s_from, z_to):
        beta, c = self._betas()
        mean = (1.0 - c) * s_from.z + c * self._mean()
        return _diag_normal_logpdf(z_to, mean, beta * beta)


class PcnlApKernel(ProposalKernel):
    """Langevin drift with per-mode step sizes, prior reference measure."""

    kind = "pcnl_ap"
    needs_gradient = True
    step_scale = "delta"

    def _betas(self):
        d = self._scaling()
        return per_mode_beta(_ascending_branch_delta(self.cfg.delta, d), d)

    def propose_with_noise(self, state, xi):
        beta, c = self._betas()
        return (1.0 - c) * state.z - c * state.grad + beta * xi

    def log_ratio(self, su, sv):
        beta, c = self._betas()
        w = c / (beta * beta)
        forward = float((w * su.grad) @ (sv.z - (1.0 - c) * su.z + 0.5 * c * su.grad))
        backward = float((w * sv.grad) @ (su.z - (1.0 - c) * sv.z + 0.5 * c * sv.grad))
        return su.phi - sv.phi + forward - backward

    def proposal_logpdf(self, s_from, z_to):
        beta, c = self._betas()
        mean = (1.0 - c) * s_from.z - c * s_from.grad
        return _diag_normal_logpdf(z_to, mean, beta * beta)


class PcnlHmKernel(ProposalKernel):
    """Second-order kernel: the reference measure at each state combines the
    prior precision with the local likelihood curvature.

    The acceptance ratio is evaluated from the explicit Gaussian proposal
    densities.  The two closed forms printed for this kernel disagree with
    each other and both omit the determinant ratio of the state-dependent
    proposal covariances, so the density form is the one that passes the
    detailed-balance check (see tests).
    """

    kind = "pcnl_hm"
    needs_gradient = True
    needs_hessian = True

    def _context(self, state: ChainState):
        ctx = state.aux.get("hm", "missing")
        if ctx != "missing":
            return ctx
        u = self.model.prior.from_coefficients(state.z)
        h = self.model.hessian_diag(u)
        S = self.model.prior.dense_factor()
        with np.errstate(over="ignore", invalid="ignore"):
            M = np.eye(self.dim) + (S.T * h) @ S
        try:
            if not np.all(np.isfinite(M)):
                raise np.linalg.LinAlgError("non-finite curvature")
            L = cholesky(M, lower=True)
        except (np.linalg.LinAlgError, ValueError):
            self.factorization_failures += 1
            state.aux["hm"] = None
            return None
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        mean_map = state.z - cho_solve((L, True), state.grad + state.z)
        ctx = {"L": L, "logdet": logdet, "mean_map": mean_map}
        state.aux["hm"] = ctx
        return ctx

    def propose_with_noise(self, state, xi):
        ctx = self._context(state)
        if ctx is None:
            # factorisation failed; propose in place so the step is rejected
            return state.z.copy()
        b = self.cfg.beta
        c = c_beta(b)
        mean = (1.0 - c) * state.z + c * ctx["mean_map"]
        noise = solve_triangular(ctx["L"], xi, lower=True, trans="T")
        return mean + b * noise

    def proposal_logpdf(self, s_from, z_to):
        ctx = self._context(s_from)
        if ctx is None:
            return -np.inf
        b = self.cfg.beta
        c = c_beta(b)
        mean = (1.0 - c) * s_from.z + c * ctx["mean_map"]
        resid = z_to - mean
        y = ctx["L"].T @ resid
        return float(
            -0.5 * self.dim * math.log(2.0 * math.pi * b * b)
            + 0.5 * ctx["logdet"]
            - 0.5 * float(y @ y) / (b * b)
        )

    def log_ratio(self, su, sv):
        if self._context(su) is None or self._context(sv) is None:
            return -np.inf
        return (
            log_posterior(sv)
            - log_posterior(su)
            + self.proposal_logpdf(sv, su.z)
            - self.proposal_logpdf(su, sv.z)
        )


class MalaKernel(ProposalKernel):
    """Preconditioned Langevin proposal with the standard adjustment ratio."""

    kind = "mala"
    needs_gradient = True

    def _proposal_mean(self, state):
        b = self.cfg.beta
        d = self._scaling()
        return state.z - 0.5 * b * b * d * (state.grad + state.z)

    def propose_with_noise(self, state, xi):
        b = self.cfg.beta
        d = self._scaling()
        return self._proposal_mean(state) + b * np.sqrt(d) * xi

    def proposal_logpdf(self, s_from, z_to):
        b = self.cfg.beta
        d = self._scaling()
        return _diag_normal_logpdf(z_to, self._proposal_mean(s_from), b * b * d)

    def log_ratio(self, su, sv):
        return (
            log_posterior(sv)
            - log_posterior(su)
            + self.proposal_logpdf(sv, su.z)
            - self.proposal_logpdf(su, sv.z)
        )


class MgradKernel(ProposalKernel):
    """Marginal auxiliary-gradient sampler.

    In the prior eigenbasis the preconditioner is diagonal with entries
    ``a_i = 1 / (1/lam_i + 2/delta)``; the proposal mean uses the prefactor
    ``2/delta`` (the printed table variant with ``delta/2`` diverges as the
    step grows and reverts to nothing sensible as it shrinks).  The ratio is
    assembled from the explicit proposal densities, so the chain targets the
    posterior for either mean convention; the chosen one is the variant that
    recovers the prior at large steps and the Langevin diffusion at small.
    """

    kind = "mgrad"
    needs_gradient = True
    step_scale = "delta"

    def _coeffs(self):
        delta = self.cfg.delta
        lam = self.model.prior.eigenvalues
        a = 1.0 / (1.0 / lam + 2.0 / delta)
        w = a / lam
        var = w * ((2.0 / delta) * a + 1.0)
        return a, w, var

    def _proposal_mean(self, state):
        delta = self.cfg.delta
        a, w, _ = self._coeffs()
        return (2.0 / delta) * a * state.z - w * state.grad

    def propose_with_noise(self, state, xi):
        _, _, var = self._coeffs()
        return self._proposal_mean(state) + np.sqrt(var) * xi

    def proposal_logpdf(self, s_from, z_to):
        _, _, var = self._coeffs()
        return _diag_normal_logpdf(z_to, self._proposal_mean(s_from), var)

    def log_ratio(self, su, sv):
        return (
            log_posterior(sv)
            - log_posterior(su)
            + self.proposal_logpdf(sv, su.z)
            - self.proposal_logpdf(su, sv.z)
        )


_KERNEL_CLASSES = (
    PcnKernel,
    PcnAm0Kernel,
    PcnAmKernel,
    PcnlKernel,
    PcnlAmKernel,
    PcnApKernel,
    PcnlApKernel,
    PcnlHmKernel,
    MalaKernel,
    MgradKernel,
)

KERNEL_KINDS = {cls.kind: cls for cls in _KERNEL_CLASSES}


def make_kernel(cfg: KernelConfig, model) -> ProposalKernel:
    """Instantiate the kernel named by ``cfg.kind`` against a model."""
    cfg.validate()
    cls = KERNEL_KINDS[cfg.kind]
    if cls.needs_gradient and not model.has_gradient:
        raise NotImplementedError(f"kernel {cfg.kind!r} needs a gradient the model does not expose")
    if cls.needs_hessian and not model.has_hessian:
        raise NotImplementedError(f"kernel {cfg.kind!r} needs a Hessian the model does not expose")
    return cls(cfg, model)
