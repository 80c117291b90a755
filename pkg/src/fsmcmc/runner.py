"""Experiment drivers: single chains, the Cox-process Gibbs loop, comparisons.

Randomness layout: the run seed spawns three independent streams (field
chain, hyperparameter chain, initial state), so disabling one block leaves
the others' draws untouched.  A plain run and a Gibbs run with the
hyperparameter block disabled therefore produce identical field chains on
the same seed.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .adaptation import AdaptState, apply_truncation, tune_beta, update_moments
from .config import ExperimentConfig
from .datasets import load_dataset
from .diagnostics import EssSummary, Trace, ess_summary
from .gaussian import DenseBasis, DiagonalScaling, SpectralCovariance, equivalence_diagnostic
from .kernels import KernelConfig, evaluate_state, make_kernel, mh_accept
from .models import (
    BinomialLatticeModel,
    FlatPotentialModel,
    GaussianLikelihoodModel,
    LGCPModel,
    LogisticClassifierModel,
    simulate_data,
)

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Everything a finished run reports.

    ``coef_trace`` holds the unthinned post-burn-in coefficient chain (ESS is
    always computed before thinning); ``thinned_trace`` is what lands in
    trace.csv.  ``field_trace`` carries nodal values for Gibbs runs, where
    the coefficient-to-field map moves with the hyperparameters.
    """

    ess: EssSummary
    acceptance_rate: float
    step_kind: str
    final_step: float
    wall_seconds: float
    iterations: int
    burn_in: int
    coef_trace: np.ndarray
    thinned_trace: np.ndarray
    thinned_iterations: np.ndarray
    adapt_trace: np.ndarray
    config_echo: dict
    model_kind: str
    kernel_kind: str
    theta_trace: np.ndarray | None = None
    theta_acceptance: float | None = None
    field_trace: np.ndarray | None = None
    final_mean: np.ndarray | None = None
    final_scaling: np.ndarray | None = None
    paths: dict | None = None
    extras: dict | None = None


def diagonal_prior(params: dict) -> SpectralCovariance:
    """Prior for the synthetic 'flat' and 'gaussian' model kinds."""
    if "eigenvalues" in params:
        vals = np.asarray(params["eigenvalues"], dtype=float)
    else:
        dim = int(params.get("dim", 16))
        decay = float(params.get("decay", 2.0))
        scale = float(params.get("scale", 1.0))
        vals = scale * np.arange(1, dim + 1, dtype=float) ** (-decay)
    return SpectralCovariance(DenseBasis(np.eye(vals.size)), vals)


def build_model(spec):
    """Construct the target model named by a ModelSpec.

    Returns (model, true_field or None); the true field is only available
    for synthesised datasets.
    """
    params = spec.params
    true_field = None
    if spec.kind == "flat":
        return FlatPotentialModel(diagonal_prior(params)), None
    if spec.kind == "gaussian":
        prior = diagonal_prior(params)
        y = np.asarray(params.get("y", np.zeros(prior.n_nodal)), dtype=float)
        return GaussianLikelihoodModel(prior, y, noise=float(params.get("noise", 1.0))), None

    if spec.synthesize is not None:
        synth = dict(params)
        synth.update(spec.synthesize)
        field_seed = int(synth.pop("field_seed", 0))
        obs_seed = int(synth.pop("obs_seed", field_seed + 1))
        dataset, true_field = simulate_data(spec.kind, synth, field_seed, obs_seed)
    else:
        shape = tuple(params["shape"]) if "shape" in params else None
        dataset = load_dataset(spec.data, spec.kind, shape=shape)

    if spec.kind == "logistic":
        model = LogisticClassifierModel(
            dataset["locations"], dataset["labels"],
            kernel_variance=float(params.get("kernel_variance", 1.0)),
            lengthscale=float(params.get("lengthscale", 1.0)),
            jitter_scale=float(params.get("jitter_scale", 1e-8)),
            n_components=params.get("n_components"),
        )
    elif spec.kind == "binomial":
        model = BinomialLatticeModel(
            dataset["shape"], dataset["trials"], dataset["successes"],
            kappa=float(params.get("kappa", 1.0)),
            sigma=float(params.get("sigma", 1.0)),
            precision_exponent=int(params.get("precision_exponent", 2)),
        )
    elif spec.kind == "lgcp":
        model = LGCPModel(
            dataset["shape"], dataset["counts"],
            cell_area=float(params.get("cell_area", 1.0)),
            sigma=float(params.get("sigma", 1.0)),
            tau=float(params.get("tau", 4.0)),
            spacing=float(params.get("spacing", 1.0)),
            hyper_prior=params.get("hyper_prior"),
        )
    else:
        raise ValueError(f"unknown model kind {spec.kind!r}")
    return model, true_field


def _initial_state(config, model, kernel, rng_init):
    n = model.prior.dim
    init = config.model.params.get("init", "zeros")
    if init == "prior":
        z0 = rng_init.standard_normal(n)
    else:
        z0 = np.zeros(n)
    return evaluate_state(z0, model, kernel.needs_gradient)


def _push_adapted(kernel_cfg, kernel, adapt):
    if kernel.step_scale == "delta":
        kernel_cfg.delta = adapt.beta
    else:
        kernel_cfg.beta = adapt.beta
    kernel_cfg.scaling = DiagonalScaling(adapt.d_hat)
    kernel_cfg.mean = adapt.m_hat


def _run_chain(config: ExperimentConfig, gibbs_mode: bool) -> RunResult:
    model, _ = build_model(config.model)
    n = model.prior.dim
    run = config.run
    adaptation = config.adaptation
    gibbs = config.gibbs

    seed_seq = np.random.SeedSequence(run.seed)
    field_ss, theta_ss, init_ss = seed_seq.spawn(3)
    rng_field = np.random.default_rng(field_ss)
    rng_theta = np.random.default_rng(theta_ss)
    rng_init = np.random.default_rng(init_ss)

    kernel_cfg = KernelConfig(
        kind=config.kernel.kind, beta=config.kernel.beta, delta=config.kernel.delta,
        scaling=DiagonalScaling.identity(n), mean=np.zeros(n),
    )
    kernel = make_kernel(kernel_cfg, model)
    initial_step = config.kernel.delta if kernel.step_scale == "delta" else config.kernel.beta
    adapt = AdaptState.initial(
        n, beta=initial_step, target_accept=config.target_accept(),
        n0=adaptation.n0, scale_kind=kernel.step_scale, untruncated=adaptation.untruncated,
    )
    state = _initial_state(config, model, kernel, rng_init)

    sample_field = gibbs.sample_field if gibbs_mode else True
    sample_hyper = gibbs_mode and gibbs.sample_hyper
    theta = np.array([math.log(model.sigma), math.log(model.tau)]) if gibbs_mode else None
    theta_step = gibbs.theta_step
    theta_accepts = 0
    theta_rejected_builds = 0
    theta_rows = [] if gibbs_mode else None

    n_keep = run.iterations - run.burn_in
    coef_trace = np.empty((n_keep, n))
    field_trace = np.empty((n_keep, model.dim), dtype=np.float32) if gibbs_mode else None
    adapt_rows = []
    accept_count = 0
    frozen = False

    t0 = time.perf_counter()
    for it in range(1, run.iterations + 1):
        if sample_field:
            out = kernel.step(state, rng_field)
            state = out.new_state
            accepted = out.accepted
            accept_count += accepted
        else:
            accepted = False

        if adaptation.enabled:
            adapt = update_moments(adapt, state.z)
            adapt = apply_truncation(adapt)
            adapt = tune_beta(adapt, accepted)
            if it >= adaptation.adapt_start and not adapt.frozen:
                _push_adapted(kernel_cfg, kernel, adapt)
            if adaptation.freeze_after is not None and it >= adaptation.freeze_after and not frozen:
                adapt = replace(adapt, frozen=True)
                frozen = True

        if sample_hyper:
            theta_prop = theta + theta_step * rng_theta.standard_normal(2)
            try:
                sigma_prop, tau_prop = math.exp(theta_prop[0]), math.exp(theta_prop[1])
                model_prop = model.with_hyperparameters(sigma_prop, tau_prop)
                state_prop = evaluate_state(state.z, model_prop, kernel.needs_gradient)
            except (ValueError, OverflowError):
                theta_rejected_builds += 1
            else:
                log_ratio = (
                    model.log_hyper_prior(theta_prop[0], theta_prop[1])
                    - model.log_hyper_prior(theta[0], theta[1])
                    + state.phi - state_prop.phi
                )
                theta_accepted = np.isfinite(log_ratio) and mh_accept(float(log_ratio), rng_theta)
                if theta_accepted:
                    theta = theta_prop
                    model = model_prop
                    kernel.model = model_prop
                    state = state_prop
                    theta_accepts += 1
                if gibbs.theta_adapt and not frozen:
                    gain = it ** (-0.7)
                    theta_step = float(np.clip(
                        theta_step * math.exp(gain * ((1.0 if theta_accepted else 0.0)
                                                      - gibbs.theta_target_accept)),
                        1e-8, 1e4))
            theta_rows.append([it, theta[0], theta[1]])

        if it > run.burn_in:
            keep = it - run.burn_in - 1
            coef_trace[keep] = state.z
            if gibbs_mode:
                field_trace[keep] = model.prior.from_coefficients(state.z)

        if it % run.adapt_stride == 0:
            step_value = adapt.beta if adaptation.enabled else initial_step
            adapt_rows.append([
                it, step_value, adapt.n_trunc, adapt.accept_ema,
                equivalence_diagnostic(DiagonalScaling(adapt.d_hat)),
            ])
    wall = time.perf_counter() - t0

    thin_idx = np.arange(run.thin - 1, n_keep, run.thin)
    # ESS is computed on the unthinned post-burn-in chain; the per-iteration
    # figures use its length so they are bounded by one
    summary = ess_summary(Trace(coef_trace), wall_seconds=wall, iterations=n_keep)
    final_step = adapt.beta if adaptation.enabled else initial_step
    logger.info("run finished: %s/%s, %d iterations, acceptance %.3f",
                config.model.kind, config.kernel.kind, run.iterations,
                accept_count / run.iterations)

    return RunResult(
        ess=summary,
        acceptance_rate=accept_count / run.iterations,
        step_kind=kernel.step_scale,
        final_step=float(final_step),
        wall_seconds=wall,
        iterations=run.iterations,
        burn_in=run.burn_in,
        coef_trace=coef_trace,
        thinned_trace=coef_trace[thin_idx],
        thinned_iterations=run.burn_in + thin_idx + 1,
        adapt_trace=np.array(adapt_rows) if adapt_rows else np.empty((0, 5)),
        config_echo=config.echo(),
        model_kind=config.model.kind,
        kernel_kind=config.kernel.kind,
        theta_trace=np.array(theta_rows) if theta_rows else None,
        theta_acceptance=(theta_accepts / run.iterations) if sample_hyper else None,
        field_trace=field_trace,
        final_mean=adapt.m_hat.copy(),
        final_scaling=adapt.d_hat.copy(),
        extras={
            "factorization_failures": kernel.factorization_failures,
            "theta_rejected_builds": theta_rejected_builds,
        },
    )


def run_experiment(config: ExperimentConfig, write=True, plots=False) -> RunResult:
    """Fixed-prior chain for any model kind."""
    result = _run_chain(config, gibbs_mode=False)
    if write and config.run.out_dir is not None:
        from .results import write_results

        write_results(result, config.run.out_dir, plots=plots)
    return result


def run_lgcp_gibbs(config: ExperimentConfig, write=True, plots=False) -> RunResult:
    """Alternate field updates with random-walk moves on (log sigma, log tau).

    The field block keeps the whitened coefficients as its state, so a
    hyperparameter acceptance only changes the coefficient-to-field map and
    the adaptation statistics remain valid.
    """
    if config.model.kind != "lgcp":
        raise ValueError("the Gibbs driver only applies to the lgcp model")
    if config.kernel.kind not in ("pcn_am", "pcnl_am", "mala"):
        raise ValueError("field kernel must be one of pcn_am, pcnl_am, mala")
    result = _run_chain(config, gibbs_mode=True)
    if write and config.run.out_dir is not None:
        from .results import write_results

        write_results(result, config.run.out_dir, plots=plots)
    return result


def run_auto(config: ExperimentConfig, write=True, plots=False) -> RunResult:
    """Dispatch: lgcp configs with the Gibbs section enabled use the Gibbs driver."""
    if config.model.kind == "lgcp" and config.gibbs.enabled:
        return run_lgcp_gibbs(config, write=write, plots=plots)
    return run_experiment(config, write=write, plots=plots)


def compare_kernels(configs, out_dir=None, plots=False):
    """Run several kernel configurations against one model and tabulate.

    All configs must share the model section and run length; each row
    reports min/median ESS per second and per iteration plus the final step
    parameter, in the layout of the benchmark tables.
    """
    if not configs:
        raise ValueError("need at least one configuration")
    reference = configs[0]
    for cfg in configs[1:]:
        if cfg.echo()["model"] != reference.echo()["model"]:
            raise ValueError("comparison configs must share the model section")
        if cfg.run.iterations != reference.run.iterations or cfg.run.burn_in != reference.run.burn_in:
            raise ValueError("comparison configs must share the run length")

    rows = []
    for cfg in configs:
        result = run_auto(cfg, write=cfg.run.out_dir is not None, plots=plots)
        rows.append({
            "kernel": cfg.kernel.kind,
            "min_ess_per_sec": result.ess.min_per_sec,
            "min_ess_per_iter": result.ess.min_per_iter,
            "median_ess_per_sec": result.ess.median_per_sec,
            "median_ess_per_iter": result.ess.median_per_iter,
            "step": result.final_step,
            "acceptance_rate": result.acceptance_rate,
        })
    if out_dir is not None:
        from .results import write_comparison

        write_comparison(rows, out_dir, plots=plots)
    return rows
