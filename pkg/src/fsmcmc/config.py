"""Experiment configuration: parsing and validation.

Configs are plain JSON with four sections (``model``, ``kernel``,
``adaptation``, ``run``) plus an optional ``gibbs`` section for the
hyperparameter block of the Cox-process experiment.  Validation collects
every violation before failing so a bad file is fixed in one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .kernels import KERNEL_KINDS

MODEL_KINDS = ("logistic", "binomial", "lgcp", "gaussian", "flat")

#: acceptance-rate targets: 0.2 for gradient-free kernels, 0.5 for the rest
DEFAULT_TARGET_ACCEPT = {
    "pcn": 0.2,
    "pcn_am0": 0.2,
    "pcn_am": 0.2,
    "pcn_ap": 0.2,
    "pcnl": 0.5,
    "pcnl_am": 0.5,
    "pcnl_ap": 0.5,
    "pcnl_hm": 0.5,
    "mala": 0.5,
    "mgrad": 0.5,
}


class ConfigError(ValueError):
    """Raised with the full list of configuration violations."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass
class ModelSpec:
    kind: str
    params: dict = field(default_factory=dict)
    data: str | None = None
    synthesize: dict | None = None


@dataclass
class KernelSpec:
    kind: str
    beta: float = 0.5
    delta: float = 0.5


@dataclass
class AdaptationSpec:
    enabled: bool = True
    target_accept: float | None = None  # kernel-dependent default
    freeze_after: int | None = None
    n0: int = 5
    untruncated: bool = False
    adapt_start: int = 100


@dataclass
class RunSpec:
    iterations: int
    burn_in: int
    seed: int
    thin: int = 10
    out_dir: str | None = None
    adapt_stride: int = 100
    acf_lags: tuple = (1, 5, 10, 25, 50, 100, 250)


@dataclass
class GibbsSpec:
    enabled: bool = True
    sample_hyper: bool = True
    sample_field: bool = True
    theta_step: float = 0.3
    theta_target_accept: float = 0.3
    theta_adapt: bool = True


@dataclass
class ExperimentConfig:
    model: ModelSpec
    kernel: KernelSpec
    adaptation: AdaptationSpec
    run: RunSpec
    gibbs: GibbsSpec = field(default_factory=GibbsSpec)

    def target_accept(self) -> float:
        if self.adaptation.target_accept is not None:
            return self.adaptation.target_accept
        return DEFAULT_TARGET_ACCEPT[self.kernel.kind]

    def echo(self) -> dict:
        """JSON-serialisable copy of the configuration; feeds back into parse_config."""
        return {
            "model": {"kind": self.model.kind, **self.model.params,
                      "data": self.model.data, "synthesize": self.model.synthesize},
            "kernel": {"kind": self.kernel.kind, "beta": self.kernel.beta,
                       "delta": self.kernel.delta},
            "adaptation": {"enabled": self.adaptation.enabled,
                           "target_accept": self.target_accept(),
                           "freeze_after": self.adaptation.freeze_after,
                           "n0": self.adaptation.n0,
                           "untruncated": self.adaptation.untruncated,
                           "adapt_start": self.adaptation.adapt_start},
            "run": {"iterations": self.run.iterations, "burn_in": self.run.burn_in,
                    "seed": self.run.seed, "thin": self.run.thin,
                    "out_dir": self.run.out_dir, "adapt_stride": self.run.adapt_stride,
                    "acf_lags": list(self.run.acf_lags)},
            "gibbs": {"enabled": self.gibbs.enabled,
                      "sample_hyper": self.gibbs.sample_hyper,
                      "sample_field": self.gibbs.sample_field,
                      "theta_step": self.gibbs.theta_step,
                      "theta_target_accept": self.gibbs.theta_target_accept,
                      "theta_adapt": self.gibbs.theta_adapt},
        }


_RESERVED_MODEL_KEYS = {"kind", "data", "synthesize"}


def parse_config(raw: dict) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from decoded JSON."""
    problems = []

    model_raw = raw.get("model")
    if not isinstance(model_raw, dict):
        problems.append("model: section missing or not an object")
        model_raw = {}
    kind = model_raw.get("kind")
    if kind not in MODEL_KINDS:
        problems.append(f"model.kind: must be one of {MODEL_KINDS}, got {kind!r}")
    params = {k: v for k, v in model_raw.items() if k not in _RESERVED_MODEL_KEYS}
    model = ModelSpec(kind=kind, params=params,
                      data=model_raw.get("data"), synthesize=model_raw.get("synthesize"))
    if kind in ("logistic", "binomial", "lgcp") and model.data is None and model.synthesize is None:
        problems.append(f"model: kind {kind!r} needs either 'data' or 'synthesize'")
    if model.data is not None and model.synthesize is not None:
        problems.append("model: 'data' and 'synthesize' are mutually exclusive")

    kernel_raw = raw.get("kernel")
    if not isinstance(kernel_raw, dict):
        problems.append("kernel: section missing or not an object")
        kernel_raw = {}
    kernel = KernelSpec(
        kind=kernel_raw.get("kind"),
        beta=float(kernel_raw.get("beta", 0.5)),
        delta=float(kernel_raw.get("delta", 0.5)),
    )
    if kernel.kind not in KERNEL_KINDS:
        problems.append(f"kernel.kind: must be one of {sorted(KERNEL_KINDS)}, got {kernel.kind!r}")
    if not 0.0 < kernel.beta <= 1.0:
        problems.append(f"kernel.beta: must lie in (0, 1], got {kernel.beta}")
    if kernel.delta <= 0.0:
        problems.append(f"kernel.delta: must be positive, got {kernel.delta}")

    adapt_raw = raw.get("adaptation", {})
    adaptation = AdaptationSpec(
        enabled=bool(adapt_raw.get("enabled", True)),
        target_accept=adapt_raw.get("target_accept"),
        freeze_after=adapt_raw.get("freeze_after"),
        n0=int(adapt_raw.get("n0", 5)),
        untruncated=bool(adapt_raw.get("untruncated", False)),
        adapt_start=int(adapt_raw.get("adapt_start", 100)),
    )
    if adaptation.target_accept is not None and not 0.0 < adaptation.target_accept < 1.0:
        problems.append(f"adaptation.target_accept: must lie in (0, 1), got {adaptation.target_accept}")
    if adaptation.n0 < 1:
        problems.append("adaptation.n0: must be at least 1")
    if adaptation.freeze_after is not None and adaptation.freeze_after < 0:
        problems.append("adaptation.freeze_after: must be nonnegative")

    run_raw = raw.get("run")
    if not isinstance(run_raw, dict):
        problems.append("run: section missing or not an object")
        run_raw = {}
    if "seed" not in run_raw:
        problems.append("run.seed: mandatory (reproducibility is a contract)")
    run = RunSpec(
        iterations=int(run_raw.get("iterations", 0)),
        burn_in=int(run_raw.get("burn_in", 0)),
        seed=int(run_raw.get("seed", 0)),
        thin=int(run_raw.get("thin", 10)),
        out_dir=run_raw.get("out_dir"),
        adapt_stride=int(run_raw.get("adapt_stride", 100)),
        acf_lags=tuple(run_raw.get("acf_lags", (1, 5, 10, 25, 50, 100, 250))),
    )
    if run.iterations <= 0:
        problems.append("run.iterations: must be positive")
    if run.burn_in < 0:
        problems.append("run.burn_in: must be nonnegative")
    if run.iterations and run.burn_in >= run.iterations:
        problems.append("run.burn_in: must be smaller than run.iterations")
    if run.thin < 1:
        problems.append("run.thin: must be at least 1")
    if run.adapt_stride < 1:
        problems.append("run.adapt_stride: must be at least 1")
    if any(lag < 1 for lag in run.acf_lags):
        problems.append("run.acf_lags: lags must be positive")

    gibbs_raw = raw.get("gibbs", {})
    gibbs = GibbsSpec(
        enabled=bool(gibbs_raw.get("enabled", True)),
        sample_hyper=bool(gibbs_raw.get("sample_hyper", True)),
        sample_field=bool(gibbs_raw.get("sample_field", True)),
        theta_step=float(gibbs_raw.get("theta_step", 0.3)),
        theta_target_accept=float(gibbs_raw.get("theta_target_accept", 0.3)),
        theta_adapt=bool(gibbs_raw.get("theta_adapt", True)),
    )
    if gibbs.theta_step <= 0:
        problems.append("gibbs.theta_step: must be positive")
    if not 0.0 < gibbs.theta_target_accept < 1.0:
        problems.append("gibbs.theta_target_accept: must lie in (0, 1)")

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(model=model, kernel=kernel, adaptation=adaptation,
                            run=run, gibbs=gibbs)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(json.load(fh))


def load_compare_config(path):
    """A comparison file is a base experiment plus a list of kernel specs."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if "kernels" not in raw or not isinstance(raw["kernels"], list) or not raw["kernels"]:
        raise ConfigError(["kernels: comparison files need a non-empty kernel list"])
    out_dir = raw.get("out_dir")
    configs = []
    for kernel_raw in raw["kernels"]:
        piece = {k: v for k, v in raw.items() if k not in ("kernels", "out_dir")}
        piece["kernel"] = kernel_raw
        piece.setdefault("run", {})
        cfg = parse_config(piece)
        if out_dir is not None:
            cfg.run.out_dir = str(Path(out_dir) / cfg.kernel.kind)
        configs.append(cfg)
    return configs, out_dir
