"""Adaptive function-space MCMC for latent Gaussian process posteriors."""

__version__ = "0.1.0"

from .adaptation import AdaptState, apply_truncation, tune_beta, update_moments
from .diagnostics import Trace, autocorrelation, ess, ess_summary
from .gaussian import (
    CosineBasis,
    DenseBasis,
    DiagonalScaling,
    GaussianMeasure,
    SpectralCovariance,
    cameron_martin_norm_sq,
    change_of_measure_logterm,
    equivalence_diagnostic,
    sample_prior,
)
from .kernels import (
    KERNEL_KINDS,
    ChainState,
    KernelConfig,
    StepOutcome,
    evaluate_state,
    log_posterior,
    make_kernel,
    mh_accept,
)

__all__ = [
    "__version__",
    "AdaptState",
    "apply_truncation",
    "tune_beta",
    "update_moments",
    "Trace",
    "autocorrelation",
    "ess",
    "ess_summary",
    "CosineBasis",
    "DenseBasis",
    "DiagonalScaling",
    "GaussianMeasure",
    "SpectralCovariance",
    "cameron_martin_norm_sq",
    "change_of_measure_logterm",
    "equivalence_diagnostic",
    "sample_prior",
    "KERNEL_KINDS",
    "ChainState",
    "KernelConfig",
    "StepOutcome",
    "evaluate_state",
    "log_posterior",
    "make_kernel",
    "mh_accept",
]
