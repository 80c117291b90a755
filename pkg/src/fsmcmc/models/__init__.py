"""Target posterior definitions for the three experiment families."""

from .base import FlatPotentialModel, GaussianLikelihoodModel, TargetModel, sigmoid, softplus
from .lattice import BinomialLatticeModel, lattice_prior, simulate_binomial
from .lgcp import LGCPModel, lgcp_prior, simulate_lgcp
from .logistic import LogisticClassifierModel, classifier_kernel, simulate_classifier
from .quadrature import posterior_expectation, posterior_moments

_SIMULATORS = {
    "logistic": simulate_classifier,
    "binomial": simulate_binomial,
    "lgcp": simulate_lgcp,
}


def simulate_data(kind: str, params: dict, field_seed: int, obs_seed: int):
    """Dispatch synthetic data generation; returns (dataset, true_field)."""
    try:
        simulator = _SIMULATORS[kind]
    except KeyError:
        raise ValueError(f"no simulator for model kind {kind!r}") from None
    return simulator(params, field_seed, obs_seed)


__all__ = [
    "TargetModel",
    "FlatPotentialModel",
    "GaussianLikelihoodModel",
    "LogisticClassifierModel",
    "BinomialLatticeModel",
    "LGCPModel",
    "classifier_kernel",
    "lattice_prior",
    "lgcp_prior",
    "posterior_moments",
    "posterior_expectation",
    "simulate_data",
    "simulate_classifier",
    "simulate_binomial",
    "simulate_lgcp",
    "sigmoid",
    "softplus",
]
