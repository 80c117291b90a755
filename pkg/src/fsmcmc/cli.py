"""Command-line entry points.

Exit codes: 0 on success, 2 on configuration/validation errors, 1 on
runtime failures.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, load_compare_config, load_config
from .datasets import DatasetError, write_dataset, write_truth
from .diagnostics import Trace, ess_summary
from .models import simulate_data
from .results import comparison_text, write_comparison

logger = logging.getLogger(__name__)

VALIDATION_EXIT = 2
RUNTIME_EXIT = 1


def _fail(exc, code):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


@click.group()
@click.option("--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Adaptive function-space MCMC benchmark harness."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--plots/--no-plots", default=True, show_default=True,
              help="Render figures alongside the CSV outputs.")
def run(config_path, plots):
    """Run one experiment from a JSON config."""
    from .runner import run_auto

    try:
        config = load_config(config_path)
    except (ConfigError, DatasetError, json.JSONDecodeError) as exc:
        _fail(exc, VALIDATION_EXIT)
    try:
        result = run_auto(config, plots=plots)
    except (ConfigError, DatasetError) as exc:
        _fail(exc, VALIDATION_EXIT)
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        _fail(exc, RUNTIME_EXIT)
    click.echo(json.dumps({
        "acceptance_rate": result.acceptance_rate,
        "final_step": {"kind": result.step_kind, "value": result.final_step},
        "min_ess_per_iter": result.ess.min_per_iter,
        "median_ess_per_iter": result.ess.median_per_iter,
        "wall_seconds": result.wall_seconds,
        "out_dir": config.run.out_dir,
    }, indent=2, sort_keys=True))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--plots/--no-plots", default=True, show_default=True)
def compare(config_path, plots):
    """Run a kernel comparison from a JSON config with a 'kernels' list."""
    from .runner import compare_kernels

    try:
        configs, out_dir = load_compare_config(config_path)
    except (ConfigError, DatasetError, json.JSONDecodeError) as exc:
        _fail(exc, VALIDATION_EXIT)
    try:
        rows = compare_kernels(configs, out_dir=None, plots=plots)
        if out_dir is not None:
            write_comparison(rows, out_dir, plots=plots)
    except (ConfigError, DatasetError, ValueError) as exc:
        _fail(exc, VALIDATION_EXIT)
    except Exception as exc:  # noqa: BLE001
        _fail(exc, RUNTIME_EXIT)
    click.echo(comparison_text(rows))


@main.command()
@click.option("--model", "kind", required=True,
              type=click.Choice(["logistic", "binomial", "lgcp"]))
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--params", default="{}", help="JSON dict of generator parameters.")
def simulate(kind, seed, out_path, params):
    """Write a synthetic dataset (plus a .truth.csv sidecar with the field)."""
    try:
        param_dict = json.loads(params)
        if not isinstance(param_dict, dict):
            raise ValueError("--params must be a JSON object")
    except (json.JSONDecodeError, ValueError) as exc:
        _fail(exc, VALIDATION_EXIT)
    try:
        dataset, truth = simulate_data(kind, param_dict, field_seed=seed, obs_seed=seed + 1)
        path = write_dataset(out_path, kind, dataset)
        truth_path = write_truth(Path(out_path).with_suffix(".truth.csv"), truth)
    except ValueError as exc:
        _fail(exc, VALIDATION_EXIT)
    except Exception as exc:  # noqa: BLE001
        _fail(exc, RUNTIME_EXIT)
    click.echo(f"dataset written to {path}; generating field in {truth_path}")


@main.command()
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--burn-in", default=0, type=int, show_default=True)
@click.option("--wall-seconds", default=0.0, type=float,
              help="Optional wall time to report per-second rates.")
def diagnose(trace_path, burn_in, wall_seconds):
    """Effective-sample-size summary of a trace.csv file."""
    try:
        data = np.genfromtxt(trace_path, delimiter=",", names=True)
        columns = [name for name in data.dtype.names if name != "iteration"]
        values = np.column_stack([data[name] for name in columns])
        trace = Trace(values, burn_in=burn_in)
        summary = ess_summary(trace, wall_seconds=wall_seconds,
                              iterations=values.shape[0] - burn_in)
    except (ValueError, OSError) as exc:
        _fail(exc, VALIDATION_EXIT)
    payload = summary.as_dict()
    if wall_seconds <= 0:
        payload.pop("min_per_sec")
        payload.pop("median_per_sec")
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
