"""Result serialisation.

Reproducibility contract: ``summary.json``, ``trace.csv``, ``adapt.csv``,
``acf.csv`` (and ``theta.csv`` for Gibbs runs) are byte-identical across
reruns of the same config and seed.  Wall-clock figures therefore live in a
separate ``timing.json`` that is excluded from that contract.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import acf as compute_acf

logger = logging.getLogger(__name__)

VERSION_STRING = f"fsmcmc-{__version__}"


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_matrix_csv(path, header, matrix, fmts):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in matrix:
            fh.write(",".join(fmt % value for fmt, value in zip(fmts, row)) + "\n")


def write_results(result, out_dir, plots=False):
    """Write the standard result bundle; returns the path map."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "summary": out / "summary.json",
            "timing": out / "timing.json",
            "trace": out / "trace.csv",
            "adapt": out / "adapt.csv",
            "acf": out / "acf.csv",
        }

        n = result.thinned_trace.shape[1]
        trace_rows = np.column_stack([result.thinned_iterations, result.thinned_trace])
        _write_matrix_csv(
            paths["trace"],
            ["iteration"] + [f"z_{k}" for k in range(n)],
            trace_rows,
            ["%d"] + ["%.17g"] * n,
        )

        _write_matrix_csv(
            paths["adapt"],
            ["iteration", "step", "n_trunc", "accept_ema", "scaling_divergence"],
            result.adapt_trace,
            ["%d", "%.17g", "%d", "%.17g", "%.17g"],
        )

        acf_source = result.field_trace if result.field_trace is not None else result.coef_trace
        lags = [lag for lag in result.config_echo["run"]["acf_lags"]
                if lag < acf_source.shape[0]]
        acf_rows = []
        for coord in range(acf_source.shape[1]):
            series = np.asarray(acf_source[:, coord], dtype=float)
            values = compute_acf(series, max(lags)) if lags else []
            for lag in lags:
                acf_rows.append((coord, lag, values[lag]))
        _write_matrix_csv(paths["acf"], ["coordinate", "lag", "acf"], acf_rows,
                          ["%d", "%d", "%.17g"])

        theta_summary = None
        if result.theta_trace is not None:
            paths["theta"] = out / "theta.csv"
            _write_matrix_csv(paths["theta"], ["iteration", "log_sigma", "log_tau"],
                              result.theta_trace, ["%d", "%.17g", "%.17g"])
            post = result.theta_trace[result.theta_trace[:, 0] > result.burn_in]
            theta_summary = {
                "acceptance_rate": result.theta_acceptance,
                "mean_log_sigma": float(post[:, 1].mean()) if post.size else None,
                "mean_log_tau": float(post[:, 2].mean()) if post.size else None,
            }

        summary = {
            "version": VERSION_STRING,
            "model_kind": result.model_kind,
            "kernel_kind": result.kernel_kind,
            "config": result.config_echo,
            "iterations": result.iterations,
            "burn_in": result.burn_in,
            "acceptance_rate": result.acceptance_rate,
            "final_step": {"kind": result.step_kind, "value": result.final_step},
            "ess": {
                "min_ess": result.ess.min_ess,
                "median_ess": result.ess.median_ess,
                "min_per_iter": result.ess.min_per_iter,
                "median_per_iter": result.ess.median_per_iter,
            },
            "theta": theta_summary,
            "extras": result.extras,
            "paths": {key: str(path.name) for key, path in paths.items() if key != "summary"},
        }
        _write_json(paths["summary"], summary)

        _write_json(paths["timing"], {
            "wall_seconds": result.wall_seconds,
            "ess_per_sec": {
                "min": result.ess.min_per_sec,
                "median": result.ess.median_per_sec,
            },
        })

        if plots:
            from . import plots as plotting

            paths.update(plotting.render_run_figures(out))
        result.paths = {key: str(path) for key, path in paths.items()}
    except OSError as exc:
        raise OSError(f"failed writing results under {out}: {exc}") from exc
    logger.info("results written to %s", out)
    return result.paths


COMPARISON_COLUMNS = (
    "kernel", "min_ess_per_sec", "min_ess_per_iter",
    "median_ess_per_sec", "median_ess_per_iter", "step", "acceptance_rate",
)


def comparison_text(rows):
    """Aligned text table mirroring the benchmark layout."""
    headers = ("method", "min(ESS)/s", "min(ESS)/iter",
               "median(ESS)/s", "median(ESS)/iter", "step", "accept")
    body = [
        (row["kernel"], f"{row['min_ess_per_sec']:.1f}", f"{row['min_ess_per_iter']:.4f}",
         f"{row['median_ess_per_sec']:.1f}", f"{row['median_ess_per_iter']:.4f}",
         f"{row['step']:.2f}", f"{row['acceptance_rate']:.2f}")
        for row in rows
    ]
    widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    for r in body:
        lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)


def write_comparison(rows, out_dir, plots=False):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "comparison.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(COMPARISON_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(
                row["kernel"] if col == "kernel" else "%.17g" % row[col]
                for col in COMPARISON_COLUMNS
            ) + "\n")
    text_path = out / "comparison.txt"
    text_path.write_text(comparison_text(rows) + "\n", encoding="utf-8")
    written = {"comparison_csv": str(csv_path), "comparison_txt": str(text_path)}
    if plots:
        from . import plots as plotting

        written.update(plotting.render_comparison_figure(rows, out))
    return written
