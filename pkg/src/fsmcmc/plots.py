"""Figure rendering for run directories.

Reads the delimited outputs back rather than taking in-memory arrays, so the
figures can be regenerated from any archived run directory.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _load_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader])
    return header, rows


def render_run_figures(run_dir):
    """Render adaptation, trace, and ACF figures next to the CSVs."""
    run_dir = Path(run_dir)
    written = {}

    header, adapt = _load_csv(run_dir / "adapt.csv")
    if adapt.size:
        fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
        axes[0].plot(adapt[:, 0], adapt[:, 1])
        axes[0].set_ylabel("step size")
        axes[1].plot(adapt[:, 0], adapt[:, 3])
        axes[1].axhline(adapt[-1, 3], color="grey", lw=0.5)
        axes[1].set_ylabel("acceptance (EMA)")
        axes[2].plot(adapt[:, 0], adapt[:, 4])
        axes[2].set_ylabel("sum (d - 1)^2")
        axes[2].set_xlabel("iteration")
        fig.tight_layout()
        path = run_dir / "adapt.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written["adapt_png"] = str(path)

    header, trace = _load_csv(run_dir / "trace.csv")
    if trace.size:
        n_show = min(4, trace.shape[1] - 1)
        fig, ax = plt.subplots(figsize=(7, 3.5))
        for k in range(n_show):
            ax.plot(trace[:, 0], trace[:, 1 + k], lw=0.6, label=f"z_{k}")
        ax.set_xlabel("iteration")
        ax.set_ylabel("coefficient")
        ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        path = run_dir / "trace.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written["trace_png"] = str(path)

    header, acf_rows = _load_csv(run_dir / "acf.csv")
    if acf_rows.size:
        lags = np.unique(acf_rows[:, 1]).astype(int)
        fig, ax = plt.subplots(figsize=(7, 3.5))
        values = [acf_rows[acf_rows[:, 1] == lag, 2] for lag in lags]
        ax.boxplot(values, tick_labels=[str(lag) for lag in lags])
        ax.set_xlabel("lag")
        ax.set_ylabel("autocorrelation")
        ax.axhline(0.0, color="grey", lw=0.5)
        fig.tight_layout()
        path = run_dir / "acf.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written["acf_png"] = str(path)

    return written


def render_comparison_figure(rows, out_dir):
    out_dir = Path(out_dir)
    kernels = [row["kernel"] for row in rows]
    x = np.arange(len(kernels))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    width = 0.4
    ax.bar(x - width / 2, [row["min_ess_per_iter"] for row in rows], width,
           label="min(ESS)/iter")
    ax.bar(x + width / 2, [row["median_ess_per_iter"] for row in rows], width,
           label="median(ESS)/iter")
    ax.set_xticks(x)
    ax.set_xticklabels(kernels, rotation=30, ha="right")
    ax.set_ylabel("ESS per iteration")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "comparison.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return {"comparison_png": str(path)}
