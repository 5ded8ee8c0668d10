"""Report emission: overlay plots as SVG plus raw CSV traces.

SVG files are written without creation dates so identical runs produce
identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rampinn"  # deterministic element ids
import matplotlib.pyplot as plt
import numpy as np


def save_traces_csv(path: str | Path, axis: np.ndarray, traces: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x"] + list(traces))
        for i, x in enumerate(axis):
            writer.writerow([format(float(x), ".10g")] + [
                format(float(values[i]), ".10g") for values in traces.values()
            ])


def save_overlay_svg(
    path: str | Path,
    axis: np.ndarray,
    traces: dict[str, np.ndarray],
    title: str = "",
    xlabel: str = "normalized wavenumber",
    ylabel: str = "relative intensity",
) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    for label, values in traces.items():
        ax.plot(axis, values, label=label, linewidth=1.0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_sweep_plot(path: str | Path, values, means, stds, xlabel: str, ylabel: str = "test MSE") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(values, means, yerr=stds, marker="o", capsize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
