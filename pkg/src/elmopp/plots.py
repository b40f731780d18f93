"""Figure rendering for sweep reports.

Figures are written next to the delimited output so a sweep directory is
self-contained: the throughput curve against the published reference
curves, and the pre-training loss history.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simulation import SweepRow
from .stats import REFERENCE_CURVES


def plot_throughput_sweep(rows: list[SweepRow], path, show_reference: bool = True) -> None:
    """Mean throughput (with sd bars) per controller versus vehicle budget."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    kinds = list(dict.fromkeys(r.controller for r in rows))
    totals = sorted({r.total for r in rows})
    for kind in kinds:
        means, sds = [], []
        for total in totals:
            vals = [r.throughput for r in rows if r.controller == kind and r.total == total]
            means.append(np.mean(vals))
            sds.append(np.std(vals, ddof=1) if len(vals) > 1 else 0.0)
        ax.errorbar(totals, means, yerr=sds, marker="s", capsize=3, label=kind)
    if show_reference:
        ref = REFERENCE_CURVES["elmopp"]
        xs = sorted(ref)
        ax.plot(xs, [ref[x] for x in xs], "k--", alpha=0.5, label="reference (elmopp)")
    ax.set_xlabel("vehicle budget per inroad")
    ax.set_ylabel("throughput (vehicles / s)")
    ax.set_title("Throughput vs. vehicle budget")
    ax.grid(True, linestyle="--", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_training_loss(losses, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(losses) + 1), losses)
    ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean squared error")
    ax.set_title("Pre-training loss")
    ax.grid(True, linestyle="--", alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_inflow(series: np.ndarray, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, name in enumerate(("n", "e", "s", "w")):
        ax.plot(series[:, i], label=name, linewidth=0.7)
    ax.set_xlabel("timestep")
    ax.set_ylabel("vehicles / step")
    ax.set_title("Chaotic inflow")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
