"""Figure rendering for the CLI report paths."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import Metrics
from .model import TrainReport


def plot_training_curve(report: TrainReport, path: str | Path) -> Path:
    """Mean NLL per epoch as a line plot."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(range(len(report.epoch_mean_nll)), report.epoch_mean_nll, lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean NLL / step")
    ax.set_title(f"training loss ({report.frames_seen} frame updates)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_metrics(metrics: Metrics, path: str | Path) -> Path:
    """Per-predicate P/R/F1 bars with the overall F1 as a reference line."""
    path = Path(path)
    names = list(metrics.per_predicate) or ["ALL"]
    subs = [metrics.per_predicate.get(n, metrics) for n in names]
    x = range(len(names))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(names)), 3.5))
    ax.bar([i - width for i in x], [m.precision for m in subs], width, label="P")
    ax.bar(list(x), [m.recall for m in subs], width, label="R")
    ax.bar([i + width for i in x], [m.f1 for m in subs], width, label="F1")
    ax.axhline(metrics.f1, color="gray", ls="--", lw=1, label=f"overall F1 {metrics.f1:.3f}")
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
