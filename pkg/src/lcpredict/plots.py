"""Figure rendering for reports: confusion matrices, sweeps, training curves.

Every figure is rendered to a file next to the delimited output it
visualizes; nothing here feeds back into the pipeline.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CLASS_TICKS = ("NLC", "LLC", "RLC")


def plot_confusion(report, path) -> Path:
    """Heatmap of the 3x3 confusion matrix with counts annotated."""
    conf = np.asarray(report.confusion, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(4.2, 3.8))
    with np.errstate(invalid="ignore", divide="ignore"):
        norm = conf / np.maximum(conf.sum(axis=1, keepdims=True), 1)
    im = ax.imshow(norm, cmap="Blues", vmin=0.0, vmax=1.0)
    for i in range(3):
        for j in range(3):
            ax.text(j, i, f"{int(conf[i, j])}", ha="center", va="center",
                    color="black" if norm[i, j] < 0.6 else "white", fontsize=9)
    ax.set_xticks(range(3), CLASS_TICKS)
    ax.set_yticks(range(3), CLASS_TICKS)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"acc {report.accuracy:.4f}  |  macro F1 {report.macro_f1:.4f}",
                 fontsize=10)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(rows, path, metric: str = "macro_f1") -> Path:
    """Metric vs horizon T, one line per history window W."""
    rows = list(rows)
    Ws = sorted({r["W"] for r in rows})
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    for W in Ws:
        pts = sorted((r["T"], r[metric]) for r in rows if r["W"] == W)
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker="o", label=f"W = {W:g} s")
    ax.set_xlabel("prediction horizon T (s)")
    ax.set_ylabel(metric.replace("_", " "))
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_training_curve(curve, path) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(range(len(curve)), curve)
    ax.set_xlabel("boosting round")
    ax.set_ylabel("weighted multiclass log-loss")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
