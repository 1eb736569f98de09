"""Precision-recall figures for the eval and ablate stages."""

import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

sys.path.append(str(Path(__file__).resolve().parents[2] / "common"))
from report import save_figure


def plot_pr_curves(curves, path, title, highlight=None):
    """Draw one PR curve per entry.

    Args:
        curves: {label: DataFrame with precision and recall columns}
        path: Output PNG
        title: Figure title
        highlight: Label drawn thick and dark (e.g. the dataset mean)
    """
    fig, ax = plt.subplots(figsize=(7, 6))
    for label, curve in curves.items():
        if label == highlight:
            continue
        thin = highlight is not None
        ax.plot(curve["recall"], curve["precision"], linewidth=0.8 if thin else 1.8,
                alpha=0.35 if thin else 1.0, label=None if thin else label)
    if highlight is not None and highlight in curves:
        curve = curves[highlight]
        ax.plot(curve["recall"], curve["precision"], color="black", linewidth=2.2, label=highlight)

    ax.set_xlabel("Recall", fontsize=11)
    ax.set_ylabel("Precision", fontsize=11)
    ax.set_title(title, fontsize=12, fontweight="bold")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower left", fontsize=9)
    return save_figure(fig, path)
