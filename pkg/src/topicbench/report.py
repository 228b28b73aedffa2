"""Delimited-text and figure rendering for run artifacts.

Every numeric export is tab-separated text so diffs stay readable; figures
are rendered next to the text files with matplotlib's Agg backend.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .corpus import LABELS
from .forest import EvalReport
from .lime import Explanation

POSITIVE = "#2a9d8f"
NEGATIVE = "#e76f51"


def write_metrics_tsv(report: EvalReport, cv_mean_f1: float, path: str | Path) -> None:
    lines = ["scope\tmetric\tvalue"]
    for scope, metric, value in report.to_records():
        lines.append(f"{scope}\t{metric}\t{value:.6f}")
    lines.append(f"cv\tmean_f1\t{cv_mean_f1:.6f}")
    lines.append("confusion\trows_true_cols_pred\t" + ";".join(
        ",".join(str(int(v)) for v in row) for row in report.confusion
    ))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_cv_tsv(grid, scores, best_index: int, path: str | Path) -> None:
    lines = ["criterion\tmax_depth\tn_estimators\tmean_f1\tselected"]
    for i, (params, score) in enumerate(zip(grid, scores)):
        depth = "none" if params.max_depth is None else str(params.max_depth)
        chosen = "*" if i == best_index else ""
        lines.append(f"{params.criterion}\t{depth}\t{params.n_estimators}\t{score:.6f}\t{chosen}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_metrics_figure(report: EvalReport, backend: str, path: str | Path) -> None:
    """Bar chart: the four macro metrics plus per-class F1."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    names = ["accuracy", "precision", "recall", "f1"]
    values = [report.accuracy, report.precision, report.recall, report.f1]
    ax1.bar(names, values, color=POSITIVE)
    ax1.axhline(0.25, color="gray", linestyle="--", linewidth=1, label="4-class chance")
    ax1.set_ylim(0, 1.05)
    ax1.set_title(f"{backend}: test metrics")
    ax1.legend(loc="lower right", fontsize=8)
    for i, v in enumerate(values):
        ax1.text(i, v + 0.02, f"{v:.2f}", ha="center", fontsize=8)

    class_names = [l.value[:5] for l in LABELS]
    f1s = [report.per_class[l]["f1"] for l in LABELS]
    ax2.bar(class_names, f1s, color="#457b9d")
    ax2.set_ylim(0, 1.05)
    ax2.set_title("per-class F1")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_explanation_figure(explanation: Explanation, path: str | Path) -> None:
    """Per-class panels: prediction probabilities up top, signed token
    contributions as horizontal bars underneath (positive green, negative
    red)."""
    fig, axes = plt.subplots(1, len(LABELS) + 1, figsize=(3.2 * (len(LABELS) + 1), 3.2))

    ax0 = axes[0]
    probs = list(explanation.class_probabilities)
    ax0.barh([l.value for l in LABELS][::-1], probs[::-1], color="#457b9d")
    ax0.set_xlim(0, 1)
    ax0.set_title("prediction probabilities", fontsize=9)
    for i, p in enumerate(probs[::-1]):
        ax0.text(p + 0.02, i, f"{p:.2f}", va="center", fontsize=8)

    for ax, label in zip(axes[1:], LABELS):
        ranked = explanation.contributions[label]
        tokens = [t for t, _ in ranked][::-1]
        weights = [w for _, w in ranked][::-1]
        colors = [POSITIVE if w >= 0 else NEGATIVE for w in weights]
        ax.barh(range(len(tokens)), weights, color=colors)
        ax.set_yticks(range(len(tokens)))
        ax.set_yticklabels(tokens, fontsize=8)
        ax.axvline(0, color="black", linewidth=0.8)
        ax.set_title(label.value, fontsize=9)

    fig.suptitle(f"document {explanation.doc_id}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
