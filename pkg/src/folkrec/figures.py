"""Matplotlib rendering of report curves; file output only (Agg backend).

The delimited files remain the machine contract; these figures are the
human-readable companions written next to them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import DriftTable, EvalReport


def save_drift_figure(table: DriftTable, path: str, title: str = "Similarity to most recent bookmark") -> None:
    """Two panels: similarity vs bookmark lag and vs day lag, gist and verbatim curves."""
    fig, axes = plt.subplots(1, 2, figsize=(9.5, 3.6), sharey=True)
    for ax, rows, unit in (
        (axes[0], table.by_bookmark, "bookmark lag"),
        (axes[1], table.by_days, "lag in days"),
    ):
        lags = [r.lag for r in rows]
        ax.plot(lags, [r.mean_gist for r in rows], marker=".", lw=1.2, label="gist (topics)")
        ax.plot(lags, [r.mean_verbatim for r in rows], marker=".", lw=1.2, label="verbatim (tags)")
        ax.set_xlabel(unit)
        ax.grid(alpha=0.3)
    axes[0].set_ylabel("mean cosine similarity")
    axes[0].legend(frameon=False, fontsize=9)
    fig.suptitle(title, fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pr_curve_figure(report: EvalReport, path: str, title: str = "Recall/Precision, k = 1..10") -> None:
    """One recall-vs-precision trace per algorithm, k increasing along the curve."""
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    for name, res in sorted(report.algorithms.items()):
        ax.plot(res.recall_at, res.precision_at, marker=".", lw=1.2, label=name)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.grid(alpha=0.3)
    ax.legend(frameon=False, fontsize=8)
    ax.set_title(title, fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
