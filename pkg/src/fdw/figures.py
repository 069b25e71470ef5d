"""Figure rendering for the report paths.

Every plot lands next to the delimited output it illustrates: a density
profile beside the density CSV, and per-classifier FD-vs-F1 scatters beside
correlation tables. Rendering uses the Agg backend so it works headless.
"""

from __future__ import annotations

import os
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .density import DensityRecord

_BAND_COLOR = "#74c476"
_POINT_COLOR = "#2171b5"


def plot_density_profile(
    records: Sequence[DensityRecord],
    path: str | os.PathLike[str],
    band: tuple[float, float] | None = None,
) -> None:
    """FD of every variant in ascending order, with the optional keep band
    shaded."""
    ordered = sorted(records, key=lambda r: (r.fd, r.name))
    fig, ax = plt.subplots(figsize=(max(6.0, 0.14 * len(ordered) + 2), 4.0))
    xs = range(len(ordered))
    ax.bar(xs, [r.fd for r in ordered], color=_POINT_COLOR, width=0.8)
    if band is not None:
        ax.axhspan(band[0], band[1], color=_BAND_COLOR, alpha=0.3,
                   label=f"band [{band[0]:g}, {band[1]:g}]")
        ax.legend(loc="upper left", fontsize=8)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r.name for r in ordered], rotation=90, fontsize=5)
    ax.set_ylabel("feature density")
    ax.set_title("Feature density per preprocessing variant")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_f1_vs_fd(
    points_by_classifier: Mapping[str, Sequence[tuple[float, float]]],
    path: str | os.PathLike[str],
    band: tuple[float, float] | None = None,
) -> None:
    """One FD-vs-F1 scatter panel per classifier."""
    names = sorted(points_by_classifier)
    if not names:
        raise ValueError("nothing to plot: no classifier series")
    ncols = min(3, len(names))
    nrows = (len(names) + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.0 * ncols, 3.0 * nrows), squeeze=False, sharex=True
    )
    for i, clf in enumerate(names):
        ax = axes[i // ncols][i % ncols]
        pts = points_by_classifier[clf]
        if band is not None:
            ax.axvspan(band[0], band[1], color=_BAND_COLOR, alpha=0.25)
        ax.scatter([p[0] for p in pts], [p[1] for p in pts],
                   s=14, color=_POINT_COLOR, alpha=0.8)
        ax.set_title(clf, fontsize=9)
        ax.set_xlabel("feature density", fontsize=8)
        ax.set_ylabel("F1", fontsize=8)
        ax.tick_params(labelsize=7)
    for j in range(len(names), nrows * ncols):
        axes[j // ncols][j % ncols].set_visible(False)
    fig.suptitle("F1 vs feature density")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
