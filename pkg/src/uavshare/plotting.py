"""Matplotlib figures for flyable maps, GS-candidate heatmaps and trial comparisons.

Uses the non-interactive Agg backend; PNG metadata is stripped so repeated
runs write identical bytes.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch, Polygon  # noqa: E402

from .coverage import FlyableGrid  # noqa: E402

# index 0..2 = failing by binding condition, 3 = flyable
_MAP_COLORS = ["#d7301f", "#fc8d59", "#fdcc8a", "#ffffff"]
_MAP_LABELS = ["uplink fails", "downlink fails", "terrestrial fails", "flyable"]


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_flyable_map(grid: FlyableGrid, path, routers: Sequence = (), sub_areas: Sequence = (),
                     title: str | None = None) -> Path:
    codes = np.where(grid.passed, 3, grid.binding).astype(int)
    b = grid.spec.bounds
    fig, ax = plt.subplots(figsize=(6, 5.4))
    ax.imshow(codes, origin="lower", extent=(b.x_min, b.x_max, b.y_min, b.y_max),
              cmap=ListedColormap(_MAP_COLORS), vmin=-0.5, vmax=3.5, interpolation="nearest")
    for sa in sub_areas:
        ax.add_patch(Polygon(sa.polygon, closed=True, fill=False, lw=1.2, ec="k", ls="--"))
        cx, cy = np.mean(np.asarray(sa.polygon), axis=0)
        if sa.uplink is not None:
            ax.text(cx, cy, f"{sa.uplink}/{sa.downlink}", ha="center", va="center", fontsize=8)
    for r in routers:
        ax.plot(r.position.x, r.position.y, "s", ms=6, mfc="#2171b5", mec="k")
        ax.annotate(f"ch {r.channel}", (r.position.x, r.position.y), xytext=(4, 4),
                    textcoords="offset points", fontsize=7)
    gs = grid.gs_position
    ax.plot(gs.x, gs.y, "^", ms=9, mfc="k", mec="w")
    handles = [Patch(fc=c, ec="0.5", label=lab) for c, lab in zip(_MAP_COLORS, _MAP_LABELS)]
    ax.legend(handles=handles, loc="upper right", fontsize=7, framealpha=0.9)
    ax.set_xlim(b.x_min, b.x_max)
    ax.set_ylim(b.y_min, b.y_max)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.set_title(title or f"flyable ratio {grid.flyable_ratio:.3f}")
    fig.tight_layout()
    return _save(fig, path)


def plot_candidate_heatmap(placement, path) -> Path:
    lat = placement.candidates
    fig, ax = plt.subplots(figsize=(6, 5))
    step = lat.resolution / 2
    im = ax.imshow(placement.ratios, origin="lower", vmin=0, vmax=1, cmap="viridis",
                   extent=(lat.xs[0] - step, lat.xs[-1] + step, lat.ys[0] - step, lat.ys[-1] + step))
    best = placement.best_position
    ax.plot(best.x, best.y, "r*", ms=12)
    fig.colorbar(im, ax=ax, label="flyable ratio")
    ax.set_xlabel("GS x [m]")
    ax.set_ylabel("GS y [m]")
    ax.set_title(f"best ({best.x:g}, {best.y:g}): {placement.best_ratio:.3f}")
    fig.tight_layout()
    return _save(fig, path)


def plot_mode_comparison(result, path) -> Path:
    """Per-trial optimized ratio for every mode in an experiment result."""
    modes = [m.value for m in result.spec.modes]
    trials = np.arange(len(result.records))
    width = 0.8 / max(len(modes), 1)
    fig, ax = plt.subplots(figsize=(8, 3.6))
    for i, m in enumerate(modes):
        v = result.column(f"{m}_ratio")
        ax.bar(trials + (i - (len(modes) - 1) / 2) * width, v, width,
               label=f"{m} (mean {v.mean():.3f})")
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("trial")
    ax.set_ylabel("flyable ratio")
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    return _save(fig, path)
