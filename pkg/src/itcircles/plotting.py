"""Figures written next to the CLI's text and CSV outputs.

Everything goes through the Agg canvas directly, so importing this module
never touches a display or the global pyplot state.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.patches import Circle as CirclePatch

STRATEGY_COLORS = {"three-point": "tab:red", "four-point": "tab:green"}
STAGE_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:gray")


def _save(fig: Figure, path, dpi: float = 100) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=dpi)


def render_overlay(img, circles, path, dpi: int = 100) -> None:
    """Draw ``circles`` over ``img`` and save at the image's pixel size.

    Circles are stroked in red and centers marked with green dots.  Each
    entry may be a :class:`Circle` or a detection carrying one.
    """
    img = np.asarray(img)
    h, w = img.shape
    fig = Figure(figsize=(w / dpi, h / dpi))
    ax = fig.add_axes((0, 0, 1, 1))
    ax.imshow(img, cmap="gray", vmin=0.0, vmax=1.0, interpolation="nearest")
    for c in circles:
        c = getattr(c, "circle", c)
        ax.add_patch(CirclePatch((c.a, c.b), c.r, fill=False, edgecolor="red", linewidth=1.0))
        ax.plot([c.a], [c.b], "o", color="lime", markersize=2.5)
    ax.set_xlim(-0.5, w - 0.5)
    ax.set_ylim(h - 0.5, -0.5)
    ax.set_axis_off()
    _save(fig, path, dpi)


def plot_psnr_sweep(rows, path) -> None:
    """PSNR against noise variance, one panel per radius, one line per strategy.

    Non-finite PSNR values (noise-free cells) are left out of the lines.
    """
    by_radius: dict = defaultdict(lambda: defaultdict(list))
    for row in rows:
        by_radius[row.radius][row.strategy].append((row.variance, row.psnr))
    radii = sorted(by_radius)
    ncols = min(len(radii), 3) or 1
    nrows = max(math.ceil(len(radii) / ncols), 1)
    fig = Figure(figsize=(4.0 * ncols, 3.2 * nrows), layout="constrained")
    axes = fig.subplots(nrows, ncols, squeeze=False).ravel()
    for ax, radius in zip(axes, radii):
        for strategy, pts in sorted(by_radius[radius].items()):
            pts = sorted(p for p in pts if math.isfinite(p[1]))
            if not pts:
                continue
            x, y = zip(*pts)
            color = STRATEGY_COLORS.get(strategy)
            ax.plot(x, y, marker="o", markersize=3, label=strategy, color=color)
        ax.set_title(f"r = {radius:g} px")
        ax.set_xlabel("noise variance")
        ax.set_ylabel("PSNR [dB]")
        ax.grid(alpha=0.3)
    for ax in axes[len(radii):]:
        ax.set_visible(False)
    if radii:
        axes[0].legend(fontsize=8)
    _save(fig, path)


def plot_stage_breakdown(names, percentages, path) -> None:
    """Horizontal stacked bars: share of detection time per stage, per image.

    ``percentages`` is a sequence of ``{stage: percent}`` mappings aligned
    with ``names``.
    """
    stages = list(percentages[0]) if percentages else []
    fig = Figure(figsize=(7.0, 1.0 + 0.45 * max(len(names), 1)), layout="constrained")
    ax = fig.add_subplot()
    left = np.zeros(len(names))
    for color, stage in zip(STAGE_COLORS, stages):
        share = np.array([p[stage] for p in percentages])
        ax.barh(names, share, left=left, color=color, label=stage.replace("_", " "))
        left += share
    ax.set_xlim(0, 100)
    ax.set_xlabel("share of wall time [%]")
    ax.invert_yaxis()
    ax.legend(ncols=min(len(stages), 5), fontsize=7, loc="upper center", bbox_to_anchor=(0.5, -0.35))
    _save(fig, path)
