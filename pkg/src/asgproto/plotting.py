"""Figures for an allocation result: similarity planes, guide map, probability map."""
from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

from matplotlib import colormaps
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.linewidth": 0.6,
    "image.interpolation": "nearest",
    "savefig.dpi": 120,
}

# no Software/date tags, so repeated runs produce identical files
_PNG_METADATA = {"Software": None}


def _grid(n: int) -> tuple[int, int]:
    cols = min(n, 5)
    return math.ceil(n / cols), cols


def similarity_figure(similarity) -> Figure:
    n = similarity.shape[0]
    rows, cols = _grid(n)
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(2.2 * cols, 2.2 * rows + 0.4), layout="constrained")
        axes = fig.subplots(rows, cols, squeeze=False)
        for i, ax in enumerate(axes.flat):
            ax.set_axis_off()
            if i >= n:
                continue
            im = ax.imshow(similarity[i], cmap="RdBu_r", vmin=-1, vmax=1)
            ax.set_title(f"prototype {i}")
        fig.colorbar(im, ax=axes, shrink=0.8, label="cosine similarity")
    return fig


def guide_figure(guide, probability, n_sp: int) -> Figure:
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(6.4, 3.0), layout="constrained")
        ax_g, ax_p = fig.subplots(1, 2)
        cmap = colormaps["tab10" if n_sp <= 10 else "tab20"].resampled(max(n_sp, 1))
        im = ax_g.imshow(guide, cmap=cmap, vmin=-0.5, vmax=n_sp - 0.5)
        ax_g.set_title("guide map")
        fig.colorbar(im, ax=ax_g, ticks=range(n_sp), shrink=0.8)
        im = ax_p.imshow(probability, cmap="viridis", vmin=-n_sp, vmax=n_sp)
        ax_p.set_title("probability map")
        fig.colorbar(im, ax=ax_p, shrink=0.8)
        for ax in (ax_g, ax_p):
            ax.set_xticks([])
            ax.set_yticks([])
    return fig


def save_allocation_figures(alloc, directory) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    n_sp = alloc.similarity.shape[0]
    paths = []
    for name, fig in (
        ("similarity.png", similarity_figure(alloc.similarity)),
        ("guide_probability.png", guide_figure(alloc.guide, alloc.probability, n_sp)),
    ):
        path = os.path.join(directory, name)
        fig.savefig(path, metadata=_PNG_METADATA)
        paths.append(path)
    return paths
