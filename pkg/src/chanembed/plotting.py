"""SVG figures for embeddings and sweep surfaces.

Figures are written with a fixed SVG hash salt and no date metadata so the
bytes depend only on the input data.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "svg.hashsalt": "chanembed",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def class_colors(labels) -> dict:
    """One colour per class, assigned in sorted class-name order."""
    classes = sorted({str(c) for c in labels})
    cmap = plt.get_cmap("tab10" if len(classes) <= 10 else "tab20")
    n = cmap.N
    return {c: matplotlib.colors.to_hex(cmap(i % n)) for i, c in enumerate(classes)}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def scatter_svg(path, y, labels, *, title=None, xlabel="y1", ylabel="y2", colors=None,
                marker_size=12.0) -> None:
    """Two-dimensional scatter, one group per class (``gid="class-<name>"``) plus a legend."""
    y = np.asarray(y, dtype=np.float64)
    labels = np.asarray([str(c) for c in labels])
    if y.ndim != 2 or y.shape[0] == 0:
        raise ValueError("nothing to plot: embedding is empty")
    if y.shape[1] != 2 or labels.size != y.shape[0]:
        raise ValueError("scatter needs N x 2 points and one label per point")
    colors = colors or class_colors(labels)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        for cls in sorted(colors):
            sel = labels == cls
            if not np.any(sel):
                continue
            pc = ax.scatter(y[sel, 0], y[sel, 1], s=marker_size, c=colors[cls], label=cls,
                            edgecolors="none")
            pc.set_gid(f"class-{cls}")
        leg = ax.legend(loc="best", frameon=False, markerscale=1.5)
        leg.set_gid("legend")
        for text in leg.get_texts():
            text.set_gid(f"legend-{text.get_text()}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)


def surface_svg(path, learning_rates, perplexities, surface, *, best=None, title=None) -> None:
    """Heat map of a fitness surface; failed (NaN) cells are left blank."""
    surface = np.ma.masked_invalid(np.asarray(surface, dtype=np.float64))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        im = ax.imshow(surface, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(perplexities)), [f"{p:g}" for p in perplexities], rotation=90)
        ax.set_yticks(range(len(learning_rates)), [f"{r:g}" for r in learning_rates])
        ax.set_xlabel("perplexity")
        ax.set_ylabel("learning rate")
        if best is not None:
            ax.plot(best[1], best[0], marker="x", color="red", markersize=9, gid="argmax")
        fig.colorbar(im, ax=ax, label="fitness")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)
