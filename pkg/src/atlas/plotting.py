"""Deterministic SVG figures of sweep grids and polylines.

The SVG backend is given a fixed hash salt and no date so that identical
inputs give byte-identical files.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write_bytes  # noqa: E402
from .sweep.export import grid_rgb  # noqa: E402

_RC = {"svg.hashsalt": "atlas", "svg.fonttype": "none", "path.simplify": False}


def _svg_bytes(fig) -> bytes:
    buf = io.BytesIO()
    with matplotlib.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": "atlas"})
    plt.close(fig)
    return buf.getvalue()


def grid_figure(grid, boundaries=None):
    """Colour map of a spike grid with optional boundary polylines on top."""
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 5))
        a1, a2 = grid.axis1, grid.axis2
        ax.imshow(grid_rgb(grid), extent=(a1.lo, a1.hi, a2.lo, a2.hi), aspect="auto",
                  interpolation="nearest")
        for line in boundaries or ():
            p = line.points
            if line.closed:
                p = np.vstack([p, p[:1]])
            ax.plot(p[:, 0], p[:, 1], color="white", lw=0.8)
        ax.set_xlabel(a1.name)
        ax.set_ylabel(a2.name)
        ax.set_title(f"{grid.model}: spike counts, eps = {grid.eps:g}")
    return fig


def polylines_figure(curves, axes=(0, 1), title: str = ""):
    """Projection of 3D polylines onto two coordinates."""
    i, j = axes
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        for c in curves:
            p = c.points
            if c.closed:
                p = np.vstack([p, p[:1]])
            ax.plot(p[:, i], p[:, j], lw=1.0)
        ax.set_xlabel("xyz"[i])
        ax.set_ylabel("xyz"[j])
        if title:
            ax.set_title(title)
    return fig


def write_svg(path, fig) -> None:
    atomic_write_bytes(path, _svg_bytes(fig))
