"""Height extrema (folds) along codimension-two curves and their visibility."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .mesh import Polyline3, SurfaceMesh

WINDOW = 5
MAX_FIT_RESIDUAL = 0.10


@dataclass(frozen=True)
class FoldPoint:
    """Extremum of the height along a curve, ``eps ~ eps* + c mu^2`` in the local chart."""

    location: np.ndarray
    eps: float
    kind: str
    quadratic: float
    residual: float
    index: int
    visibility: str = "unclassified"
    classified: bool = True

    def to_dict(self) -> dict:
        return {
            "location": [float(v) for v in self.location],
            "eps": float(self.eps),
            "kind": self.kind,
            "quadratic": float(self.quadratic),
            "residual": float(self.residual),
            "index": int(self.index),
            "visibility": self.visibility,
            "classified": self.classified,
        }


def _extremum_indices(h, closed):
    n = len(h)
    # index-proportional tie breaking keeps plateaus from doubling up
    hp = h + np.arange(n) * 1e-12 * max(float(np.ptp(h)), 1e-300)
    out = []
    rng = range(n) if closed else range(1, n - 1)
    for k in rng:
        a, b = hp[(k - 1) % n], hp[(k + 1) % n]
        if hp[k] > a and hp[k] > b:
            out.append((k, "max"))
        elif hp[k] < a and hp[k] < b:
            out.append((k, "min"))
    return out


def curve_folds(curve: Polyline3, axis: int = 2) -> list[FoldPoint]:
    """Interior height extrema of ``curve``, refined by a 5-point quadratic fit.

    The fit uses the vertex index as the curve parameter, which stays well
    conditioned where the curve doubles back on itself (a fold on a sharp
    fold line of a thin tube looks like a turning point in space).  A fit
    whose residual exceeds 10% of the window height range is kept but marked
    unclassified.
    """
    P = curve.points
    n = len(P)
    if n < WINDOW:
        raise ValueError(f"need at least {WINDOW} vertices")
    h = P[:, axis]
    out = []
    half = WINDOW // 2
    for k, kind in _extremum_indices(h, curve.closed):
        if curve.closed:
            idx = np.arange(k - half, k + half + 1) % n
            s = np.arange(-half, half + 1, dtype=float)
        else:
            lo = min(max(k - half, 0), n - WINDOW)
            idx = np.arange(lo, lo + WINDOW)
            s = (idx - k).astype(float)
        A = np.stack([np.ones_like(s), s, s * s], 1)
        coef, *_ = np.linalg.lstsq(A, h[idx], rcond=None)
        resid = float(np.max(np.abs(A @ coef - h[idx])))
        span = float(np.ptp(h[idx]))
        c0, c1, c2 = coef
        classified = True
        if c2 == 0 or (span > 0 and resid > MAX_FIT_RESIDUAL * span):
            warnings.warn(f"fold fit at vertex {k} is poor; left unclassified", stacklevel=2)
            classified = False
            sstar, eps = 0.0, float(h[k])
        else:
            sstar = float(np.clip(-c1 / (2 * c2), s[0], s[-1]))
            eps = float(c0 + c1 * sstar + c2 * sstar * sstar)
        q = np.array([1.0, sstar, sstar * sstar])
        cfit, *_ = np.linalg.lstsq(A, P[idx], rcond=None)
        loc = q @ cfit
        loc[axis] = eps
        out.append(FoldPoint(loc, eps, kind, float(c2), resid, int(k),
                             classified=classified))
    return out


def fold_visibility(fold: FoldPoint, mesh: SurfaceMesh, delta_vis: float | None = None) -> str:
    """``invisible`` if the fold sits on a sharp-fold line of ``mesh``, else ``visible``.

    Without sharp-fold data the answer is ``unclassified``.  The default
    threshold is three median edge lengths.
    """
    lines = mesh.sharp_fold_polylines()
    if not lines:
        return "unclassified"
    if delta_vis is None:
        delta_vis = 3.0 * mesh.median_edge_length()
    d = min(ln.distance_to(fold.location) for ln in lines)
    return "invisible" if d < delta_vis else "visible"


def classify_folds(folds, mesh: SurfaceMesh, delta_vis: float | None = None) -> list[FoldPoint]:
    return [replace(f, visibility=fold_visibility(f, mesh, delta_vis)) for f in folds]
