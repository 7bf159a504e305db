"""Synthetic codimension-two curves with constructed height extrema."""

from __future__ import annotations

import numpy as np

from ..geom.mesh import Polyline3
from .parametric import shared_curve, shared_curve_point, tube_half_length, tube_point

CURVE_KINDS = ("single-max", "monotone", "belyakov-like", "on-sharp-fold", "mid-leaf",
               "parabola", "shared-boundary")


def _poly(points, kind, folds, closed=False, **params):
    meta = {"kind": kind, "folds": folds, **params}
    return Polyline3(np.asarray(points, dtype=float), closed=closed, role="codim2", meta=meta)


def synthetic_codim2(kind: str, **params) -> Polyline3:
    """Curve of the given kind; ``meta["folds"]`` lists the constructed extrema.

    Each fold entry is ``(eps, "max" | "min", (x, y, z))``.
    """
    n = int(params.pop("n", 201))
    if kind == "single-max":
        e0, k = params.get("eps_max", 0.2), params.get("kappa", 0.5)
        t = np.linspace(-1, 1, n)
        pts = np.stack([t, 0.5 * t * t, e0 - k * t * t], -1)
        return _poly(pts, kind, [(e0, "max", (0.0, 0.0, e0))], eps_max=e0, kappa=k)
    if kind == "parabola":
        # (cos t, sin t, t^2): a single minimum at t = 0
        t = np.linspace(-1, 1, n)
        pts = np.stack([np.cos(t), np.sin(t), t * t], -1)
        return _poly(pts, kind, [(0.0, "min", (1.0, 0.0, 0.0))])
    if kind == "monotone":
        t = np.linspace(0, 4 * np.pi, n)
        pts = np.stack([np.cos(t), np.sin(t), params.get("pitch", 0.1) * t], -1)
        return _poly(pts, kind, [])
    if kind == "belyakov-like":
        e0, k, s = params.get("eps0", 0.1), params.get("kappa", 1.0), params.get("s", 0.5)
        t = np.linspace(-1, 1, n)
        eps = e0 + k * (t ** 3 / 3 - s * s * t)
        pts = np.stack([t, 0.2 * np.cos(t), eps], -1)
        ext = lambda tt: e0 + k * (tt ** 3 / 3 - s * s * tt)  # noqa: E731
        folds = [(ext(-s), "max", (-s, 0.2 * np.cos(s), ext(-s))),
                 (ext(s), "min", (s, 0.2 * np.cos(s), ext(s)))]
        return _poly(pts, kind, folds, eps0=e0, kappa=k, s=s)
    if kind == "on-sharp-fold":
        # crosses the sharp fold theta = theta0 of the thin tube at its extremum
        d = params.get("d", 1e-4)
        e0, k = params.get("eps0", 0.0), params.get("kappa", 0.2)
        theta0 = params.get("theta0", 0.0)
        sign = -1.0 if params.get("extremum", "max") == "max" else 1.0
        w = params.get("half_width", 0.6)
        t = np.linspace(-w, w, n)
        eps = e0 + sign * k * t * t
        pts = tube_point(theta0 + t, eps, d)
        loc = tube_point(np.array(theta0), np.array(e0), d)
        return _poly(pts, kind, [(e0, "max" if sign < 0 else "min", tuple(loc))],
                     d=d, eps0=e0, theta0=theta0)
    if kind == "mid-leaf":
        # stays on one leaf of the thin tube, extremum at lambda1 = x0
        d = params.get("d", 1e-4)
        e0, k = params.get("eps0", 0.0), params.get("kappa", 0.2)
        x0 = params.get("x0", 0.0)
        leaf = 1.0 if params.get("leaf", "upper") == "upper" else -1.0
        sign = -1.0 if params.get("extremum", "max") == "max" else 1.0
        w = params.get("half_width", 0.1)
        t = np.linspace(-w, w, n)
        eps = e0 + sign * k * t * t
        L = tube_half_length(eps)
        theta = leaf * np.arccos(np.clip((x0 + t) / L, -1, 1))
        pts = tube_point(theta, eps, d)
        th0 = leaf * np.arccos(x0 / tube_half_length(e0))
        loc = tube_point(np.array(th0), np.array(e0), d)
        return _poly(pts, kind, [(e0, "max" if sign < 0 else "min", tuple(loc))],
                     d=d, eps0=e0, x0=x0)
    if kind == "shared-boundary":
        # the curve is symmetric in lambda2, so its height extrema sit at phi = 0, pi
        pts = shared_curve(n)
        ends = [tuple(shared_curve_point(phi)) for phi in (0.0, np.pi)]
        return _poly(pts, kind, [(ends[0][2], "max", ends[0]), (ends[1][2], "min", ends[1])],
                     closed=True)
    raise ValueError(f"unknown curve kind {kind!r}; choose from {', '.join(CURVE_KINDS)}")
