"""Fold curves and cusps of implicit surfaces ``F(lambda, eps1, eps2) = 0``.

The fold set is ``{F = 0, dF/dlambda = 0}``; cusps are fold points where
``d2F/dlambda2`` also vanishes.  Root counting along lines of fixed
``(eps1, eps2)`` shows the three-to-one transition across the fold set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..localbif.continuation import ContinuationConfig, ContinuationError, continue_curve, correct
from .mesh import Polyline3


@dataclass(frozen=True)
class CuspPoint:
    location: np.ndarray
    residual: float
    branches: tuple
    tangent_angle: float

    def to_dict(self) -> dict:
        return {
            "location": [float(v) for v in self.location],
            "residual": float(self.residual),
            "branches": list(self.branches),
            "tangent_angle": float(self.tangent_angle),
        }


@dataclass
class FoldSet:
    curves: list
    cusps: list
    warnings: list = field(default_factory=list)

    @property
    def projected(self) -> list[np.ndarray]:
        """Fold curves projected to the ``(eps1, eps2)`` plane."""
        return [c.points[:, 1:3] for c in self.curves]

    def to_dict(self) -> dict:
        return {
            "curves": [{"id": k, "closed": c.closed, "points": c.points.tolist()}
                       for k, c in enumerate(self.curves)],
            "cusps": [c.to_dict() for c in self.cusps],
            "warnings": list(self.warnings),
        }


class _Field:
    """``F`` with derivatives in ``lambda`` (analytic gradient when supplied)."""

    def __init__(self, F, box, grad=None):
        self.F = F
        self.grad = grad
        self.box = np.asarray(box, dtype=float)
        self.h = 1e-6 * (self.box[:, 1] - self.box[:, 0])
        # second derivatives from finite differences of a finite difference
        # need a wider step to stay above rounding noise
        self.h2 = 1e-4 * (self.box[:, 1] - self.box[:, 0]) if grad is None else self.h
        # attainable residual of (F, F_lambda) given the derivative noise
        self.tol = 1e-11 if grad is not None else 1e-8

    def value(self, u):
        return self.F(np.asarray(u, dtype=float))

    def d_lam(self, u):
        u = np.asarray(u, dtype=float)
        if self.grad is not None:
            return self.grad(u)[..., 0]
        e = np.zeros(3)
        e[0] = self.h[0]
        return (self.F(u + e) - self.F(u - e)) / (2 * self.h[0])

    def d_lam2(self, u):
        e = np.zeros(3)
        e[0] = self.h2[0]
        u = np.asarray(u, dtype=float)
        return (self.d_lam(u + e) - self.d_lam(u - e)) / (2 * self.h2[0])

    def grad_full(self, u):
        u = np.asarray(u, dtype=float)
        if self.grad is not None:
            return self.grad(u)
        out = np.empty(3)
        for k in range(3):
            e = np.zeros(3)
            e[k] = self.h[k]
            out[k] = (self.F(u + e) - self.F(u - e)) / (2 * self.h[k])
        return out

    def grad_dlam(self, u):
        out = np.empty(3)
        for k in range(3):
            e = np.zeros(3)
            e[k] = self.h2[k]
            out[k] = (self.d_lam(u + e) - self.d_lam(u - e)) / (2 * self.h2[k])
        return out

    def grad_dlam2(self, u):
        out = np.empty(3)
        for k in range(3):
            e = np.zeros(3)
            e[k] = max(self.h2[k], 1e-4 * (self.box[k, 1] - self.box[k, 0]))
            out[k] = (self.d_lam2(u + e) - self.d_lam2(u - e)) / (2 * e[k])
        return out

    # fold system and its Jacobian
    def G(self, u):
        return np.array([self.value(u), self.d_lam(u)])

    def dG(self, u):
        return np.stack([self.grad_full(u), self.grad_dlam(u)])

    # cusp system
    def H(self, u):
        return np.array([self.value(u), self.d_lam(u), self.d_lam2(u)])

    def dH(self, u):
        return np.stack([self.grad_full(u), self.grad_dlam(u), self.grad_dlam2(u)])


def _slice_seeds(fld: _Field, eps2: float, resolution: int):
    """Approximate fold points of the slice ``eps2 = const`` via marching squares."""
    box = fld.box
    lam = np.linspace(box[0, 0], box[0, 1], resolution + 1)
    e1 = np.linspace(box[1, 0], box[1, 1], resolution + 1)
    L, E = np.meshgrid(lam, e1, indexing="ij")
    pts = np.stack([L, E, np.full_like(L, eps2)], -1)
    f = fld.value(pts)
    g = fld.d_lam(pts)
    seeds = []
    for i in range(resolution):
        for j in range(resolution):
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            cross = []
            for k in range(4):
                a, b = corners[k], corners[(k + 1) % 4]
                ga, gb = g[a], g[b]
                if (ga < 0) != (gb < 0):
                    w = ga / (ga - gb)
                    cross.append(((1 - w) * pts[a] + w * pts[b], (1 - w) * f[a] + w * f[b]))
            if len(cross) != 2:
                continue
            (p, fp), (q, fq) = cross
            if (fp < 0) != (fq < 0):
                w = fp / (fp - fq)
                seeds.append((1 - w) * p + w * q)
    return seeds


def _polish_slice(fld: _Field, seed):
    """Newton on (F, F_lambda) in (lambda, eps1) with eps2 fixed."""
    u = np.array(seed, dtype=float)
    scale = np.abs(fld.box[:2, 1] - fld.box[:2, 0])
    for _ in range(30):
        r = fld.G(u)
        J = fld.dG(u)[:, :2]
        try:
            du = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return u, False
        u[:2] += du
        if np.all(np.abs(du) < 1e-13 * scale):
            break
    return u, bool(np.max(np.abs(fld.G(u))) < fld.tol)


def fold_points_at(F, eps2: float, box, resolution: int = 40, grad=None) -> np.ndarray:
    """Fold points ``(lambda, eps1, eps2)`` of the slice at fixed ``eps2``."""
    fld = _Field(F, box, grad)
    out = []
    for s in _slice_seeds(fld, eps2, resolution):
        u, ok = _polish_slice(fld, s)
        if ok and not any(np.linalg.norm(u - v) < 1e-8 for v in out):
            out.append(u)
    out.sort(key=lambda v: tuple(v))
    return np.array(out).reshape(-1, 3)


def _inside(box, u, pad=0.0):
    return bool(np.all(u >= box[:, 0] - pad) and np.all(u <= box[:, 1] + pad))


def _trace(fld: _Field, seed, step, box):
    cfg = dict(step=step, step_min=min(1e-6, step), step_max=step, tol=fld.tol,
               max_points=20000, lower=tuple(box[:, 0]), upper=tuple(box[:, 1]))
    parts = []
    closed = False
    for direction in (1, -1):
        br = continue_curve(fld.G, seed, ContinuationConfig(direction=direction, **cfg),
                            jacobian=fld.dG)
        parts.append(br.points)
        if br.closed:
            closed = True
            break
    if closed:
        return parts[0], True
    pts = np.concatenate([parts[1][::-1], parts[0][1:]])
    return pts, False


def _cusp_on(fld, pts, box, warn):
    c2 = np.array([fld.d_lam2(p) for p in pts])
    out = []
    for k in np.flatnonzero(np.sign(c2[1:]) != np.sign(c2[:-1])):
        guess = 0.5 * (pts[k] + pts[k + 1])
        u = guess.copy()
        ok = False
        for _ in range(40):
            r = fld.H(u)
            if np.max(np.abs(r)) < 10 * fld.tol:
                ok = True
                break
            try:
                u = u + np.linalg.solve(fld.dH(u), -r)
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(u)):
                break
        if ok and _inside(box, u):
            out.append((k, u))
        else:
            warn.append(f"Newton did not converge for the cusp candidate near {guess.tolist()}")
    return out


def _branch_angle(fld, cusp, h):
    J = fld.dG(cusp)
    _, _, vt = np.linalg.svd(J)
    t = vt[-1]
    dirs = []
    for sgn in (1.0, -1.0):
        anchor = cusp + sgn * h * t
        u, ok, _ = correct(fld.G, fld.dG, anchor, t=t, anchor=anchor, tol=1e-13, max_iter=20)
        d = u[1:3] - cusp[1:3]
        dirs.append(d / np.linalg.norm(d))
    cos = float(np.clip(dirs[0] @ dirs[1], -1.0, 1.0))
    return float(np.arccos(cos))


def fold_set_implicit(F, box, resolution: int = 40, grad=None, tangent_step: float = 1e-4) -> FoldSet:
    """Fold curves ``{F = 0, F_lambda = 0}`` in ``box`` and the cusps on them.

    Seeds come from marching squares on ``resolution`` fixed-``eps2`` slices;
    each seed is traced by pseudo-arclength continuation.  Curves are split
    at cusps so that both branches end at the cusp.
    """
    fld = _Field(F, box, grad)
    box = fld.box
    diag = float(np.linalg.norm(box[:, 1] - box[:, 0]))
    step = diag / (4.0 * resolution)
    warn: list[str] = []
    traced: list[tuple[np.ndarray, bool]] = []
    eps2s = np.linspace(box[2, 0], box[2, 1], resolution + 2)[1:-1]
    for e2 in eps2s:
        for s in _slice_seeds(fld, e2, resolution):
            u, ok = _polish_slice(fld, s)
            if not ok or not _inside(box, u):
                warn.append(f"seed near {np.round(s, 6).tolist()} did not converge; dropped")
                continue
            if any(np.min(np.linalg.norm(p - u, axis=1)) < 2 * step for p, _ in traced):
                continue
            try:
                traced.append(_trace(fld, u, step, box))
            except ContinuationError as exc:
                warn.append(f"continuation failed from {u.tolist()}: {exc}")

    curves: list[Polyline3] = []
    cusps: list[CuspPoint] = []
    for pts, closed in traced:
        found = _cusp_on(fld, pts, box, warn)
        if not found:
            curves.append(Polyline3(pts, closed=closed, role="codim2"))
            continue
        # both branches at a cusp end exactly on it
        pieces = []
        start, head = 0, []
        for k, u in found:
            pieces.append(np.concatenate([head, pts[start:k + 1], u[None]]) if head
                          else np.concatenate([pts[start:k + 1], u[None]]))
            start, head = k + 1, [u]
        pieces.append(np.concatenate([np.array(head), pts[start:]]))
        base = len(curves)
        for pc in pieces:
            keep = np.ones(len(pc), dtype=bool)
            keep[1:] = np.any(pc[1:] != pc[:-1], axis=1)
            curves.append(Polyline3(pc[keep], closed=False, role="codim2"))
        for j, (_, u) in enumerate(found):
            res = float(np.max(np.abs(fld.H(u))))
            cusps.append(CuspPoint(u, res, (base + j, base + j + 1),
                                   _branch_angle(fld, u, tangent_step)))
    for w in warn:
        warnings.warn(w, stacklevel=2)
    return FoldSet(curves, cusps, warn)


def cusp_discriminant(eps1, eps2, box=None):
    """``27 eps1^2 + 4 eps2^3``, divided by its box-wide magnitude when ``box`` is given."""
    val = 27.0 * np.asarray(eps1) ** 2 + 4.0 * np.asarray(eps2) ** 3
    if box is None:
        return val
    b = np.asarray(box, dtype=float)
    E1 = np.max(np.abs(b[1]))
    E2 = np.max(np.abs(b[2]))
    return val / (27.0 * E1 ** 2 + 4.0 * E2 ** 3)


@dataclass(frozen=True)
class RootCount:
    count: int
    roots: np.ndarray
    tangential: tuple

    def to_dict(self) -> dict:
        return {"count": self.count, "roots": [float(r) for r in self.roots],
                "tangential": list(self.tangential)}


def count_roots_line(F, eps1: float, eps2: float, lam_range=(-5.0, 5.0), n: int = 4001,
                     tol: float = 1e-8) -> RootCount:
    """Zeros of ``lambda -> F(lambda, eps1, eps2)`` on ``lam_range``.

    Sign changes on a uniform scan are refined with Brent's method.  Touching
    zeros (a local extremum of ``F`` with ``|F| < tol``) are reported once and
    flagged tangential, as is any root where ``|dF/dlambda| < tol``.
    """
    lam = np.linspace(lam_range[0], lam_range[1], n)
    pts = np.stack([lam, np.full(n, eps1), np.full(n, eps2)], -1)
    f = np.asarray(F(pts), dtype=float)
    g = lambda x: float(F(np.array([x, eps1, eps2])))  # noqa: E731
    dl = (lam[1] - lam[0]) * 1e-3

    def slope(x):
        return (g(x + dl) - g(x - dl)) / (2 * dl)

    found: list[tuple[float, bool]] = []
    for k in range(n - 1):
        if f[k] == 0.0:
            continue
        if f[k + 1] != 0.0 and (f[k] < 0) != (f[k + 1] < 0):
            r = brentq(g, lam[k], lam[k + 1], xtol=1e-14)
            found.append((r, bool(abs(slope(r)) < tol)))
    for k in range(n):
        if f[k] == 0.0:
            left = f[k - 1] if k > 0 else 0.0
            right = f[k + 1] if k < n - 1 else 0.0
            crossing = left * right < 0
            found.append((float(lam[k]), bool(not crossing or abs(slope(lam[k])) < tol)))
    # touching zeros between samples: extrema of F that nearly reach zero
    for k in range(1, n - 1):
        if f[k] == 0.0:
            continue
        if (abs(f[k]) <= abs(f[k - 1]) and abs(f[k]) <= abs(f[k + 1])
                and (f[k - 1] < 0) == (f[k] < 0) == (f[k + 1] < 0)):
            a, b = lam[k - 1], lam[k + 1]
            sa, sb = slope(a), slope(b)
            if (sa < 0) == (sb < 0):
                continue
            x = brentq(slope, a, b, xtol=1e-14)
            if abs(g(x)) < tol:
                found.append((x, True))
    found.sort()
    roots, flags = [], []
    for r, t in found:
        if roots and abs(r - roots[-1]) < 1e-7:
            flags[-1] = flags[-1] or t
            continue
        roots.append(r)
        flags.append(t)
    return RootCount(len(roots), np.array(roots), tuple(flags))
