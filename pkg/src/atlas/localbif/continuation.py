"""Pseudo-arclength continuation of curves ``F(u) = 0``, ``F: R^(n+1) -> R^n``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TERMINATIONS = ("max-points", "closed-loop", "boundary", "step-underflow", "singular-point")


class ContinuationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ContinuationConfig:
    step: float = 0.02
    step_min: float = 1e-6
    step_max: float = 0.1
    tol: float = 1e-12
    max_newton: int = 8
    max_points: int = 2000
    direction: int = 1
    closed_after: int = 10
    singular_tol: float = 1e-10
    lower: tuple | None = None
    upper: tuple | None = None

    def __post_init__(self):
        if not (0 < self.step_min <= self.step <= self.step_max):
            raise ValueError("need 0 < step_min <= step <= step_max")
        if self.step_min < 1e-12:
            raise ValueError("step_min below 1e-12")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")


@dataclass
class Branch:
    points: np.ndarray
    steps: np.ndarray
    termination: str
    closed: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)


def numerical_jacobian(F, u, h=1e-7):
    u = np.asarray(u, dtype=float)
    f0 = np.asarray(F(u), dtype=float)
    J = np.empty((f0.size, u.size))
    for k in range(u.size):
        dh = h * max(1.0, abs(u[k]))
        up, um = u.copy(), u.copy()
        up[k] += dh
        um[k] -= dh
        J[:, k] = (np.asarray(F(up)) - np.asarray(F(um))) / (2 * dh)
    return J


def _tangent(J):
    """Unit null vector of the n x (n+1) Jacobian and its second-smallest singular value."""
    _, s, vt = np.linalg.svd(J)
    t = vt[-1]
    return t / np.linalg.norm(t), (s[-1] if len(s) else np.inf)


def _orient(t, ref=None):
    if ref is not None:
        return t if t @ ref >= 0 else -t
    # positive component along the last extended coordinate; fall back to
    # the first clearly nonzero one
    for k in range(len(t) - 1, -1, -1):
        if abs(t[k]) > 1e-12:
            return t if t[k] > 0 else -t
    return t


def correct(F, dF, u, t=None, anchor=None, tol=1e-12, max_iter=8):
    """Damped Newton onto ``F = 0``.

    With a tangent ``t`` the update stays in the hyperplane
    ``t . (u - anchor) = 0``; without it the minimum-norm step is used.
    Returns ``(u, converged, iterations)``.
    """
    u = np.asarray(u, dtype=float).copy()
    res = np.linalg.norm(F(u))
    for it in range(1, max_iter + 1):
        J = dF(u)
        f = np.asarray(F(u))
        if t is None:
            du = np.linalg.lstsq(J, -f, rcond=None)[0]
        else:
            A = np.vstack([J, t])
            rhs = np.concatenate([-f, [-(t @ (u - anchor))]])
            try:
                du = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                return u, False, it
        lam = 1.0
        for _ in range(6):
            un = u + lam * du
            rn = np.linalg.norm(F(un))
            if np.isfinite(rn) and rn < max(res, tol):
                break
            lam *= 0.5
        else:
            return u, False, it
        u, res = un, rn
        if res < tol and np.linalg.norm(lam * du) < 1e-8 * max(1.0, np.linalg.norm(u)):
            return u, True, it
        if res < tol * 1e-2:
            return u, True, it
    return u, res < tol, max_iter


def continue_curve(F, u0, cfg: ContinuationConfig | None = None, jacobian=None) -> Branch:
    """Trace the solution curve of ``F`` through (a point near) ``u0``."""
    cfg = cfg or ContinuationConfig()
    dF = jacobian or (lambda u: numerical_jacobian(F, u))
    lower = None if cfg.lower is None else np.asarray(cfg.lower, dtype=float)
    upper = None if cfg.upper is None else np.asarray(cfg.upper, dtype=float)

    u, ok, _ = correct(F, dF, u0, tol=cfg.tol, max_iter=4 * cfg.max_newton)
    if not ok:
        raise ContinuationError("initial point did not converge onto the curve")
    t, smin = _tangent(dF(u))
    t = cfg.direction * _orient(t)

    def inside(v):
        if lower is not None and np.any(v < lower):
            return False
        if upper is not None and np.any(v > upper):
            return False
        return True

    pts, steps = [u], [0.0]
    h = cfg.step
    termination = "max-points"
    closed = False
    while len(pts) < cfg.max_points:
        if smin < cfg.singular_tol:
            termination = "singular-point"
            break
        pred = u + h * t
        un, ok, iters = correct(F, dF, pred, t=t, anchor=pred, tol=cfg.tol,
                                max_iter=cfg.max_newton)
        dist = np.linalg.norm(un - u)
        if ok:
            tn, smin_n = _tangent(dF(un))
            tn = _orient(tn, t)
            # reject jumps and sharp turns; both signal a step that is too long
            ok = 0.25 * h <= dist <= 2.0 * h and tn @ t > 0.5
        if not ok:
            h *= 0.5
            if h < cfg.step_min:
                termination = "step-underflow"
                break
            continue
        if not inside(un):
            termination = "boundary"
            break
        if len(pts) >= cfg.closed_after and np.linalg.norm(un - pts[0]) < h:
            termination = "closed-loop"
            closed = True
            break
        u, t, smin = un, tn, smin_n
        pts.append(u)
        steps.append(dist)
        if iters <= 3:
            h = min(cfg.step, 1.5 * h, cfg.step_max)
    return Branch(np.array(pts), np.array(steps), termination, closed)
