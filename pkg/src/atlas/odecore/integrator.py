"""Dormand-Prince 5(4) integrator with PI step control and dense output.

The stepping primitives are numba kernels shared by :func:`integrate` and the
spike-counting sweep engine. Dense output uses Hairer's 4th-order continuous
extension (``contd5``), five coefficient rows per accepted step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .models import model_code, rhs_kernel, _params_array

# Butcher tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0,
)
A71, A73, A74, A75, A76 = (
    35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0,
)
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
    -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
)
D1, D3, D4, D5, D6, D7 = (
    -12715105075.0 / 11282082432.0, 87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0,
)

BLOWUP_BOUND = 1.0e6

STATUS_OK, STATUS_STIFF, STATUS_BLOWUP, STATUS_MAXSTEPS = 0, 1, 2, 3
STATUS_NAMES = {0: "ok", 1: "stiff-failure", 2: "blow-up", 3: "max-steps"}


class IntegrationError(RuntimeError):
    """Raised for stiff-failure (step underflow) or blow-up."""

    def __init__(self, kind: str, t_last: float, message: str = ""):
        super().__init__(message or f"{kind} at t={t_last!r}")
        self.kind = kind
        self.t_last = t_last


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = 0.1
    t_max: float = 100.0
    dense: bool = True

    def __post_init__(self):
        for name in ("rtol", "atol"):
            v = getattr(self, name)
            if not (0.0 < v <= 1e-2):
                raise ValueError(f"{name} must lie in (0, 1e-2], got {v!r}")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")


# --------------------------------------------------------------------------
# kernels


@njit(cache=True)
def dp_step(code, p, t, y, h, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, rtol, atol):
    """One trial step from (t, y) with k1 = f(y). Returns the scaled error."""
    n = y.shape[0]
    for i in range(n):
        ytmp[i] = y[i] + h * A21 * k1[i]
    rhs_kernel(code, p, ytmp, k2)
    for i in range(n):
        ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
    rhs_kernel(code, p, ytmp, k3)
    for i in range(n):
        ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    rhs_kernel(code, p, ytmp, k4)
    for i in range(n):
        ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    rhs_kernel(code, p, ytmp, k5)
    for i in range(n):
        ytmp[i] = y[i] + h * (
            A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
        )
    rhs_kernel(code, p, ytmp, k6)
    for i in range(n):
        ynew[i] = y[i] + h * (
            A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]
        )
    rhs_kernel(code, p, ynew, k7)
    err = 0.0
    for i in range(n):
        e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        sk = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        r = abs(e) / sk
        if not (r <= err):
            err = r  # also propagates NaN
    return err


@njit(cache=True)
def dense_coeffs(y, ynew, h, k1, k3, k4, k5, k6, k7, rc):
    n = y.shape[0]
    for i in range(n):
        ydiff = ynew[i] - y[i]
        bspl = h * k1[i] - ydiff
        rc[0, i] = y[i]
        rc[1, i] = ydiff
        rc[2, i] = bspl
        rc[3, i] = ydiff - h * k7[i] - bspl
        rc[4, i] = h * (
            D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]
        )


@njit(cache=True)
def dense_eval(rc, theta, out):
    th1 = 1.0 - theta
    for i in range(rc.shape[1]):
        out[i] = rc[0, i] + theta * (
            rc[1, i] + th1 * (rc[2, i] + theta * (rc[3, i] + th1 * rc[4, i]))
        )


@njit(cache=True)
def initial_step(code, p, t, y, f0, hmax, rtol, atol, ytmp, f1):
    """Hairer's starting-step heuristic for an order-5 method."""
    n = y.shape[0]
    dnf = 0.0
    dny = 0.0
    for i in range(n):
        sk = atol + rtol * abs(y[i])
        dnf += (f0[i] / sk) ** 2
        dny += (y[i] / sk) ** 2
    if dnf <= 1e-10 or dny <= 1e-10:
        h = 1.0e-6
    else:
        h = 0.01 * math.sqrt(dny / dnf)
    h = min(h, hmax)
    for i in range(n):
        ytmp[i] = y[i] + h * f0[i]
    rhs_kernel(code, p, ytmp, f1)
    der2 = 0.0
    for i in range(n):
        sk = atol + rtol * abs(y[i])
        der2 += ((f1[i] - f0[i]) / sk) ** 2
    der2 = math.sqrt(der2) / h
    der12 = max(abs(der2), math.sqrt(dnf))
    if der12 <= 1e-15:
        h1 = max(1.0e-6, abs(h) * 1.0e-3)
    else:
        h1 = (0.01 / der12) ** 0.2
    return min(100.0 * abs(h), h1, hmax)


@njit(cache=True)
def pi_control(h, err, facold):
    """Return (h_new, accepted, facold_new) using Hairer's PI controller."""
    beta = 0.04
    expo1 = 0.2 - beta * 0.75
    facc1 = 5.0  # 1 / fac1, fac1 = 0.2
    facc2 = 0.1  # 1 / fac2, fac2 = 10
    safe = 0.9
    if not (err <= 1.0):
        if err != err or err > 1e300:
            return h * 0.1, False, facold
        fac11 = err ** expo1
        return h / min(facc1, fac11 / safe), False, facold
    fac11 = err ** expo1 if err > 0.0 else 0.0
    fac = fac11 / facold ** beta
    fac = max(facc2, min(facc1, fac / safe))
    return h / fac, True, max(err, 1.0e-4)


@njit(cache=True)
def state_ok(y):
    for i in range(y.shape[0]):
        v = y[i]
        if not (abs(v) <= BLOWUP_BOUND):
            return False
    return True


@njit(cache=True)
def integrate_kernel(code, p, y0, t0, t1, rtol, atol, hmax, max_steps, store_dense):
    """Integrate from t0 to t1; returns (status, n, ts, ys, rcs, stats).

    ``ts``/``ys`` hold n accepted-step endpoints (the initial point first).
    ``rcs[j]`` holds the dense coefficients of the step ending at ts[j + 1].
    """
    n = y0.shape[0]
    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    rcs = np.empty((cap if store_dense else 1, 5, n))
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    ynew = np.empty(n)
    rc = np.empty((5, n))
    t = t0
    ts[0] = t
    ys[0, :] = y
    count = 1
    naccept = 0
    nreject = 0
    status = 0
    rhs_kernel(code, p, y, k1)
    h = initial_step(code, p, t, y, k1, hmax, rtol, atol, ytmp, k2)
    facold = 1.0e-4
    last_rejected = False
    hmin_floor = 1.0e-14
    while t < t1:
        if naccept + nreject >= max_steps:
            status = 3
            break
        if t + h > t1:
            h = t1 - t
        if h < hmin_floor * max(1.0, abs(t)):
            status = 1
            break
        err = dp_step(code, p, t, y, h, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, rtol, atol)
        hnew, accepted, facold_new = pi_control(h, err, facold)
        if accepted and not state_ok(ynew):
            status = 2
            break
        if accepted:
            facold = facold_new
            if store_dense:
                dense_coeffs(y, ynew, h, k1, k3, k4, k5, k6, k7, rc)
            if t + h >= t1:
                t = t1
            else:
                t = t + h
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            if count == ts.shape[0]:
                newcap = 2 * count
                ts2 = np.empty(newcap)
                ts2[:count] = ts
                ts = ts2
                ys2 = np.empty((newcap, n))
                ys2[:count] = ys
                ys = ys2
                if store_dense:
                    rcs2 = np.empty((newcap, 5, n))
                    rcs2[: count - 1] = rcs[: count - 1]
                    rcs = rcs2
            ts[count] = t
            ys[count, :] = y
            if store_dense:
                rcs[count - 1, :, :] = rc
            count += 1
            naccept += 1
            if last_rejected:
                hnew = min(hnew, h)
            last_rejected = False
            h = min(hnew, hmax)
        else:
            nreject += 1
            last_rejected = True
            h = hnew
    stats = np.array([naccept, nreject], dtype=np.int64)
    if store_dense:
        rcs = rcs[: count - 1]
    return status, ts[:count], ys[:count], rcs, stats


# --------------------------------------------------------------------------
# Python surface


@dataclass
class Trajectory:
    """Accepted-step samples of an orbit plus dense-output coefficients."""

    t: np.ndarray
    y: np.ndarray
    dense: np.ndarray | None = None
    steps_accepted: int = 0
    steps_rejected: int = 0
    rtol: float = 0.0
    atol: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def t_span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def __call__(self, tq) -> np.ndarray:
        """Evaluate the dense interpolant at time(s) ``tq``."""
        if self.dense is None:
            raise ValueError("trajectory was integrated without dense output")
        tq_arr = np.atleast_1d(np.asarray(tq, dtype=float))
        t0, t1 = self.t_span
        if np.any((tq_arr < t0) | (tq_arr > t1)):
            raise ValueError("query time outside the integrated span")
        j = np.clip(np.searchsorted(self.t, tq_arr, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[j + 1] - self.t[j]
        theta = (tq_arr - self.t[j]) / h
        th1 = 1.0 - theta
        rc = self.dense[j]
        out = rc[:, 0] + theta[:, None] * (
            rc[:, 1]
            + th1[:, None]
            * (rc[:, 2] + theta[:, None] * (rc[:, 3] + th1[:, None] * rc[:, 4]))
        )
        return out[0] if np.ndim(tq) == 0 else out

    def to_csv(self, path, names=("x", "y", "z")) -> None:
        from ..io import atomic_write_text

        lines = ["t," + ",".join(names)]
        for ti, yi in zip(self.t, self.y):
            lines.append(",".join(f"{v:.17g}" for v in (ti, *yi)))
        atomic_write_text(path, "\n".join(lines) + "\n")


def integrate(model: str, params, initial, cfg: IntegratorConfig | None = None,
              t0: float = 0.0, raise_on_failure: bool = True) -> Trajectory:
    """Integrate ``model`` from ``initial`` over ``[t0, t0 + cfg.t_max]``.

    Raises
    ------
    IntegrationError
        ``kind="stiff-failure"`` on step-size underflow, ``kind="blow-up"``
        when the state leaves the ``|y_i| <= 1e6`` ball or turns non-finite.
    """
    cfg = cfg or IntegratorConfig()
    y0 = np.asarray(initial, dtype=np.float64).copy()
    if y0.shape != (3,) or not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be three finite numbers")
    code = model_code(model)
    status, ts, ys, rcs, stats = integrate_kernel(
        code, _params_array(params), y0, float(t0), float(t0 + cfg.t_max),
        cfg.rtol, cfg.atol, cfg.max_step, 50_000_000, cfg.dense,
    )
    traj = Trajectory(
        t=ts, y=ys, dense=rcs if cfg.dense else None,
        steps_accepted=int(stats[0]), steps_rejected=int(stats[1]),
        rtol=cfg.rtol, atol=cfg.atol,
        meta={"model": model, "status": STATUS_NAMES[status]},
    )
    if status != STATUS_OK and raise_on_failure:
        err = IntegrationError(STATUS_NAMES[status], float(ts[-1]))
        err.trajectory = traj
        raise err
    return traj


def locate_events(traj: Trajectory, event, direction: int = 0, subdivisions: int = 8,
                  rel_tol: float = 1e-10) -> np.ndarray:
    """Times where ``event(t, y)`` crosses zero, found on the dense output.

    ``direction`` selects up-crossings (+1), down-crossings (-1) or both (0).
    Each accepted step is sub-sampled before bracketing so that a pair of
    close crossings inside one step is not missed; brackets are bisected to
    ``rel_tol`` times the trajectory span.
    """
    if direction not in (-1, 0, 1):
        raise ValueError("direction must be -1, 0 or 1")
    t0, t1 = traj.t_span
    tol = rel_tol * max(t1 - t0, 1e-300)
    ts = [traj.t[0]]
    for k in range(len(traj.t) - 1):
        ts.extend(np.linspace(traj.t[k], traj.t[k + 1], subdivisions + 1)[1:])
    ts = np.array(ts)
    ys = traj(ts)
    g = np.array([event(t, y) for t, y in zip(ts, ys)])
    out = []
    for k in range(len(ts) - 1):
        ga, gb = g[k], g[k + 1]
        up = ga < 0 <= gb
        down = ga > 0 >= gb
        if not ((up and direction >= 0) or (down and direction <= 0)):
            continue
        a, b = ts[k], ts[k + 1]
        while b - a > tol:
            m = 0.5 * (a + b)
            gm = event(m, traj(m))
            if (gm < 0) == (ga < 0) and gm != 0:
                a = m
            else:
                b = m
        out.append(0.5 * (a + b))
    return np.array(out)
