"""Per-parameter-point spike counting.

A cell is integrated through a transient, then observed. During observation
the kernel records up-crossings of the spike threshold by the fast variable
and the states at local maxima of that variable, which serve as the Poincare
section. The attractor is periodic when the last section point recurs within
``delta_ret``; spikes per period are the up-crossings between the two
matching section points.  If a shorter return is still contracting (a
slowly alternating transient), observation is extended before deciding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numba import njit

from ..odecore.integrator import (
    IntegratorConfig,
    dense_coeffs,
    dense_eval,
    dp_step,
    initial_step,
    pi_control,
    state_ok,
)
from ..odecore.models import _params_array, model_code, rhs_kernel

CLS_EQUILIBRIUM, CLS_PERIODIC, CLS_UNRESOLVED, CLS_BLOWUP = 0, 1, 2, 3

EQUILIBRIUM_SPEED = 1e-8
# a recurring section point only counts as a cycle if the fast variable
# actually oscillates; slowly damped foci otherwise pass the return test
MIN_CYCLE_AMPLITUDE = 1e-4
# a shorter return that is within SETTLING_NEAR * delta_ret and still shrinking
# by SETTLING_RATIO per candidate period extends observation (at most
# MAX_EXTENSIONS more windows of length t_obs)
SETTLING_NEAR = 100.0
SETTLING_RATIO = 0.9
MAX_EXTENSIONS = 3


class SpikeClass(str, Enum):
    EQUILIBRIUM = "equilibrium"
    PERIODIC = "periodic"
    UNRESOLVED = "chaotic/unresolved"
    BLOWUP = "blow-up"

    @property
    def token(self) -> str:
        # lowercase CSV token without the slash
        return {"chaotic/unresolved": "unresolved"}.get(self.value, self.value)

    @classmethod
    def from_code(cls, code: int) -> "SpikeClass":
        return _CLASS_BY_CODE[int(code)]

    @classmethod
    def from_token(cls, token: str) -> "SpikeClass":
        for c in cls:
            if token in (c.value, c.token):
                return c
        raise ValueError(f"unknown classification token {token!r}")

    @property
    def code(self) -> int:
        return _CODE_BY_CLASS[self]


_CLASS_BY_CODE = {
    CLS_EQUILIBRIUM: SpikeClass.EQUILIBRIUM,
    CLS_PERIODIC: SpikeClass.PERIODIC,
    CLS_UNRESOLVED: SpikeClass.UNRESOLVED,
    CLS_BLOWUP: SpikeClass.BLOWUP,
}
_CODE_BY_CLASS = {v: k for k, v in _CLASS_BY_CODE.items()}

HR_DEFAULT_INITIAL = (-1.6, 4.0, 0.0)


@dataclass(frozen=True)
class SCConfig:
    """Tuning of a spike-counting run.

    ``initial_policy`` is ``"fixed"`` (every cell starts at ``initial``) or
    ``"continuation"`` (a sweep row inherits the previous cell's final state).
    """

    t_transient: float = 1000.0
    t_observe: float = 2000.0
    threshold: float = 0.0
    delta_ret: float = 1e-5
    n_max: int = 64
    initial: tuple = HR_DEFAULT_INITIAL
    initial_policy: str = "fixed"
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if not (self.t_transient > 0 and self.t_observe > 0):
            raise ValueError("t_transient and t_observe must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not self.delta_ret > 0:
            raise ValueError("delta_ret must be positive")
        if self.initial_policy not in ("fixed", "continuation"):
            raise ValueError("initial_policy must be 'fixed' or 'continuation'")
        if len(self.initial) != 3:
            raise ValueError("initial state needs three components")


@dataclass(frozen=True)
class SpikeCountResult:
    classification: SpikeClass
    spikes: int = 0
    period: float = 0.0

    def __post_init__(self):
        if self.classification is SpikeClass.PERIODIC:
            if not self.period > 0:
                raise ValueError("periodic result needs a positive period")


# --------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True)
def _locate(rc, t_old, h, comp, level, code, p, use_rhs, tol, work, fwork):
    """Bisection on the dense interpolant for the crossing inside one step.

    Finds theta where ``y[comp] - level`` (or ``f(y)[comp]`` when use_rhs)
    changes sign; the caller guarantees a sign change over [0, 1].
    """
    lo = 0.0
    hi = 1.0
    dense_eval(rc, lo, work)
    if use_rhs:
        rhs_kernel(code, p, work, fwork)
        glo = fwork[comp] - level
    else:
        glo = work[comp] - level
    while (hi - lo) * h > tol:
        mid = 0.5 * (lo + hi)
        dense_eval(rc, mid, work)
        if use_rhs:
            rhs_kernel(code, p, work, fwork)
            gm = fwork[comp] - level
        else:
            gm = work[comp] - level
        if (gm > 0.0) == (glo > 0.0):
            lo = mid
            glo = gm
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    dense_eval(rc, theta, work)
    return t_old + theta * h


@njit(cache=True, nogil=True)
def _sec_dist(sec_y, a, b):
    d = 0.0
    for i in range(sec_y.shape[1]):
        ref = sec_y[b, i]
        d = max(d, abs(sec_y[a, i] - ref) / max(1.0, abs(ref)))
    return d


@njit(cache=True, nogil=True)
def _first_return(sec_y, nsec, delta_ret):
    m = nsec - 1
    for k in range(1, m + 1):
        if _sec_dist(sec_y, m - k, m) < delta_ret:
            return k
    return 0


@njit(cache=True, nogil=True)
def _still_settling(sec_y, nsec, delta_ret):
    """True if a return at lag k hides a shorter, still-contracting return.

    Near a period doubling the transient alternates and decays slowly, so
    the lag-2d return can pass the tolerance before the lag-d one does.
    """
    if nsec < 2:
        return False
    k = _first_return(sec_y, nsec, delta_ret)
    m = nsec - 1
    for d in range(1, k):
        if k % d or m - k - d < 0:
            continue
        now = _sec_dist(sec_y, m - d, m)
        before = _sec_dist(sec_y, m - k - d, m - k)
        if now < SETTLING_NEAR * delta_ret and now < SETTLING_RATIO * before:
            return True
    return False


@njit(cache=True, nogil=True)
def spike_kernel(code, p, y0, t_tr, t_obs, x_th, delta_ret, n_max, rtol, atol, hmax):
    """Returns (class code, spikes, period, final state)."""
    n = 3
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
    work = np.empty(n)
    fwork = np.empty(n)

    cap = 4096
    sec_t = np.empty(cap)
    sec_y = np.empty((cap, n))
    nsec = 0
    up_cap = 8192
    up_t = np.empty(up_cap)
    nup = 0
    low_t = np.empty(cap)
    low_x = np.empty(cap)
    nlow = 0
    overflow = False

    t = 0.0
    t_end = t_tr + t_obs
    tloc = 1e-10 * t_end
    rhs_kernel(code, p, y, k1)
    h = initial_step(code, p, t, y, k1, hmax, rtol, atol, ytmp, k2)
    facold = 1e-4
    last_rejected = False
    status = 0
    nsteps = 0
    # the transient ends exactly at t_tr so observation starts on a step boundary
    target = t_tr
    observing = False
    extensions = 0
    while True:
        if t >= target:
            if observing:
                if (not overflow and extensions < MAX_EXTENSIONS
                        and _still_settling(sec_y, nsec, delta_ret)):
                    extensions += 1
                    nsec = 0
                    nup = 0
                    nlow = 0
                    target = t + t_obs
                    continue
                break
            observing = True
            target = t_end
            continue
        if t + h > target:
            h = target - t
        if h < 1e-14 * max(1.0, abs(t)) or nsteps > 100_000_000:
            status = 1
            break
        nsteps += 1
        err = dp_step(code, p, t, y, h, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, rtol, atol)
        hnew, accepted, facold_new = pi_control(h, err, facold)
        if not accepted:
            last_rejected = True
            h = hnew
            continue
        if not state_ok(ynew):
            status = 2
            break
        facold = facold_new
        t_old = t
        t = target if t + h >= target else t + h
        hstep = t - t_old
        if observing:
            crossed_up = y[0] < x_th and ynew[0] >= x_th
            at_max = k1[0] > 0.0 and k7[0] <= 0.0
            if k1[0] < 0.0 and k7[0] >= 0.0:
                if nlow < cap:
                    low_t[nlow] = t
                    low_x[nlow] = min(y[0], ynew[0])
                    nlow += 1
                else:
                    overflow = True
            if crossed_up or at_max:
                dense_coeffs(y, ynew, h, k1, k3, k4, k5, k6, k7, rc)
            if crossed_up:
                if nup < up_cap:
                    up_t[nup] = _locate(rc, t_old, hstep, 0, x_th, code, p, False, tloc, work, fwork)
                    nup += 1
                else:
                    overflow = True
            if at_max:
                if nsec < cap:
                    sec_t[nsec] = _locate(rc, t_old, hstep, 0, 0.0, code, p, True, tloc, work, fwork)
                    for i in range(n):
                        sec_y[nsec, i] = work[i]
                    nsec += 1
                else:
                    overflow = True
        for i in range(n):
            y[i] = ynew[i]
            k1[i] = k7[i]
        if last_rejected:
            hnew = min(hnew, h)
        last_rejected = False
        h = min(hnew, hmax)

    if status == 2:
        return CLS_BLOWUP, 0, 0.0, y
    if status == 1 or overflow:
        return CLS_UNRESOLVED, 0, 0.0, y

    rhs_kernel(code, p, y, k1)
    speed = 0.0
    for i in range(n):
        speed = max(speed, abs(k1[i]))
    if nup == 0 and speed < EQUILIBRIUM_SPEED:
        return CLS_EQUILIBRIUM, 0, 0.0, y

    if nsec >= 2:
        m = nsec - 1
        for k in range(1, m + 1):
            if _sec_dist(sec_y, m - k, m) < delta_ret:
                t_a = sec_t[m - k]
                t_b = sec_t[m]
                spikes = 0
                for j in range(nup):
                    if up_t[j] > t_a and up_t[j] <= t_b:
                        spikes += 1
                if spikes > n_max:
                    break
                xhi = -np.inf
                xlo = np.inf
                for j in range(m - k, m + 1):
                    xhi = max(xhi, sec_y[j, 0])
                    xlo = min(xlo, sec_y[j, 0])
                for j in range(nlow):
                    if low_t[j] > t_a and low_t[j] <= t_b:
                        xlo = min(xlo, low_x[j])
                if xhi - xlo < MIN_CYCLE_AMPLITUDE:
                    break
                return CLS_PERIODIC, spikes, t_b - t_a, y
    return CLS_UNRESOLVED, 0, 0.0, y


# --------------------------------------------------------------------------
# Python surface


def _run_kernel(code, parr, y0, cfg: SCConfig):
    ic = cfg.integrator
    return spike_kernel(
        code, parr, np.asarray(y0, dtype=np.float64), float(cfg.t_transient),
        float(cfg.t_observe), float(cfg.threshold), float(cfg.delta_ret),
        int(cfg.n_max), ic.rtol, ic.atol, ic.max_step,
    )


def count_spikes(model: str, params, cfg: SCConfig | None = None,
                 initial=None) -> SpikeCountResult:
    """Classify the attractor reached from ``initial`` and count its spikes."""
    cfg = cfg or SCConfig()
    y0 = cfg.initial if initial is None else initial
    cls, spikes, period, _ = _run_kernel(model_code(model), _params_array(params), y0, cfg)
    return SpikeCountResult(SpikeClass.from_code(cls), int(spikes), float(period))
