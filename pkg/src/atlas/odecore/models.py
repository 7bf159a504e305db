"""Vector fields of the Hindmarsh-Rose and FitzHugh-Nagumo neuron models.

Every model is a 3D autonomous field evaluated by a numba kernel that takes
an integer model code and a flat float64 parameter vector, so the integrator
and the sweep engine can run without touching Python objects.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from numba import njit

HR, FHN, DECAY, HARMONIC = 0, 1, 2, 3

MODEL_CODES = {"hr": HR, "fhn": FHN, "decay": DECAY, "harmonic": HARMONIC}


class InvalidParameterError(ValueError):
    pass


def _check_finite(obj) -> None:
    for f in fields(obj):
        v = getattr(obj, f.name)
        if not math.isfinite(v):
            raise InvalidParameterError(f"{f.name} must be finite, got {v!r}")


@dataclass(frozen=True)
class HRParams:
    """Hindmarsh-Rose parameters; ``b``, ``I`` and ``eps`` are the free ones."""

    b: float = 3.0
    I: float = 2.0
    eps: float = 0.018
    a: float = 1.0
    c: float = 1.0
    d: float = 5.0
    s: float = 4.0
    x0: float = -1.6

    def __post_init__(self):
        _check_finite(self)
        if self.eps < 0:
            raise InvalidParameterError("eps must be >= 0")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.a, self.b, self.c, self.d, self.s, self.x0, self.I, self.eps],
            dtype=np.float64,
        )

    def replace(self, **kw) -> "HRParams":
        return HRParams(**{**asdict(self), **kw})


@dataclass(frozen=True)
class FHNParams:
    """FitzHugh-Nagumo travelling-wave ODE parameters."""

    alpha: float = 0.1
    s: float = 1.0
    eps: float = 0.01
    delta: float = 1.0
    p: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        _check_finite(self)
        if self.delta == 0:
            raise InvalidParameterError("delta must be nonzero")
        if self.s == 0:
            raise InvalidParameterError("s must be nonzero")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.alpha, self.s, self.eps, self.delta, self.p, self.gamma],
            dtype=np.float64,
        )

    def replace(self, **kw) -> "FHNParams":
        return FHNParams(**{**asdict(self), **kw})


@dataclass(frozen=True)
class DecayParams:
    rate: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.rate], dtype=np.float64)


@dataclass(frozen=True)
class HarmonicParams:
    omega: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.omega], dtype=np.float64)


PARAM_TYPES = {
    "hr": HRParams,
    "fhn": FHNParams,
    "decay": DecayParams,
    "harmonic": HarmonicParams,
}


def model_code(model: str) -> int:
    try:
        return MODEL_CODES[model]
    except KeyError:
        raise InvalidParameterError(
            f"unknown model {model!r}; expected one of {sorted(MODEL_CODES)}"
        ) from None


@njit(cache=True)
def rhs_kernel(code, p, y, out):
    if code == 0:
        x = y[0]
        out[0] = y[1] - p[0] * x * x * x + p[1] * x * x - y[2] + p[6]
        out[1] = p[2] - p[3] * x * x - y[1]
        out[2] = p[7] * (p[4] * (x - p[5]) - y[2])
    elif code == 1:
        u = y[0]
        out[0] = y[1]
        out[1] = (p[1] * y[1] - u * (u - 1.0) * (p[0] - u) + y[2] - p[4]) / p[3]
        out[2] = p[2] / p[1] * (u - p[5] * y[2])
    elif code == 2:
        out[0] = -p[0] * y[0]
        out[1] = -p[0] * y[1]
        out[2] = -p[0] * y[2]
    else:
        out[0] = y[1]
        out[1] = -p[0] * p[0] * y[0]
        out[2] = 0.0


@njit(cache=True)
def jacobian_kernel(code, p, y, J):
    J[:, :] = 0.0
    if code == 0:
        x = y[0]
        J[0, 0] = -3.0 * p[0] * x * x + 2.0 * p[1] * x
        J[0, 1] = 1.0
        J[0, 2] = -1.0
        J[1, 0] = -2.0 * p[3] * x
        J[1, 1] = -1.0
        J[2, 0] = p[7] * p[4]
        J[2, 2] = -p[7]
    elif code == 1:
        u = y[0]
        # d/du of u(u-1)(alpha-u) = -3u^2 + 2(1+alpha)u - alpha
        dcubic = -3.0 * u * u + 2.0 * (1.0 + p[0]) * u - p[0]
        J[0, 1] = 1.0
        J[1, 0] = -dcubic / p[3]
        J[1, 1] = p[1] / p[3]
        J[1, 2] = 1.0 / p[3]
        J[2, 0] = p[2] / p[1]
        J[2, 2] = -p[2] / p[1] * p[5]
    elif code == 2:
        J[0, 0] = -p[0]
        J[1, 1] = -p[0]
        J[2, 2] = -p[0]
    else:
        J[0, 1] = 1.0
        J[1, 0] = -p[0] * p[0]


def _params_array(params) -> np.ndarray:
    return params.as_array() if hasattr(params, "as_array") else np.asarray(params, float)


def evaluate_rhs(model: str, state, params) -> np.ndarray:
    out = np.empty(3)
    rhs_kernel(model_code(model), _params_array(params), np.asarray(state, float), out)
    return out


def evaluate_jacobian(model: str, state, params) -> np.ndarray:
    J = np.empty((3, 3))
    jacobian_kernel(
        model_code(model), _params_array(params), np.asarray(state, float), J
    )
    return J


def hr_rhs(state, p: HRParams) -> np.ndarray:
    """Hindmarsh-Rose vector field at ``state = (x, y, z)``."""
    return evaluate_rhs("hr", state, p)


def fhn_rhs(state, p: FHNParams) -> np.ndarray:
    """FitzHugh-Nagumo vector field at ``state = (U, V, W)``."""
    if p.delta == 0 or p.s == 0:
        raise InvalidParameterError("delta and s must be nonzero")
    return evaluate_rhs("fhn", state, p)


def hr_jacobian(state, p: HRParams) -> np.ndarray:
    return evaluate_jacobian("hr", state, p)


def fhn_jacobian(state, p: FHNParams) -> np.ndarray:
    return evaluate_jacobian("fhn", state, p)
