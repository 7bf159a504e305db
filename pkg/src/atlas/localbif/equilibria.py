"""Equilibria of the Hindmarsh-Rose and FitzHugh-Nagumo systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..odecore.models import FHNParams, HRParams, fhn_jacobian, fhn_rhs, hr_jacobian, hr_rhs
from .linalg import TestFunctionValues, eigen3, real_cubic_roots, test_functions


@dataclass(frozen=True)
class Equilibrium:
    state: np.ndarray
    eigenvalues: np.ndarray
    tests: TestFunctionValues
    residual: float

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))

    @property
    def kind(self) -> str:
        re = self.eigenvalues.real
        complex_pair = bool(np.any(self.eigenvalues.imag != 0))
        if np.all(re < 0):
            return "stable-focus" if complex_pair else "stable-node"
        if np.all(re > 0):
            return "unstable-focus" if complex_pair else "unstable-node"
        return "saddle-focus" if complex_pair else "saddle"

    def to_dict(self) -> dict:
        return {
            "state": [float(v) for v in self.state],
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "fold": self.tests.fold,
            "hopf": self.tests.hopf,
            "hopf_admissible": self.tests.hopf_admissible,
            "residual": self.residual,
            "kind": self.kind,
        }


def hr_cubic(p: HRParams) -> tuple[float, float, float, float]:
    """Coefficients of the equilibrium cubic in x."""
    return p.a, p.d - p.b, p.s, -(p.c + p.s * p.x0 + p.I)


def hr_state(x: float, p: HRParams) -> np.ndarray:
    return np.array([x, p.c - p.d * x * x, p.s * (x - p.x0)])


def _make(state, rhs, jac):
    J = jac(state)
    return Equilibrium(
        state=state,
        eigenvalues=eigen3(J),
        tests=test_functions(J),
        residual=float(np.max(np.abs(rhs(state)))),
    )


def hr_equilibria(p: HRParams) -> list[Equilibrium]:
    """All equilibria, ordered by increasing x."""
    out = []
    for x in real_cubic_roots(*hr_cubic(p)):
        st = hr_state(float(x), p)
        out.append(_make(st, lambda u: hr_rhs(u, p), lambda u: hr_jacobian(u, p)))
    return out


def fhn_equilibria(p: FHNParams) -> list[Equilibrium]:
    """Equilibria with V = 0 and W = U / gamma (W = p when gamma = 0)."""
    if p.gamma == 0:
        states = [np.array([0.0, 0.0, p.p])]
    else:
        # U^3 - (1 + alpha) U^2 + (alpha + 1/gamma) U - p = 0
        us = real_cubic_roots(1.0, -(1.0 + p.alpha), p.alpha + 1.0 / p.gamma, -p.p)
        states = [np.array([u, 0.0, u / p.gamma]) for u in us]
    return [_make(s, lambda u: fhn_rhs(u, p), lambda u: fhn_jacobian(u, p)) for s in states]


def hr_fold_system(p: HRParams):
    """Fold-of-equilibria curve in ``u = (x, b, I)``: ``(cubic(x), det J) = 0``."""

    def F(u):
        x, b, I = u
        q = p.replace(b=float(b), I=float(I))
        g = ((q.a * x + (q.d - q.b)) * x + q.s) * x - (q.c + q.s * q.x0 + q.I)
        return np.array([g, test_functions(hr_jacobian(hr_state(x, q), q)).fold])

    def dF(u):
        x, b, I = u
        # det J = -eps g'(x) along the equilibrium branch
        gp = 3 * p.a * x * x + 2 * (p.d - b) * x + p.s
        gpp = 6 * p.a * x + 2 * (p.d - b)
        return np.array([
            [gp, -x * x, -1.0],
            [-p.eps * gpp, 2 * p.eps * x, 0.0],
        ])

    return F, dF


def hr_fold_seed(p: HRParams) -> np.ndarray | None:
    """A point on the fold curve at the current ``b`` (None if the cubic has no fold)."""
    A, B, C = 3 * p.a, 2 * (p.d - p.b), p.s
    disc = B * B - 4 * A * C
    if disc < 0:
        return None
    x = (-B + np.sqrt(disc)) / (2 * A)
    I = p.a * x ** 3 + (p.d - p.b) * x * x + p.s * x - p.c - p.s * p.x0
    return np.array([x, p.b, I])
