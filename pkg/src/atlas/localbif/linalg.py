"""Closed-form cubic roots, 3x3 eigenvalues and bifurcation test functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DISCRIMINANT_GUARD = 1e-12


def _polish(coeffs, x, iters=4):
    a, b, c, d = coeffs
    for _ in range(iters):
        f = ((a * x + b) * x + c) * x + d
        df = (3 * a * x + 2 * b) * x + c
        if df == 0:
            break
        step = f / df
        xn = x - step
        fn = ((a * xn + b) * xn + c) * xn + d
        if abs(fn) >= abs(f):
            break
        x = xn
    return x


def cubic_discriminant(a, b, c, d) -> float:
    """Discriminant of the monic-normalised cubic (positive: three real roots)."""
    b, c, d = b / a, c / a, d / a
    return 18 * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * c ** 3 - 27 * d * d


def real_cubic_roots(a, b, c, d, guard=DISCRIMINANT_GUARD) -> np.ndarray:
    """Sorted real roots of ``a x^3 + b x^2 + c x + d`` (Cardano + Newton polish).

    Inside the discriminant guard band the double root is reported once, so
    the count is 1, 2 or 3.
    """
    if a == 0:
        raise ValueError("leading coefficient must be nonzero")
    B, C, D = b / a, c / a, d / a
    p = C - B * B / 3.0
    q = 2.0 * B ** 3 / 27.0 - B * C / 3.0 + D
    disc = cubic_discriminant(a, b, c, d)
    scale = max(1.0, abs(B), abs(C), abs(D)) ** 4
    shift = -B / 3.0
    if disc > guard * scale:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * r) if p != 0 else 0.0
        phi = math.acos(max(-1.0, min(1.0, arg)))
        roots = [r * math.cos((phi - 2.0 * math.pi * k) / 3.0) + shift for k in range(3)]
    elif disc < -guard * scale:
        # the two discriminant forms can disagree in sign by rounding
        s = math.sqrt(max(q * q / 4.0 + p ** 3 / 27.0, 0.0))
        roots = [np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s) + shift]
    else:
        # (near-)double root: t = 3q/p is simple, -3q/(2p) is double
        if abs(p) < 1e-300:
            roots = [shift]
        else:
            roots = [3.0 * q / p + shift, -1.5 * q / p + shift]
    roots = sorted(_polish((1.0, B, C, D), float(x)) for x in roots)
    out = []
    for x in roots:
        if not out or abs(x - out[-1]) > 1e-12 * max(1.0, abs(x)):
            out.append(x)
    return np.array(out)


def char_poly(J) -> tuple[float, float, float]:
    """(a2, a1, a0) with det(lambda I - J) = lambda^3 + a2 lambda^2 + a1 lambda + a0."""
    J = np.asarray(J, dtype=float)
    tr = J[0, 0] + J[1, 1] + J[2, 2]
    minors = (
        J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
        + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1]
    )
    return -tr, minors, -det3(J)


def det3(J) -> float:
    J = np.asarray(J, dtype=float)
    return float(
        J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
        + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
    )


def eigen3(J) -> np.ndarray:
    """Eigenvalues of a real 3x3 matrix, sorted by descending real part.

    Complex eigenvalues come as an exact conjugate pair.
    """
    a2, a1, a0 = char_poly(J)
    B, C, D = a2, a1, a0
    p = C - B * B / 3.0
    q = 2.0 * B ** 3 / 27.0 - B * C / 3.0 + D
    shift = -B / 3.0
    disc = cubic_discriminant(1.0, B, C, D)
    if disc >= 0:
        real = real_cubic_roots(1.0, B, C, D, guard=0.0)
        if len(real) == 3:
            vals = [complex(x) for x in real]
        else:
            # repeated roots: deflate around the polished simple root
            vals = _deflated(B, C, D, real[0])
    else:
        s = math.sqrt(max(q * q / 4.0 + p ** 3 / 27.0, 0.0))
        r = _polish((1.0, B, C, D), np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s) + shift)
        vals = _deflated(B, C, D, r)
    vals.sort(key=lambda z: (-z.real, -z.imag))
    return np.array(vals, dtype=complex)


def _deflated(B, C, D, r):
    # lambda^3 + B lambda^2 + C lambda + D = (lambda - r)(lambda^2 + e lambda + f)
    e = B + r
    f = C + e * r
    disc = e * e - 4.0 * f
    if disc < 0:
        re = -e / 2.0
        im = math.sqrt(-disc) / 2.0
        return [complex(r), complex(re, im), complex(re, -im)]
    sq = math.sqrt(disc)
    # numerically stable quadratic roots
    t = -0.5 * (e + math.copysign(sq, e)) if e != 0 else 0.5 * sq
    if t == 0:
        x1 = x2 = 0.0
    else:
        x1, x2 = t, f / t
    poly = (1.0, B, C, D)
    return [complex(r), complex(_polish(poly, x1)), complex(_polish(poly, x2))]


@dataclass(frozen=True)
class TestFunctionValues:
    """``fold = det J``; ``hopf = a1 a2 - a0`` (admissible when ``a1 > 0``)."""

    fold: float
    hopf: float
    hopf_admissible: bool

    __test__ = False  # not a pytest class


def test_functions(J) -> TestFunctionValues:
    a2, a1, a0 = char_poly(J)
    return TestFunctionValues(fold=det3(J), hopf=float(a1 * a2 - a0), hopf_admissible=bool(a1 > 0))


test_functions.__test__ = False
