"""Analytic normal forms ``F(lambda1, lambda2, eps) = 0`` with known ground truth.

Coordinates are ``(lambda1, lambda2, eps)``; for the cusp they are
``(lambda, eps1, eps2)``.  Every surface carries an analytic gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IMPLICIT_KINDS = ("isola-plus", "isola-minus", "saddle", "cusp", "two-well", "two-caps", "sphere")
PARAMETRIC_KINDS = ("thin-tube", "cylinder", "torus", "pants-plus-disc")
KINDS = IMPLICIT_KINDS + PARAMETRIC_KINDS

CAP_HEIGHTS = (0.2, 0.1)
CAP_CENTERS = ((-0.5, 0.0), (0.5, 0.0))
CAP_CURVATURE = 4.0
CAP_FLOOR = -0.3


def _split(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1], p[..., 2]


def _isola_plus(p):
    x, y, e = _split(p)
    return e + x * x + y * y, np.stack([2 * x, 2 * y, np.ones_like(e)], -1)


def _isola_minus(p):
    x, y, e = _split(p)
    return e - x * x - y * y, np.stack([-2 * x, -2 * y, np.ones_like(e)], -1)


def _saddle(p):
    x, y, e = _split(p)
    return e - x * x + y * y, np.stack([-2 * x, 2 * y, np.ones_like(e)], -1)


def _cusp(p):
    lam, e1, e2 = _split(p)
    return lam ** 3 + lam * e2 + e1, np.stack([3 * lam * lam + e2, np.ones_like(e1), lam], -1)


def _two_well(p):
    x, y, e = _split(p)
    return (e - x ** 4 + x * x - y * y,
            np.stack([-4 * x ** 3 + 2 * x, -2 * y, np.ones_like(e)], -1))


def _two_caps(p):
    x, y, e = _split(p)
    caps = []
    grads = []
    for h, (cx, cy) in zip(CAP_HEIGHTS, CAP_CENTERS):
        caps.append(h - CAP_CURVATURE * ((x - cx) ** 2 + (y - cy) ** 2))
        grads.append((2 * CAP_CURVATURE * (x - cx), 2 * CAP_CURVATURE * (y - cy)))
    top = caps[0] >= caps[1]
    gx = np.where(top, grads[0][0], grads[1][0])
    gy = np.where(top, grads[0][1], grads[1][1])
    return e - np.maximum(caps[0], caps[1]), np.stack([gx, gy, np.ones_like(e)], -1)


def _sphere(p):
    x, y, e = _split(p)
    return x * x + y * y + e * e - 1.0, np.stack([2 * x, 2 * y, 2 * e], -1)


_FIELDS = {
    "isola-plus": _isola_plus,
    "isola-minus": _isola_minus,
    "saddle": _saddle,
    "cusp": _cusp,
    "two-well": _two_well,
    "two-caps": _two_caps,
    "sphere": _sphere,
}

DEFAULT_BOXES = {
    "isola-plus": ((-1, 1), (-1, 1), (-1, 1)),
    "isola-minus": ((-1, 1), (-1, 1), (-1, 1)),
    "saddle": ((-1, 1), (-1, 1), (-1, 1)),
    "cusp": ((-2, 2), (-3, 3), (-4, 1)),
    "two-well": ((-1.5, 1.5), (-1, 1), (-0.5, 0.2)),
    "two-caps": ((-1, 1), (-0.6, 0.6), (CAP_FLOOR, 0.3)),
    "sphere": ((-1.25, 1.25), (-1.25, 1.25), (-1.25, 1.25)),
}

# Constructed critical points of the height (last coordinate).
GROUND_TRUTH = {
    "isola-plus": {"critical": [((0.0, 0.0, 0.0), "max")]},
    "isola-minus": {"critical": [((0.0, 0.0, 0.0), "min")]},
    "saddle": {"critical": [((0.0, 0.0, 0.0), "saddle")]},
    "two-well": {
        "critical": [((-2 ** -0.5, 0.0, -0.25), "min"), ((2 ** -0.5, 0.0, -0.25), "min"),
                     ((0.0, 0.0, 0.0), "saddle")],
        "births": [-0.25, -0.25],
        "merges": [0.0],
        "topology": "CaseII",
    },
    "two-caps": {
        "critical": [((*c, h), "max") for h, c in zip(CAP_HEIGHTS, CAP_CENTERS)],
        "deaths": list(CAP_HEIGHTS),
        "topology": "CaseIII",
    },
    "sphere": {"critical": [((0.0, 0.0, -1.0), "min"), ((0.0, 0.0, 1.0), "max")],
               "area": 4 * np.pi},
    "cusp": {"cusp": (0.0, 0.0, 0.0), "discriminant": "27*eps1**2 + 4*eps2**3 = 0"},
    "torus": {"counts": {"min": 1, "saddle": 2, "max": 1}},
    "cylinder": {"topology": "CaseI"},
    "thin-tube": {"topology": "CaseI", "sharp_folds": 2},
    "pants-plus-disc": {"topology": "CaseIIb"},
}


@dataclass(frozen=True)
class AnalyticSurface:
    """Implicit surface ``F = 0`` in a bounding box."""

    kind: str
    box: tuple = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _FIELDS:
            raise ValueError(f"unknown implicit surface kind {self.kind!r}; "
                             f"choose from {', '.join(_FIELDS)}")
        box = self.box if self.box is not None else DEFAULT_BOXES[self.kind]
        box = tuple((float(lo), float(hi)) for lo, hi in box)
        if len(box) != 3 or any(hi <= lo for lo, hi in box):
            raise ValueError("box must be three (lo, hi) pairs with lo < hi")
        object.__setattr__(self, "box", box)

    def __call__(self, p):
        return _FIELDS[self.kind](p)[0]

    def gradient(self, p) -> np.ndarray:
        return _FIELDS[self.kind](p)[1]

    @property
    def ground_truth(self) -> dict:
        return GROUND_TRUTH.get(self.kind, {})


def evaluate(surface: AnalyticSurface, point) -> float:
    """Residual ``F(point)``."""
    return float(surface(np.asarray(point, dtype=float)))
