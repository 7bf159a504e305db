"""Transversality of fixed-height planes and PL Morse critical points of the height."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import SurfaceMesh

THETA_TOL = 1e-3
SOS_SCALE = 1e-12


class BoundaryVertexError(ValueError):
    """Raised for a vertex without a full triangle fan."""

    kind = "boundary-vertex"


class TiePerturbationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CriticalPoint:
    """A critical vertex of the height function, refined by a 2-ring fit.

    ``kind`` is ``min``, ``max``, ``saddle`` or ``multisaddle``; ``geometric``
    is ``isola-type`` for extrema, ``saddle-type`` for saddles and ``other``
    for multisaddles (which also record their link sign-change count).
    """

    location: np.ndarray
    kind: str
    geometric: str
    residual: float
    vertex: int
    height: float
    sign_changes: int = 0

    def to_dict(self) -> dict:
        return {
            "location": [float(v) for v in self.location],
            "kind": self.kind,
            "class": self.geometric,
            "residual": float(self.residual),
            "vertex": int(self.vertex),
            "height": float(self.height),
            "sign_changes": int(self.sign_changes),
        }


_GEOMETRIC = {"min": "isola-type", "max": "isola-type", "saddle": "saddle-type",
              "multisaddle": "other"}


def vertex_normals(mesh: SurfaceMesh) -> np.ndarray:
    """Area-weighted vertex normals (unnormalised cross products summed)."""
    v = mesh.vertices[mesh.faces]
    fn = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    out = np.zeros_like(mesh.vertices)
    for c in range(3):
        np.add.at(out, mesh.faces[:, c], fn)
    return out


def normal_axis_angles(mesh: SurfaceMesh, axis: int = 2) -> np.ndarray:
    """Angle between each vertex normal and the coordinate axis (radians)."""
    n = vertex_normals(mesh)
    norm = np.linalg.norm(n, axis=1)
    cos = np.abs(n[:, axis]) / np.where(norm > 0, norm, 1.0)
    return np.arccos(np.clip(cos, 0.0, 1.0))


def transversality_check(mesh: SurfaceMesh, vertex: int, axis: int = 2,
                         theta_tol: float = THETA_TOL) -> str:
    """``"degenerate"`` if the tangent plane at ``vertex`` is a fixed-height plane.

    Raises
    ------
    BoundaryVertexError
        If the vertex has no complete triangle fan.
    """
    if mesh.boundary_vertex_mask()[vertex]:
        raise BoundaryVertexError(f"vertex {vertex} is on the mesh boundary")
    fan = mesh.faces[mesh.vertex_faces()[vertex]]
    v = mesh.vertices[fan]
    n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]).sum(axis=0)
    cos = abs(n[axis]) / np.linalg.norm(n)
    angle = float(np.arccos(min(1.0, cos)))
    return "degenerate" if angle < theta_tol else "transversal"


def degenerate_vertices(mesh: SurfaceMesh, axis: int = 2, theta_tol: float = THETA_TOL) -> np.ndarray:
    """Indices of interior vertices whose tangent plane is a fixed-height plane."""
    ang = normal_axis_angles(mesh, axis)
    return np.flatnonzero((ang < theta_tol) & ~mesh.boundary_vertex_mask())


def perturbed_heights(mesh: SurfaceMesh, axis: int = 2) -> np.ndarray:
    """Heights with the index-proportional tie-breaking shift."""
    h = mesh.vertices[:, axis]
    rng = float(h.max() - h.min()) if len(h) else 0.0
    hp = h + np.arange(len(h)) * SOS_SCALE * max(rng, 1e-300)
    return hp


def _link_sign_changes(hp, v, ring):
    s = hp[ring] > hp[v]
    return int(np.count_nonzero(s != np.roll(s, 1))), bool(s[0])


def _two_ring(mesh, v):
    nb = mesh.neighbors()
    ring1 = nb[v]
    ring2 = set(ring1)
    for u in ring1:
        ring2 |= nb[u]
    ring2.discard(v)
    return sorted(ring2)


def _refine(mesh, v, normal, axis):
    """Least-squares quadratic fit of the height over the 2-ring tangent chart.

    Returns (location, rms residual).
    """
    p0 = mesh.vertices[v]
    idx = _two_ring(mesh, v)
    P = mesh.vertices[idx] - p0
    n = normal / np.linalg.norm(normal)
    e1 = np.cross(n, np.eye(3)[np.argmin(np.abs(n))])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    u1, u2 = P @ e1, P @ e2
    A = np.stack([np.ones_like(u1), u1, u2, u1 * u1, u1 * u2, u2 * u2], axis=1)
    if len(idx) < 6:
        return p0.copy(), np.inf
    h = P[:, axis]
    coef, *_ = np.linalg.lstsq(A, h, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - h) ** 2)))
    H = np.array([[2 * coef[3], coef[4]], [coef[4], 2 * coef[5]]])
    g = coef[1:3]
    try:
        u = -np.linalg.solve(H, g)
    except np.linalg.LinAlgError:
        return p0.copy(), resid
    reach = np.sqrt(np.max(u1 * u1 + u2 * u2))
    if not np.all(np.isfinite(u)) or np.hypot(*u) > reach:
        return p0.copy(), resid
    # lift back onto the fitted surface along the normal
    w = P @ n
    wcoef, *_ = np.linalg.lstsq(A, w, rcond=None)
    q = np.array([1.0, u[0], u[1], u[0] ** 2, u[0] * u[1], u[1] ** 2])
    return p0 + u[0] * e1 + u[1] * e2 + (q @ wcoef) * n, resid


def pl_critical_points(mesh: SurfaceMesh, axis: int = 2) -> list[CriticalPoint]:
    """Critical vertices of the piecewise-linear height function.

    Link sign changes of ``h(neighbour) - h(vertex)``: 0 gives an extremum,
    2 a regular vertex, 4 a saddle and more a multisaddle.  Boundary
    vertices are skipped.
    """
    hp = perturbed_heights(mesh, axis)
    if len(np.unique(hp)) != len(hp):
        raise TiePerturbationError("height ties remain after perturbation")
    normals = vertex_normals(mesh)
    out = []
    bmask = mesh.boundary_vertex_mask()
    for v in range(len(mesh.vertices)):
        if bmask[v]:
            continue
        ring = mesh.link(v)
        if ring is None:
            continue
        changes, above = _link_sign_changes(hp, v, ring)
        if changes == 2:
            continue
        if changes == 0:
            kind = "min" if above else "max"
        elif changes == 4:
            kind = "saddle"
        else:
            kind = "multisaddle"
        loc, resid = _refine(mesh, v, normals[v], axis)
        out.append(CriticalPoint(loc, kind, _GEOMETRIC[kind], resid, v,
                                 float(mesh.vertices[v, axis]), changes))
    return out


def morse_counts(points) -> dict:
    c = {"min": 0, "saddle": 0, "max": 0, "multisaddle": 0}
    for p in points:
        c[p.kind] += 1
    return c


def morse_sum(points) -> int:
    """``#min - #saddle + #max`` (a multisaddle with 2k sign changes counts 1 - k)."""
    total = 0
    for p in points:
        if p.kind in ("min", "max"):
            total += 1
        else:
            total -= p.sign_changes // 2 - 1
    return total
