"""Structured meshes of parametrised surfaces: sphere, torus, tubes, pants + disc."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from ..geom.mesh import SurfaceMesh

TUBE_EPS = (-0.5, 0.5)


def grid_faces(nu: int, nv: int, wrap_u: bool, wrap_v: bool) -> np.ndarray:
    """Triangles of an ``nu x nv`` vertex grid (index ``i * nv + j``), one diagonal per quad."""
    faces = []
    iu = nu if wrap_u else nu - 1
    jv = nv if wrap_v else nv - 1
    for i in range(iu):
        for j in range(jv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            faces.append((a, b, c))
            faces.append((a, c, d))
    return np.array(faces, dtype=np.int64)


def uv_sphere(n_lat: int = 64, n_lon: int = 128, radius: float = 1.0) -> SurfaceMesh:
    """Latitude-longitude sphere with one vertex at each pole."""
    theta = np.linspace(0, np.pi, n_lat + 1)[1:-1]
    phi = np.linspace(0, 2 * np.pi, n_lon, endpoint=False)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    ring = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), -np.cos(T)], -1).reshape(-1, 3)
    verts = np.concatenate([[[0, 0, -1.0]], ring, [[0, 0, 1.0]]]) * radius
    nr = len(theta)
    faces = list(grid_faces(nr, n_lon, False, True) + 1)
    south, north = 0, len(verts) - 1
    for j in range(n_lon):
        jn = (j + 1) % n_lon
        faces.append((south, 1 + jn, 1 + j))
        last = 1 + (nr - 1) * n_lon
        faces.append((north, last + j, last + jn))
    return SurfaceMesh(verts, np.array(faces), meta={"kind": "sphere", "n_lat": n_lat,
                                                     "n_lon": n_lon, "radius": radius})


def torus(R: float = 1.0, r: float = 0.4, nu: int = 64, nv: int = 32) -> SurfaceMesh:
    """Torus standing upright: its axis is horizontal, so the height has 4 critical points.

    ``nu`` must be a multiple of 4 and ``nv`` even so the critical points are vertices.
    """
    if nu % 4 or nv % 2:
        raise ValueError("nu must be a multiple of 4 and nv even")
    u = 2 * np.pi * np.arange(nu) / nu
    v = 2 * np.pi * np.arange(nv) / nv
    U, V = np.meshgrid(u, v, indexing="ij")
    rad = R + r * np.cos(V)
    verts = np.stack([rad * np.cos(U), r * np.sin(V), rad * np.sin(U)], -1).reshape(-1, 3)
    return SurfaceMesh(verts, grid_faces(nu, nv, True, True),
                       meta={"kind": "torus", "R": R, "r": r, "nu": nu, "nv": nv})


def tube_half_length(eps):
    return 0.3 + 0.1 * np.asarray(eps)


def tube_point(theta, eps, d, center=0.0):
    """Point of the elongated tube: half-length ``L(eps)`` along lambda1, width ``d``."""
    L = tube_half_length(eps)
    return np.stack([center + L * np.cos(theta), 0.5 * d * np.sin(theta),
                     np.broadcast_to(eps, np.shape(theta))], -1)


def thin_tube(d: float = 1e-4, n_theta: int = 64, n_eps: int = 41,
              eps_range=TUBE_EPS, center: float = 0.0) -> SurfaceMesh:
    """Flattened tube whose cross-sections are isolas of width ``d``.

    The two ends of each cross-section (``theta = 0`` and ``theta = pi``)
    form the sharp-fold vertex chains attached to the mesh.
    """
    if n_theta % 2:
        raise ValueError("n_theta must be even")
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    eps = np.linspace(*eps_range, n_eps)
    E, T = np.meshgrid(eps, theta, indexing="ij")
    verts = tube_point(T, E, d, center).reshape(-1, 3)
    faces = grid_faces(n_eps, n_theta, False, True)
    folds = [np.arange(n_eps) * n_theta, np.arange(n_eps) * n_theta + n_theta // 2]
    kind = "thin-tube" if d < 0.1 else "cylinder"
    return SurfaceMesh(verts, faces, folds, meta={"kind": kind, "d": d, "n_theta": n_theta,
                                                  "n_eps": n_eps})


def cylinder(n_theta: int = 64, n_eps: int = 41) -> SurfaceMesh:
    """Round tube (no sharp folds): every level set is one circle."""
    m = thin_tube(d=0.6, n_theta=n_theta, n_eps=n_eps)
    return SurfaceMesh(m.vertices, m.faces, meta={"kind": "cylinder", "n_theta": n_theta,
                                                  "n_eps": n_eps})


# pants + disc -------------------------------------------------------------

def pants_height(x, y):
    """Two-well height: minima at (+-1/sqrt 2, 0), saddle at the origin."""
    return x ** 4 - x * x + y * y


def disc_height(x, y):
    """Tilted plane capping the pants; its trace on the pants is the shared curve."""
    return 0.1 + 0.03 * x


def _boundary_radius(phi):
    c, s = np.cos(phi), np.sin(phi)
    g = lambda r: pants_height(r * c, r * s) - disc_height(r * c, r * s)  # noqa: E731
    return brentq(g, 1e-9, 3.0, xtol=1e-15)


def _polar_disc(height, n_r, n_phi):
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    rho = np.array([_boundary_radius(p) for p in phi])
    t = np.arange(1, n_r + 1) / n_r
    T, P = np.meshgrid(t, phi, indexing="ij")
    Rr = T * rho[None, :]
    x, y = Rr * np.cos(P), Rr * np.sin(P)
    ring = np.stack([x, y, height(x, y)], -1).reshape(-1, 3)
    verts = np.concatenate([[[0.0, 0.0, float(height(0.0, 0.0))]], ring])
    faces = list(grid_faces(n_r, n_phi, False, True) + 1)
    for j in range(n_phi):
        faces.append((0, 1 + j, 1 + (j + 1) % n_phi))
    return verts, np.array(faces)


def shared_curve(n: int = 256) -> np.ndarray:
    """Points of the curve where the pants and the disc meet."""
    phi = 2 * np.pi * np.arange(n) / n
    rho = np.array([_boundary_radius(p) for p in phi])
    x, y = rho * np.cos(phi), rho * np.sin(phi)
    return np.stack([x, y, disc_height(x, y)], -1)


def shared_curve_point(phi: float) -> np.ndarray:
    rho = _boundary_radius(phi)
    x, y = rho * np.cos(phi), rho * np.sin(phi)
    return np.array([x, y, disc_height(x, y)])


def pants_plus_disc(n_r: int = 40, n_phi: int = 128) -> SurfaceMesh:
    """Pair of pants and a disc as two mesh components sharing their boundary curve."""
    vp, fp = _polar_disc(pants_height, n_r, n_phi)
    vd, fd = _polar_disc(disc_height, n_r, n_phi)
    pants = SurfaceMesh(vp, fp)
    disc = SurfaceMesh(vd, fd)
    return SurfaceMesh.concatenate([pants, disc], meta={"kind": "pants-plus-disc",
                                                        "n_r": n_r, "n_phi": n_phi})
