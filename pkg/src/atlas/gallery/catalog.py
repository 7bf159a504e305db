"""One entry point for every gallery mesh, implicit or parametric."""

from __future__ import annotations

from ..geom.mesh import SurfaceMesh
from .parametric import cylinder, pants_plus_disc, thin_tube, torus, uv_sphere
from .polygonize import sample_mesh
from .surfaces import IMPLICIT_KINDS, KINDS, PARAMETRIC_KINDS, AnalyticSurface

DEFAULT_RESOLUTION = 32


def gallery_mesh(kind: str, resolution: int | None = None, box=None) -> SurfaceMesh:
    """Mesh of gallery surface ``kind``.

    Implicit kinds are polygonised on a ``resolution``-cube lattice of their
    box.  For parametric kinds ``resolution`` sets the number of samples
    around the main angle (rounded up to what the construction needs).
    """
    if kind not in KINDS and kind != "uv-sphere":
        raise ValueError(f"unknown gallery kind {kind!r}; choose from {', '.join(KINDS)}")
    if resolution is not None and resolution < 4:
        raise ValueError("resolution must be >= 4")
    if kind in IMPLICIT_KINDS:
        return sample_mesh(AnalyticSurface(kind, box), resolution or DEFAULT_RESOLUTION)
    if box is not None:
        raise ValueError(f"{kind!r} is parametric and takes no box")
    if kind == "uv-sphere":
        n = resolution or 64
        return uv_sphere(n_lat=n, n_lon=2 * n)
    if kind == "torus":
        n = 4 * -(-(resolution or 64) // 4)
        return torus(nu=n, nv=max(4, 2 * -(-n // 4)))
    if kind == "thin-tube":
        return thin_tube(n_theta=2 * -(-(resolution or 64) // 2))
    if kind == "cylinder":
        return cylinder(n_theta=resolution or 64)
    assert kind in PARAMETRIC_KINDS
    return pants_plus_disc(n_phi=resolution or 128)
