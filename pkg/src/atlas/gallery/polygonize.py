"""Polygonization of implicit surfaces by marching tetrahedra.

The box is split into cubes and every cube into six tetrahedra sharing the
main diagonal (Kuhn split).  The split is conforming across cube faces, so
vertices created on shared edges are shared and the mesh is watertight away
from the box faces.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..geom.mesh import MIN_TRIANGLE_AREA, SurfaceMesh
from .surfaces import AnalyticSurface

_CUBE = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)])
_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def _kuhn_tets():
    tets = []
    for perm in _PERMS:
        pos = np.zeros(3, dtype=int)
        verts = [pos.copy()]
        for ax in perm:
            pos[ax] += 1
            verts.append(pos.copy())
        tets.append([int(v[0] * 4 + v[1] * 2 + v[2]) for v in verts])
    return np.array(tets)


_TETS = _kuhn_tets()


def _edge_roots(F, pa, pb, fa, iters=54):
    """Bisection along segments ``pa -> pb`` where ``F`` changes sign."""
    lo = np.zeros(len(pa))
    hi = np.ones(len(pa))
    neg_a = fa < 0
    d = pb - pa
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = F(pa + mid[:, None] * d)
        same = (fm < 0) == neg_a
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    t = 0.5 * (lo + hi)
    return pa + t[:, None] * d


def _weld(verts, faces, tol):
    pairs = cKDTree(verts).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return verts, faces
    n = len(verts)
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    # representative = first vertex of each class, keeps ordering stable
    first = np.full(lab.max() + 1, -1)
    for v in range(n - 1, -1, -1):
        first[lab[v]] = v
    keep = np.unique(first)
    remap = np.searchsorted(keep, first[lab])
    return verts[keep], remap[faces]


def _clean(verts, faces):
    f = faces
    ok = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
    f = f[ok]
    v = verts[f]
    area = 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)
    f = f[area > MIN_TRIANGLE_AREA]
    # drop duplicated faces (same vertex set) that welding can produce
    key = np.sort(f, axis=1)
    _, idx = np.unique(key, axis=0, return_index=True)
    f = f[np.sort(idx)]
    used = np.unique(f.ravel())
    remap = np.full(len(verts), -1)
    remap[used] = np.arange(len(used))
    return verts[used], remap[f]


def sample_mesh(surface: AnalyticSurface, resolution: int = 32) -> SurfaceMesh:
    """Triangulate ``{F = 0}`` inside the surface box.

    ``resolution`` is the number of cubes per axis (at least 8).  Vertices are
    placed on tetrahedron edges by bisection, so ``|F| < 1e-9`` at every
    vertex; triangles are oriented along ``grad F``.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    n = int(resolution)
    axes = [np.linspace(lo, hi, n + 1) for lo, hi in surface.box]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    vals = surface(nodes)
    inside = vals < 0

    def nid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    ii, jj, kk = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()
    corner_ids = np.stack([nid(ii + c[0], jj + c[1], kk + c[2]) for c in _CUBE], axis=1)
    cin = inside[corner_ids]
    mixed = cin.any(axis=1) & ~cin.all(axis=1)
    corner_ids = corner_ids[mixed]
    if len(corner_ids) == 0:
        return SurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int),
                           meta={"kind": surface.kind, "resolution": n})
    tets = corner_ids[:, _TETS].reshape(-1, 4)
    tin = inside[tets]
    cnt = tin.sum(axis=1)
    tets, tin, cnt = tets[(cnt > 0) & (cnt < 4)], tin[(cnt > 0) & (cnt < 4)], cnt[(cnt > 0) & (cnt < 4)]

    edge_keys = []
    tris = []
    # one inside (or one outside): a single triangle around the lone vertex
    for lone_inside in (True, False):
        sel = cnt == (1 if lone_inside else 3)
        t, m = tets[sel], tin[sel]
        lone = np.argmax(m if lone_inside else ~m, axis=1)
        others = np.array([[o for o in range(4) if o != l] for l in range(4)])[lone]
        a = t[np.arange(len(t)), lone]
        for o in range(3):
            b = t[np.arange(len(t)), others[:, o]]
            edge_keys.append(np.sort(np.stack([a, b], 1), axis=1))
        tris.append(len(t))
    # two inside: a quad split into two triangles
    sel = cnt == 2
    t, m = tets[sel], tin[sel]
    order = np.argsort(~m, axis=1, kind="stable")  # inside first
    p = t[np.arange(len(t))[:, None], order]
    in0, in1, out0, out1 = p[:, 0], p[:, 1], p[:, 2], p[:, 3]
    quad = [(in0, out0), (in0, out1), (in1, out1), (in1, out0)]
    quad_keys = [np.sort(np.stack(e, 1), axis=1) for e in quad]

    all_keys = np.concatenate(edge_keys + quad_keys)
    uniq, inv = np.unique(all_keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    pts = _edge_roots(surface, nodes[uniq[:, 0]], nodes[uniq[:, 1]], vals[uniq[:, 0]])

    faces = []
    off = 0
    for count in tris:
        idx = [inv[off + o * count: off + (o + 1) * count] for o in range(3)]
        faces.append(np.stack(idx, 1))
        off += 3 * count
    nq = len(in0)
    q = [inv[off + o * nq: off + (o + 1) * nq] for o in range(4)]
    faces.append(np.stack([q[0], q[1], q[2]], 1))
    faces.append(np.stack([q[0], q[2], q[3]], 1))
    faces = np.concatenate(faces).astype(np.int64)

    h = min(hi - lo for lo, hi in surface.box) / n
    verts, faces = _weld(pts, faces, 1e-5 * h)
    verts, faces = _clean(verts, faces)

    # orient along the gradient
    v = verts[faces]
    nrm = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    g = surface.gradient(v.mean(axis=1))
    flip = np.einsum("ij,ij->i", nrm, g) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return SurfaceMesh(verts, faces, meta={"kind": surface.kind, "resolution": n})
