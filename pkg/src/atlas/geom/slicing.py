"""Level sets of the height function on a triangle mesh (marching triangles)."""

from __future__ import annotations

import numpy as np

from .mesh import Polyline3, SurfaceMesh
from .morse import SOS_SCALE

_EDGES = ((0, 1), (1, 2), (2, 0))


def _chain(pairs):
    """Chain segments given as pairs of edge keys into (key list, tri list, closed)."""
    adj: dict = {}
    for tri, (a, b) in pairs:
        adj.setdefault(a, []).append((b, tri))
        adj.setdefault(b, []).append((a, tri))
    seen_tri = set()
    out = []

    def walk(start):
        keys, tris = [start], []
        cur = start
        while True:
            step = next(((k, t) for k, t in adj[cur] if t not in seen_tri), None)
            if step is None:
                break
            nxt, tri = step
            seen_tri.add(tri)
            tris.append(tri)
            if nxt == start:
                return keys, tris, True
            keys.append(nxt)
            cur = nxt
        return keys, tris, False

    # open chains start at edges used by a single segment (mesh boundary)
    for k in sorted(adj):
        if len(adj[k]) == 1 and adj[k][0][1] not in seen_tri:
            out.append(walk(k))
    for k in sorted(adj):
        if any(t not in seen_tri for _, t in adj[k]):
            out.append(walk(k))
    return out


def safe_level(heights: np.ndarray, level: float) -> float:
    """Shift ``level`` off exact vertex heights by multiples of 1e-12 * range."""
    rng = float(heights.max() - heights.min()) if len(heights) else 1.0
    step = SOS_SCALE * max(rng, 1e-300)
    lv = float(level)
    k = 0
    while np.any(heights == lv):
        k += 1
        lv = float(level) + k * step
    return lv


def slice_level(mesh: SurfaceMesh, level: float, axis: int = 2,
                heights: np.ndarray | None = None) -> list[Polyline3]:
    """Polylines of ``{height = level}``; loops come back closed.

    Each polyline records the triangles it crosses in ``meta["triangles"]``.
    """
    if mesh.n_faces == 0:
        return []
    h = mesh.vertices[:, axis] if heights is None else heights
    lv = safe_level(h, level)
    above = h > lv
    fa = above[mesh.faces]
    cross = fa.any(axis=1) & ~fa.all(axis=1)
    tri_ids = np.flatnonzero(cross)
    if tri_ids.size == 0:
        return []
    pairs = []
    for t in tri_ids:
        f = mesh.faces[t]
        ks = []
        for i, j in _EDGES:
            a, b = int(f[i]), int(f[j])
            if above[a] != above[b]:
                ks.append((a, b) if a < b else (b, a))
        pairs.append((int(t), (ks[0], ks[1])))
    out = []
    V = mesh.vertices
    for keys, tris, closed in _chain(pairs):
        if len(keys) < 2:
            continue
        ka = np.array(keys)
        ha, hb = h[ka[:, 0]], h[ka[:, 1]]
        w = ((lv - ha) / (hb - ha))[:, None]
        pts = V[ka[:, 0]] + w * (V[ka[:, 1]] - V[ka[:, 0]])
        pts[:, axis] = level
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        pts = pts[keep]
        if closed and len(pts) > 1 and np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) < 2:
            continue
        out.append(Polyline3(pts, closed=closed and len(pts) > 2, role="slice",
                             meta={"eps": float(level), "triangles": tris}))
    return out
