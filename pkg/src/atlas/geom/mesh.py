"""Triangulated surfaces and polylines in three-parameter space, with I/O.

Mesh files are a subset of Wavefront OBJ: ``v x y z`` and ``f i j k`` with
1-based indices. Sharp-fold polylines follow a ``g sharp-fold`` line as
``l i j ...`` elements referencing mesh vertices. ``# key=value`` comments
carry generator metadata.

Polyline files are CSV ``curve_id,seq,x,y,z``; every curve is preceded by a
``# closed=<bool> role=<tag> curve_id=<k>`` comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..io import atomic_write_text

ROLES = ("slice", "codim2", "sc-boundary")
MIN_TRIANGLE_AREA = 1e-14


class MeshFormatError(ValueError):
    pass


class MeshValidationError(ValueError):
    pass


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


@dataclass
class Polyline3:
    points: np.ndarray
    closed: bool = False
    role: str = "slice"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if self.closed and len(pts) > 2 and np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) < 2:
            raise ValueError("a polyline needs at least 2 vertices")
        if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise ValueError("consecutive polyline vertices must be distinct")
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}")
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)

    @property
    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        a = self.points
        b = np.roll(a, -1, axis=0) if self.closed else a[1:]
        return (a if self.closed else a[:-1]), b

    @property
    def length(self) -> float:
        a, b = self.segments
        return float(np.linalg.norm(b - a, axis=1).sum())

    def distance_to(self, q) -> float:
        """Euclidean distance from point ``q`` to the polyline."""
        return float(points_to_segments_distance(np.atleast_2d(q), *self.segments)[0])


def points_to_segments_distance(q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each row of ``q`` to the nearest of the segments ``a[k]b[k]``."""
    q = np.asarray(q, float)
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom = np.where(denom > 0, denom, 1.0)
    out = np.empty(len(q))
    for s in range(0, len(q), 512):
        qq = q[s:s + 512, None, :]
        t = np.einsum("qkj,kj->qk", qq - a[None], ab) / denom[None]
        t = np.clip(t, 0.0, 1.0)
        proj = a[None] + t[..., None] * ab[None]
        out[s:s + 512] = np.sqrt(((qq - proj) ** 2).sum(-1)).min(axis=1)
    return out


def hausdorff(p: Polyline3, q: Polyline3) -> float:
    """Symmetric Hausdorff distance between vertex sets and segments."""
    d1 = points_to_segments_distance(p.points, *q.segments).max()
    d2 = points_to_segments_distance(q.points, *p.segments).max()
    return float(max(d1, d2))


class SurfaceMesh:
    """Triangle mesh with optional sharp-fold vertex chains."""

    def __init__(self, vertices, faces, sharp_folds=(), meta=None, validate=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 3)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64).reshape(-1, 3)
        self.sharp_folds = [np.asarray(s, dtype=np.int64) for s in sharp_folds]
        self.meta = dict(meta or {})
        self._cache = {}
        if validate:
            self.validate()

    # -- structure ---------------------------------------------------------

    def validate(self) -> None:
        nv = len(self.vertices)
        if not np.all(np.isfinite(self.vertices)):
            raise MeshValidationError("non-finite vertex coordinates")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= nv):
            raise MeshValidationError("face index out of range")
        for s in self.sharp_folds:
            if s.size and (s.min() < 0 or s.max() >= nv):
                raise MeshValidationError("sharp-fold index out of range")
        if self.faces.size:
            small = self.triangle_areas() <= MIN_TRIANGLE_AREA
            if np.any(small):
                raise MeshValidationError(f"{int(small.sum())} degenerate triangles")
            if self.edge_face_counts().max() > 2:
                raise MeshValidationError("edge shared by more than two triangles")

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def triangle_areas(self) -> np.ndarray:
        v = self.vertices[self.faces]
        return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def _edges(self):
        if "edges" not in self._cache:
            f = self.faces
            e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
            e.sort(axis=1)
            uniq, inv, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
            self._cache["edges"] = (uniq, inv.reshape(3, -1).T, counts)
        return self._cache["edges"]

    @property
    def edges(self) -> np.ndarray:
        return self._edges()[0]

    def edge_face_counts(self) -> np.ndarray:
        return self._edges()[2]

    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    def median_edge_length(self) -> float:
        return float(np.median(self.edge_lengths()))

    def boundary_vertex_mask(self) -> np.ndarray:
        if "bmask" not in self._cache:
            uniq, _, counts = self._edges()
            mask = np.zeros(len(self.vertices), dtype=bool)
            mask[uniq[counts == 1].ravel()] = True
            # vertices in no triangle have no full fan either
            used = np.zeros(len(self.vertices), dtype=bool)
            used[self.faces.ravel()] = True
            mask |= ~used
            self._cache["bmask"] = mask
        return self._cache["bmask"]

    def vertex_faces(self) -> list[list[int]]:
        if "vf" not in self._cache:
            vf = [[] for _ in range(len(self.vertices))]
            for k, tri in enumerate(self.faces):
                for v in tri:
                    vf[v].append(k)
            self._cache["vf"] = vf
        return self._cache["vf"]

    def neighbors(self) -> list[set]:
        if "nbr" not in self._cache:
            nb = [set() for _ in range(len(self.vertices))]
            for a, b in self.edges:
                nb[a].add(int(b))
                nb[b].add(int(a))
            self._cache["nbr"] = nb
        return self._cache["nbr"]

    def link(self, v: int) -> list[int] | None:
        """Cyclically ordered link of an interior vertex (None on the boundary)."""
        if self.boundary_vertex_mask()[v]:
            return None
        adj: dict[int, list[int]] = {}
        for k in self.vertex_faces()[v]:
            a, b = (int(u) for u in self.faces[k] if u != v)
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        if any(len(x) != 2 for x in adj.values()):
            return None  # not a disc fan
        start = min(adj)
        ring = [start]
        prev, cur = start, adj[start][0]
        while cur != start:
            ring.append(cur)
            a, b = adj[cur]
            prev, cur = cur, (b if a == prev else a)
            if len(ring) > len(adj):
                return None
        return ring if len(ring) == len(adj) else None

    def face_components(self) -> np.ndarray:
        """Connected-component label per face (sharing an edge)."""
        if "fcomp" not in self._cache:
            from scipy.sparse import coo_matrix
            from scipy.sparse.csgraph import connected_components

            _, inv, counts = self._edges()
            nf = len(self.faces)
            fid = np.repeat(np.arange(nf)[:, None], 3, axis=1).ravel()
            eid = inv.ravel()
            order = np.argsort(eid, kind="stable")
            e_sorted, f_sorted = eid[order], fid[order]
            same = e_sorted[1:] == e_sorted[:-1]
            a, b = f_sorted[:-1][same], f_sorted[1:][same]
            g = coo_matrix((np.ones(len(a)), (a, b)), shape=(nf, nf))
            _, lab = connected_components(g, directed=False)
            self._cache["fcomp"] = lab
        return self._cache["fcomp"]

    def vertex_components(self) -> np.ndarray:
        lab = np.full(len(self.vertices), -1, dtype=np.int64)
        fl = self.face_components()
        for c in range(3):
            lab[self.faces[:, c]] = fl
        return lab

    def euler_characteristic(self) -> int:
        used = np.unique(self.faces.ravel()).size
        return int(used - len(self.edges) + len(self.faces))

    def sharp_fold_polylines(self) -> list[Polyline3]:
        return [Polyline3(self.vertices[s], closed=False, role="codim2") for s in self.sharp_folds]

    @classmethod
    def concatenate(cls, meshes, meta=None) -> "SurfaceMesh":
        verts, faces, folds = [], [], []
        off = 0
        for m in meshes:
            verts.append(m.vertices)
            faces.append(m.faces + off)
            folds.extend(s + off for s in m.sharp_folds)
            off += len(m.vertices)
        return cls(np.concatenate(verts), np.concatenate(faces), folds, meta=meta)

    # -- I/O ---------------------------------------------------------------

    def to_obj_text(self) -> str:
        lines = [f"# {k}={v}" for k, v in sorted(self.meta.items())]
        lines += [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in self.vertices]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in self.faces]
        if self.sharp_folds:
            lines.append("g sharp-fold")
            lines += ["l " + " ".join(str(int(i) + 1) for i in s) for s in self.sharp_folds]
        return "\n".join(lines) + "\n"

    def write_obj(self, path) -> None:
        atomic_write_text(path, self.to_obj_text())

    @classmethod
    def from_obj_text(cls, text: str) -> "SurfaceMesh":
        verts, faces, folds, meta = [], [], [], {}
        group = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body and " " not in body.split("=", 1)[0]:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            tag, *rest = line.split()
            try:
                if tag == "v":
                    if len(rest) != 3:
                        raise ValueError("expected 3 coordinates")
                    verts.append([float(x) for x in rest])
                elif tag == "f":
                    if len(rest) != 3:
                        raise ValueError("only triangles are supported")
                    faces.append([int(x.split("/")[0]) - 1 for x in rest])
                elif tag == "g":
                    group = " ".join(rest)
                elif tag == "l":
                    if group != "sharp-fold":
                        continue
                    folds.append([int(x) - 1 for x in rest])
                else:
                    raise ValueError(f"unsupported element {tag!r}")
            except ValueError as exc:
                raise MeshFormatError(f"line {lineno}: {exc}") from None
        if not verts or not faces:
            raise MeshFormatError("mesh needs at least one vertex and one face")
        try:
            return cls(np.array(verts), np.array(faces), folds, meta=meta)
        except MeshValidationError as exc:
            raise MeshFormatError(str(exc)) from None

    @classmethod
    def read_obj(cls, path) -> "SurfaceMesh":
        return cls.from_obj_text(Path(path).read_text(encoding="utf-8"))


# -- polyline CSV -------------------------------------------------------------


def polylines_to_csv(curves, comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append("curve_id,seq,x,y,z")
    for k, c in enumerate(curves):
        lines.append(f"# closed={'true' if c.closed else 'false'} role={c.role} curve_id={k}")
        for s, (x, y, z) in enumerate(c.points):
            lines.append(f"{k},{s},{_fmt(x)},{_fmt(y)},{_fmt(z)}")
    return "\n".join(lines) + "\n"


def write_polylines(path, curves, comments=()) -> None:
    atomic_write_text(path, polylines_to_csv(curves, comments))


def read_polylines(path) -> list[Polyline3]:
    text = Path(path).read_text(encoding="utf-8")
    attrs: dict[int, dict] = {}
    pts: dict[int, list] = {}
    pending = None
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            kv = dict(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
            if "closed" in kv:
                pending = kv
                if "curve_id" in kv:
                    attrs[int(kv["curve_id"])] = kv
            continue
        if not header_seen:
            if line.replace(" ", "") != "curve_id,seq,x,y,z":
                raise MeshFormatError(f"line {lineno}: missing polyline CSV header")
            header_seen = True
            continue
        try:
            cid, _, x, y, z = line.split(",")
            cid = int(cid)
            pts.setdefault(cid, []).append([float(x), float(y), float(z)])
        except ValueError:
            raise MeshFormatError(f"line {lineno}: malformed polyline row") from None
        if cid not in attrs and pending is not None:
            attrs[cid] = pending
    curves = []
    for cid in sorted(pts):
        kv = attrs.get(cid, {})
        curves.append(
            Polyline3(
                np.array(pts[cid]),
                closed=kv.get("closed", "false") == "true",
                role=kv.get("role", "slice"),
            )
        )
    return curves
