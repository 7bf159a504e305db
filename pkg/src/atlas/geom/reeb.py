"""Tracking level-set components across heights (Reeb graph) and topology labels.

Slices at consecutive heights are matched through the slab between them:
two components are the same track when they lie in one connected piece of
the surface inside the slab.  Intervals whose pieces are not one-to-one
are bisected until they are narrower than ``refine * range``; the event is
then placed at the interval midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .mesh import Polyline3, SurfaceMesh
from .morse import perturbed_heights
from .slicing import slice_level

EVENT_KINDS = ("birth", "death", "merge", "split", "boundary-enter", "boundary-exit")
INTERIOR_EVENTS = ("birth", "death", "merge", "split")


@dataclass
class ReebNode:
    id: int
    kind: str
    eps: float
    component: int


@dataclass
class ReebEdge:
    id: int
    src: int
    dst: int | None
    eps_lo: float
    eps_hi: float | None
    component: int
    slices: list = field(default_factory=list)


@dataclass
class ReebGraph:
    nodes: list
    edges: list
    samples: list
    flagged: list = field(default_factory=list)
    slices: list = field(default_factory=list, repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    def events(self, kind: str) -> list[ReebNode]:
        return [n for n in self.nodes if n.kind == kind]

    def incoming(self, node_id: int) -> list[ReebEdge]:
        return [e for e in self.edges if e.dst == node_id]

    def outgoing(self, node_id: int) -> list[ReebEdge]:
        return [e for e in self.edges if e.src == node_id]

    @property
    def components(self) -> list[int]:
        return sorted({e.component for e in self.edges})

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "kind": n.kind, "eps": n.eps, "component": n.component}
                      for n in self.nodes],
            "edges": [{"id": e.id, "src": e.src, "dst": e.dst, "eps_lo": e.eps_lo,
                       "eps_hi": e.eps_hi, "component": e.component,
                       "slices": [list(s) for s in e.slices]} for e in self.edges],
            "samples": [float(s) for s in self.samples],
            "flagged": list(self.flagged),
        }


@dataclass(frozen=True)
class TopologyClass:
    name: str
    description: str = ""

    def to_dict(self) -> dict:
        return {"class": self.name, "description": self.description}


class _Bands:
    """Connected pieces of the surface inside a height slab."""

    def __init__(self, mesh: SurfaceMesh, h: np.ndarray):
        self.mesh = mesh
        uniq, inv, counts = mesh._edges()
        nf = mesh.n_faces
        fid = np.repeat(np.arange(nf)[:, None], 3, axis=1).ravel()
        eid = inv.ravel()
        order = np.argsort(eid, kind="stable")
        es, fs = eid[order], fid[order]
        same = es[1:] == es[:-1]
        self.fa, self.fb = fs[:-1][same], fs[1:][same]
        shared = uniq[es[:-1][same]]
        self.slo = np.minimum(h[shared[:, 0]], h[shared[:, 1]])
        self.shi = np.maximum(h[shared[:, 0]], h[shared[:, 1]])
        # faces owning a boundary edge, with that edge's height interval
        bd = counts[es] == 1
        self.bface = fs[bd]
        be = uniq[es[bd]]
        self.blo = np.minimum(h[be[:, 0]], h[be[:, 1]])
        self.bhi = np.maximum(h[be[:, 0]], h[be[:, 1]])
        self.nf = nf

    def labels(self, lo, hi):
        # a triangle meets the slab in a convex piece, so two triangles are
        # joined inside the slab exactly when their shared edge meets it
        keep = (self.slo <= hi) & (self.shi >= lo)
        g = coo_matrix((np.ones(int(keep.sum())), (self.fa[keep], self.fb[keep])),
                       shape=(self.nf, self.nf))
        _, lab = connected_components(g, directed=False)
        return lab

    def boundary_labels(self, lab, lo, hi) -> set:
        hit = (self.blo <= hi) & (self.bhi >= lo)
        return set(lab[self.bface[hit]].tolist())


def _groups(lab, comps0, comps1):
    groups: dict = {}
    for k, c in enumerate(comps0):
        groups.setdefault(int(lab[c.meta["triangles"][0]]), ([], []))[0].append(k)
    for k, c in enumerate(comps1):
        groups.setdefault(int(lab[c.meta["triangles"][0]]), ([], []))[1].append(k)
    return groups


def build_reeb(mesh: SurfaceMesh, eps_samples, axis: int = 2, refine: float = 1e-3) -> ReebGraph:
    """Reeb graph of the height ``axis`` sampled at ``eps_samples`` (ascending)."""
    samples = [float(s) for s in eps_samples]
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    if any(b <= a for a, b in zip(samples, samples[1:])):
        raise ValueError("samples must be strictly ascending")
    h = perturbed_heights(mesh, axis)
    rng = float(h.max() - h.min())
    width = refine * rng
    bands = _Bands(mesh, h)
    cache: dict = {}

    def comps(level):
        if level not in cache:
            cache[level] = slice_level(mesh, level, axis, heights=h)
        return cache[level]

    def trivial(a, b):
        lab = bands.labels(a, b)
        return all(len(x) == 1 and len(y) == 1
                   for x, y in _groups(lab, comps(a), comps(b)).values())

    levels = list(samples)
    i = 0
    while i < len(levels) - 1:
        a, b = levels[i], levels[i + 1]
        if b - a > width and not trivial(a, b):
            levels.insert(i + 1, 0.5 * (a + b))
        else:
            i += 1

    fcomp = mesh.face_components()
    nodes: list[ReebNode] = []
    edges: list[ReebEdge] = []
    flagged: list[int] = []

    def add_node(kind, eps, comp):
        nodes.append(ReebNode(len(nodes), kind, float(eps), int(comp)))
        return nodes[-1].id

    def open_edge(src, eps, comp):
        edges.append(ReebEdge(len(edges), src, None, float(eps), None, int(comp)))
        return edges[-1].id

    def close_edge(eid, dst, eps):
        edges[eid].dst = dst
        edges[eid].eps_hi = float(eps)

    def comp_of(poly):
        return int(fcomp[poly.meta["triangles"][0]])

    current = {}
    for k, c in enumerate(comps(levels[0])):
        n = add_node("boundary-enter", levels[0], comp_of(c))
        current[k] = open_edge(n, levels[0], comp_of(c))
        edges[current[k]].slices.append((0, k))

    for li in range(len(levels) - 1):
        a, b = levels[li], levels[li + 1]
        mid = 0.5 * (a + b)
        c0, c1 = comps(a), comps(b)
        lab = bands.labels(a, b)
        at_boundary = bands.boundary_labels(lab, a, b)
        nxt = {}
        for label, (A, B) in sorted(_groups(lab, c0, c1).items()):
            comp = comp_of(c0[A[0]] if A else c1[B[0]])
            bnd = label in at_boundary
            if len(A) == 1 and len(B) == 1:
                nxt[B[0]] = current[A[0]]
                continue
            if not A:
                for q in B:
                    n = add_node("boundary-enter" if bnd else "birth", mid, comp)
                    nxt[q] = open_edge(n, mid, comp)
                    if len(B) > 1:
                        flagged.append(nxt[q])
                continue
            if not B:
                for p in A:
                    n = add_node("boundary-exit" if bnd else "death", mid, comp)
                    close_edge(current[p], n, mid)
                continue
            if bnd:
                kind = "boundary-enter" if len(B) > len(A) else "boundary-exit"
            else:
                kind = "merge" if len(A) > len(B) else "split"
            n = add_node(kind, mid, comp)
            for p in A:
                close_edge(current[p], n, mid)
            if len(A) == len(B) and not bnd:
                # simultaneous merge and split inside one refinement interval
                e = open_edge(n, mid, comp)
                flagged.append(e)
                n2 = add_node("split", mid, comp)
                close_edge(e, n2, mid)
                n = n2
            for q in B:
                nxt[q] = open_edge(n, mid, comp)
        for q, eid in nxt.items():
            edges[eid].slices.append((li + 1, q))
        current = nxt

    last = levels[-1]
    for q, eid in sorted(current.items()):
        n = add_node("boundary-exit", last, edges[eid].component)
        close_edge(eid, n, last)

    bmask = mesh.boundary_vertex_mask()
    vcomp = mesh.vertex_components()
    boundaries = {int(c): mesh.vertices[bmask & (vcomp == c)] for c in np.unique(fcomp)}
    return ReebGraph(
        nodes=nodes, edges=edges, samples=levels, flagged=sorted(set(flagged)),
        slices=[comps(lv) for lv in levels],
        meta={"range": rng, "refine_width": width, "boundaries": boundaries,
              "edge_length": mesh.median_edge_length()},
    )


def default_samples(mesh: SurfaceMesh, n: int = 41, axis: int = 2) -> np.ndarray:
    """``n`` heights from just below to just above the mesh.

    The end slices are empty, so every track starts and ends at an event.
    """
    h = mesh.vertices[:, axis]
    lo, hi = float(h.min()), float(h.max())
    pad = 1e-3 * (hi - lo)
    return np.linspace(lo - pad, hi + pad, n)


def _component_summary(g: ReebGraph, comp: int) -> dict:
    nodes = {n.id: n for n in g.nodes if n.component == comp}
    kinds = [n.kind for n in nodes.values()]
    edges = [e for e in g.edges if e.component == comp]
    return {
        "tracks": len(edges),
        "births": kinds.count("birth"),
        "deaths": kinds.count("death"),
        "merges": [n for n in nodes.values() if n.kind == "merge"],
        "splits": [n for n in nodes.values() if n.kind == "split"],
        "edges": edges,
        "nodes": nodes,
    }


def _is_pants(g, s) -> bool:
    joins = s["merges"] + s["splits"]
    if len(joins) != 1:
        return False
    n = joins[0]
    nin, nout = len(g.incoming(n.id)), len(g.outgoing(n.id))
    return (nin, nout) in ((2, 1), (1, 2))


def _disc_like(g, s) -> bool:
    if s["merges"] or s["splits"]:
        return False
    for e in s["edges"]:
        ends = {g.nodes[e.src].kind, g.nodes[e.dst].kind if e.dst is not None else ""}
        if not ends & {"birth", "death"}:
            return False
    return True


def _near_boundary(curve: Polyline3, pts: np.ndarray, tol: float) -> bool:
    if len(pts) == 0:
        return False
    d, _ = cKDTree(pts).query(curve.points)
    return bool(np.max(d) < tol)


def classify_topology(g: ReebGraph, codim2=None) -> TopologyClass:
    """Case I (cylinder), II (pants), III (two discs), IIb (pants + disc) or Other."""
    comps = g.components
    if not comps:
        return TopologyClass("Other", "empty graph")
    summ = {c: _component_summary(g, c) for c in comps}
    interior = sum(s["births"] + s["deaths"] + len(s["merges"]) + len(s["splits"])
                   for s in summ.values())
    tracks = sum(s["tracks"] for s in summ.values())
    joins = sum(len(s["merges"]) + len(s["splits"]) for s in summ.values())

    if len(comps) == 1:
        s = summ[comps[0]]
        if tracks == 1 and interior == 0:
            return TopologyClass("CaseI", "single track, no interior events")
        if _is_pants(g, s):
            return TopologyClass("CaseII", "two tracks join into one")
    if joins == 0 and tracks >= 2 and all(_disc_like(g, s) for s in summ.values()):
        return TopologyClass("CaseIII", f"{tracks} disc-like tracks")

    pants = [c for c in comps if _is_pants(g, summ[c])]
    discs = [c for c in comps if c not in pants and summ[c]["tracks"] == 1
             and not summ[c]["merges"] and not summ[c]["splits"]]
    if len(pants) == 1 and discs:
        if not codim2:
            return TopologyClass("Other", "pants and disc components without a shared "
                                          "codimension-two curve")
        tol = 3.0 * g.meta.get("edge_length", 0.0)
        bnd = g.meta.get("boundaries", {})
        for curve in codim2:
            if not _near_boundary(curve, bnd.get(pants[0], np.zeros((0, 3))), tol):
                continue
            if any(_near_boundary(curve, bnd.get(d, np.zeros((0, 3))), tol) for d in discs):
                return TopologyClass("CaseIIb", "pants and disc meeting along a "
                                                "codimension-two curve")
        return TopologyClass("Other", "codimension-two curve does not bound both pieces")
    desc = (f"{len(comps)} component(s), {tracks} track(s), {joins} merge/split, "
            f"{interior} interior event(s)")
    return TopologyClass("Other", desc)
