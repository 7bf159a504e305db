"""Boundaries between n- and (n+1)-spike regions of a sweep.

Marching squares on the integer spike-count field sampled at cell centres.
Only periodic cells carrying exactly ``n`` or ``n + 1`` spikes participate,
so every output vertex is the midpoint of a grid edge joining such a pair.
"""

from __future__ import annotations

import numpy as np

from ..geom.mesh import Polyline3
from .grid import SpikeGrid


def _edge_point(key, x, y):
    kind, j, i = key
    if kind == "h":
        return 0.5 * (x[i] + x[i + 1]), y[j]
    return x[i], 0.5 * (y[j] + y[j + 1])


def boundary_segments(valid: np.ndarray, high: np.ndarray):
    """Yield edge-key pairs of the marching-squares segments.

    ``valid`` marks participating nodes, ``high`` marks the n+1 ones.
    """
    n2, n1 = valid.shape

    def crossing(a, b):
        return valid[a] and valid[b] and high[a] != high[b]

    for j in range(n2 - 1):
        for i in range(n1 - 1):
            corners = [(j, i), (j, i + 1), (j + 1, i + 1), (j + 1, i)]
            # edge k joins corner k and corner k+1
            keys = [("h", j, i), ("v", j, i + 1), ("h", j + 1, i), ("v", j, i)]
            cross = [crossing(corners[k], corners[(k + 1) % 4]) for k in range(4)]
            ks = [k for k in range(4) if cross[k]]
            if len(ks) == 2:
                yield keys[ks[0]], keys[ks[1]]
            elif len(ks) == 4:
                # saddle square: the n+1 corners stay connected, so the cuts
                # isolate each low corner (edges k-1 and k meet at corner k)
                for k in range(4):
                    if not high[corners[k]]:
                        yield keys[(k - 1) % 4], keys[k]


def chain_segments(segments):
    """Assemble undirected key-pair segments into (key list, closed) chains."""
    adj: dict = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    chains = []

    def walk(start):
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adj[cur] if k != prev and k not in seen]
            if not nxt:
                closed = len(chain) > 2 and start in adj[cur] and prev is not None
                return chain, closed
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen.add(cur)

    for k in sorted(adj):
        if k not in seen and len(adj[k]) == 1:
            chains.append(walk(k))
    for k in sorted(adj):
        if k not in seen:
            chains.append(walk(k))
    return chains


def find_sc_boundary(grid: SpikeGrid, n: int) -> list[Polyline3]:
    """Polylines separating periodic n-spike cells from periodic (n+1)-spike cells.

    Coordinates are ``(p1, p2, eps)``; closed curves carry ``meta["isola"]``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    per = grid.periodic
    valid = per & ((grid.spikes == n) | (grid.spikes == n + 1))
    high = grid.spikes == n + 1
    x, y = grid.axis1.centers, grid.axis2.centers
    out = []
    for keys, closed in chain_segments(boundary_segments(valid, high)):
        if len(keys) < 2:
            continue
        pts = np.array([(*_edge_point(k, x, y), grid.eps) for k in keys])
        out.append(
            Polyline3(pts, closed=closed, role="sc-boundary",
                      meta={"n": n, "isola": closed, "edges": keys})
        )
    return out


def count_boundary_components(grid: SpikeGrid, n_max: int | None = None) -> int:
    """Total number of boundary polylines over all adjacent count pairs."""
    per = grid.periodic
    if not per.any():
        return 0
    top = int(grid.spikes[per].max()) if n_max is None else n_max
    return sum(len(find_sc_boundary(grid, n)) for n in range(top))
