"""Double monomer-dimer configurations: superposition, paths, connectivity.

Two configurations on the same region are overlaid as a multigraph (an edge
carrying a dimer in both counts twice). Every vertex then has degree <= 2, so
each component is an open path, a closed loop (a doubled edge is a loop of
length 2) or an isolated vertex.

Connection event (definition v1): e1 <-> e2 iff one component of the union
contains a dimer adjacent to e1 and a dimer adjacent to e2, where "adjacent"
means a *different* edge sharing an endpoint. Neither e1 nor e2 has to carry a
dimer itself.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .lattice import Edge, Region, Vertex
from .matchings import MatchingConfig, check_rho, enumerate_matchings
from .montecarlo import (
    ChainParams,
    Estimate,
    _edge_vertex_masks,
    batch_means,
    mask_of_config,
    sample_masks,
)

CONNECTION_DEFINITION = "v1: shared union component holding a dimer adjacent to each edge (adjacent = distinct edge sharing a vertex)"


@dataclass(frozen=True)
class PathDecomposition:
    open_paths: tuple[tuple[Vertex, ...], ...]
    closed_loops: tuple[tuple[Vertex, ...], ...]
    isolated: frozenset[Vertex]
    # Dimer multiset of each non-trivial component, aligned with components().
    component_dimers: tuple[tuple[Edge, ...], ...] = ()

    def components(self):
        return self.open_paths + self.closed_loops

    def to_json(self) -> str:
        return json.dumps({
            "open": [[list(v) for v in p] for p in self.open_paths],
            "closed": [[list(v) for v in c] for c in self.closed_loops],
            "isolated": [list(v) for v in sorted(self.isolated)],
        })


def _norm(e) -> Edge:
    u, v = tuple(e[0]), tuple(e[1])
    return (u, v) if u <= v else (v, u)


def _vertex_set(w: MatchingConfig) -> set[Vertex]:
    return set(w.monomers) | {v for e in w.dimers for v in e}


def superpose(w1: MatchingConfig, w2: MatchingConfig, region: Region | None = None) -> PathDecomposition:
    """Components of D(w1) + D(w2), ordered by their least vertex.

    Without ``region`` the vertex set is read off the configurations.
    """
    verts = _vertex_set(w1)
    if _vertex_set(w2) != verts:
        raise DomainError("configurations live on different regions")
    if region is not None:
        if verts != set(region.vertices) or any(
            _norm(e) not in region.edge_index for w in (w1, w2) for e in w.dimers
        ):
            raise DomainError("configuration does not live on this region")
    vertices = sorted(verts)
    multi: list[Edge] = sorted(_norm(e) for e in w1.dimers) + sorted(_norm(e) for e in w2.dimers)
    inc: dict[Vertex, list[int]] = {v: [] for v in vertices}
    for k, (u, v) in enumerate(multi):
        inc[u].append(k)
        inc[v].append(k)

    seen_v: set[Vertex] = set()
    comps = []
    for start in vertices:
        if start in seen_v or not inc[start]:
            continue
        # Collect the component, then walk it from an endpoint (or any vertex for a loop).
        stack, members, edges = [start], {start}, set()
        while stack:
            x = stack.pop()
            for k in inc[x]:
                edges.add(k)
                for y in multi[k]:
                    if y not in members:
                        members.add(y)
                        stack.append(y)
        seen_v |= members
        ends = sorted(v for v in members if len(inc[v]) == 1)
        first = ends[0] if ends else min(members)
        walk, used, x = [first], set(), first
        while True:
            nxt = [k for k in inc[x] if k not in used]
            if not nxt:
                break
            k = nxt[0]
            used.add(k)
            u, v = multi[k]
            x = v if x == u else u
            if x == first:
                break
            walk.append(x)
        comps.append((not ends, tuple(walk), tuple(sorted(multi[k] for k in edges))))
    opens = tuple(c for c in comps if not c[0])
    loops = tuple(c for c in comps if c[0])
    isolated = frozenset(v for v in vertices if not inc[v])
    return PathDecomposition(
        tuple(c[1] for c in opens),
        tuple(c[1] for c in loops),
        isolated,
        tuple(c[2] for c in opens + loops),
    )


def _adjacent(a: Edge, b: Edge) -> bool:
    return a != b and bool(set(a) & set(b))


def connected(pd: PathDecomposition, e1, e2) -> bool:
    e1, e2 = _norm(e1), _norm(e2)
    for dimers in pd.component_dimers:
        if any(_adjacent(d, e1) for d in dimers) and any(_adjacent(d, e2) for d in dimers):
            return True
    return False


class _Connector:
    """Bitmask version of :func:`connected` for sampled edge masks."""

    def __init__(self, region: Region, e1, e2):
        vm = _edge_vertex_masks(region)
        n = len(vm)
        self.eadj = [sum(1 << j for j in range(n) if j != k and vm[j] & vm[k]) for k in range(n)]
        k1 = region.edge_index[region.edge(*e1)]
        k2 = region.edge_index[region.edge(*e2)]
        self.seed1 = self.eadj[k1]
        self.target2 = self.eadj[k2]

    def __call__(self, union: int) -> bool:
        frontier = union & self.seed1
        seen = frontier
        while frontier:
            if seen & self.target2:
                return True
            nxt = 0
            while frontier:
                b = frontier & -frontier
                frontier ^= b
                nxt |= self.eadj[b.bit_length() - 1]
            frontier = nxt & union & ~seen
            seen |= frontier
        return bool(seen & self.target2)


def estimate_connection(region: Region, rho, e1, e2, params: ChainParams,
                        workers: int | None = None) -> Estimate:
    """(P x P)(e1 <-> e2) from paired independent chains (groups 10 and 11)."""
    check_rho(rho, positive=True)
    if _norm(e1) == _norm(e2):
        raise DomainError("e1 and e2 must differ")
    conn = _Connector(region, e1, e2)
    left = sample_masks(region, rho, params, 10, workers)
    right = sample_masks(region, rho, params, 11, workers)
    series = [
        np.fromiter((conn(a | b) for a, b in zip(l[0], r[0])), dtype=float, count=len(l[0]))
        for l, r in zip(left, right)
    ]
    return batch_means(series)


def exact_connection(region: Region, rho, e1, e2):
    """(P x P)(e1 <-> e2) by exhaustive enumeration of Omega_K x Omega_K."""
    check_rho(rho)
    conn = _Connector(region, e1, e2)
    r = Fraction(rho)
    states = [(mask_of_config(region, c), c.weight(r)) for c in enumerate_matchings(region)]
    z = sum(w for _, w in states)
    hit = sum(wa * wb for a, wa in states for b, wb in states if conn(a | b))
    p = hit / (z * z)
    return p if isinstance(rho, (int, Fraction)) else float(p)
