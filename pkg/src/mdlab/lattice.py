"""Finite regions of Z^d and their induced nearest-neighbour graphs.

A :class:`Region` is immutable. Vertices are integer tuples kept in
lexicographic order, which is also the index order used by every bitmask
routine in the package (bit ``i`` <-> ``region.vertices[i]``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from pathlib import Path
from typing import Iterable

from .errors import ArgumentError, DomainError, FormatError

Vertex = tuple[int, ...]
Edge = tuple[Vertex, Vertex]


def l1(u: Vertex, v: Vertex) -> int:
    return sum(abs(a - b) for a, b in zip(u, v))


def _lattice_edges(vertices: Iterable[Vertex]) -> tuple[Edge, ...]:
    vs = set(vertices)
    edges = []
    for v in sorted(vs):
        for i in range(len(v)):
            w = v[:i] + (v[i] + 1,) + v[i + 1:]
            if w in vs:
                edges.append((v, w))
    return tuple(sorted(edges))


@dataclass(frozen=True)
class Region:
    """Vertex set K with its edge set E_K.

    ``embedded`` is False only for abstract fixtures (``cycle:n``) whose
    adjacency is not the nearest-neighbour structure of Z^d.
    """

    dimension: int
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    embedded: bool = True
    descriptor: str = field(default="", compare=False)

    @classmethod
    def from_vertices(cls, vertices: Iterable[Vertex], descriptor: str = "") -> "Region":
        vs = [tuple(int(c) for c in v) for v in vertices]
        if len(set(vs)) != len(vs):
            raise FormatError("duplicate vertices in region")
        arities = {len(v) for v in vs}
        if len(arities) > 1:
            raise FormatError(f"mixed coordinate arity {sorted(arities)}")
        dim = arities.pop() if arities else 1
        if dim < 1:
            raise FormatError("vertices need at least one coordinate")
        vs.sort()
        return cls(dim, tuple(vs), _lattice_edges(vs), True, descriptor)

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def index(self) -> dict[Vertex, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def neighbours(self) -> tuple[tuple[int, ...], ...]:
        nb: list[list[int]] = [[] for _ in self.vertices]
        for u, v in self.edges:
            i, j = self.index[u], self.index[v]
            nb[i].append(j)
            nb[j].append(i)
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def edge_pairs(self) -> tuple[tuple[int, int], ...]:
        """Edges as (i, j) vertex-index pairs with i < j."""
        return tuple((self.index[u], self.index[v]) for u, v in self.edges)

    @cached_property
    def full_mask(self) -> int:
        return (1 << len(self.vertices)) - 1

    def mask(self, vs: Iterable[Vertex]) -> int:
        m = 0
        for v in vs:
            try:
                m |= 1 << self.index[tuple(v)]
            except KeyError:
                raise DomainError(f"vertex {tuple(v)} is not in the region") from None
        return m

    def edge(self, u: Vertex, v: Vertex) -> Edge:
        """Canonical form of the edge {u, v}; DomainError if it is not in E_K."""
        e = (tuple(u), tuple(v)) if tuple(u) <= tuple(v) else (tuple(v), tuple(u))
        if e not in self.edge_index:
            raise DomainError(f"{e} is not an edge of the region")
        return e

    def overlap_degree(self) -> int:
        """max over edges of the number of edges sharing a vertex with it (itself included).

        Equals 4d - 1 for interior edges of Z^d; used as the KP constant for
        non-embedded fixtures.
        """
        deg = [len(n) for n in self.neighbours]
        return max((deg[i] + deg[j] - 1 for i, j in self.edge_pairs), default=0)

    def __repr__(self) -> str:
        name = self.descriptor or f"{len(self.vertices)} vertices"
        return f"Region({name!r}, d={self.dimension}, |E|={len(self.edges)})"


def _positive(text: str, what: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise ArgumentError(f"{what}: expected an integer, got {text!r}") from None
    if n < 1:
        raise ArgumentError(f"{what}: must be >= 1, got {n}")
    return n


def read_vertex_file(path: str | Path) -> list[Vertex]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.append(tuple(int(tok) for tok in line.split()))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-integer coordinate") from None
    return out


def make_region(spec: str) -> Region:
    """Build a region from a descriptor.

    ``path:n``, ``cycle:n``, ``grid:WxH``, ``box:W,H,D`` or ``file:PATH``.
    ``grid:WxH`` has vertices (x, y) with 0 <= x < W, 0 <= y < H.
    """
    kind, sep, arg = spec.partition(":")
    if not sep:
        raise ArgumentError(f"malformed region descriptor {spec!r}")
    if kind == "path":
        n = _positive(arg, "path length")
        return Region.from_vertices([(i,) for i in range(n)], spec)
    if kind == "cycle":
        n = _positive(arg, "cycle length")
        if n < 3:
            raise ArgumentError("cycle:n needs n >= 3")
        verts = tuple((i,) for i in range(n))
        edges = tuple(sorted(((i,), (i + 1,)) for i in range(n - 1))) + (((0,), (n - 1,)),)
        return Region(1, verts, tuple(sorted(edges)), False, spec)
    if kind == "grid":
        m = re.fullmatch(r"\s*(\d+)\s*x\s*(\d+)\s*", arg)
        if not m:
            raise ArgumentError(f"malformed grid descriptor {spec!r}")
        w, h = _positive(m[1], "grid width"), _positive(m[2], "grid height")
        return Region.from_vertices(product(range(w), range(h)), spec)
    if kind == "box":
        parts = arg.split(",")
        if len(parts) != 3:
            raise ArgumentError(f"malformed box descriptor {spec!r}")
        w, h, d = (_positive(p.strip(), "box side") for p in parts)
        return Region.from_vertices(product(range(w), range(h), range(d)), spec)
    if kind == "file":
        try:
            verts = read_vertex_file(arg)
        except OSError as exc:
            raise ArgumentError(f"cannot read region file: {exc}") from None
        if not verts:
            raise FormatError(f"{arg}: no vertices")
        return Region.from_vertices(verts, spec)
    raise ArgumentError(f"unknown region kind {kind!r}")


def remove(region: Region, A: Iterable[Vertex]) -> Region:
    """G_{K \\ A}: drop the vertices of A and every edge touching them."""
    A = {tuple(a) for a in A}
    missing = A - set(region.index)
    if missing:
        raise DomainError(f"vertices {sorted(missing)} are not in the region")
    if not A:
        return region
    verts = tuple(v for v in region.vertices if v not in A)
    edges = tuple(e for e in region.edges if e[0] not in A and e[1] not in A)
    desc = f"{region.descriptor}-{len(A)}" if region.descriptor else ""
    return Region(region.dimension, verts, edges, region.embedded, desc)


def set_distance(A: Iterable[Vertex], B: Iterable[Vertex]) -> int:
    """L1 distance in Z^d between two non-empty vertex sets."""
    A, B = list(A), list(B)
    if not A or not B:
        raise ArgumentError("set_distance needs non-empty sets")
    return min(l1(u, v) for u in A for v in B)


def parse_vertices(text: str) -> list[Vertex]:
    """Parse a vertex-list literal such as ``(0,0);(1,0)``."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        m = re.fullmatch(r"\(\s*(-?\d+(?:\s*,\s*-?\d+)*)\s*,?\s*\)", chunk)
        if not m:
            raise ArgumentError(f"malformed vertex literal {chunk!r}")
        out.append(tuple(int(t) for t in m[1].split(",")))
    return out
