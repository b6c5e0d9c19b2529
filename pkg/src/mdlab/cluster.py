"""Cluster expansion for edge polymers with hard-core overlap.

Polymers are edges. Two polymers are incompatible (zeta = -1) when they share
an endpoint, including a polymer with itself. With x = rho^-2,

    log(Z_K / rho^|K|) = sum_{m>=1} x^m sum_{(g_1..g_m) in E_K^m} phi(g_1..g_m)

where phi is the Ursell function. Ordered tuples are never enumerated
directly: we enumerate connected *supports* (sets of distinct edges, anchored
at their least edge), distribute multiplicities over them, and weight each
multiset by its number of orderings m!/prod(k_i!).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

from .errors import ArgumentError, DomainError, ResourceError
from .lattice import Edge, Region, Vertex, set_distance
from .matchings import CorrelationResult, check_rho, is_exact

URSELL_CAP = 9
E = math.e

Polymer = Edge


def zeta(g1: Polymer, g2: Polymer) -> int:
    return -1 if set(g1) & set(g2) else 0


def _overlap_adjacency(tup: Sequence[Polymer]) -> tuple[int, ...]:
    m = len(tup)
    adj = [0] * m
    for i, j in combinations(range(m), 2):
        if zeta(tup[i], tup[j]):
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    return tuple(adj)


@lru_cache(maxsize=1 << 16)
def connected_weight(adj: tuple[int, ...]) -> int:
    """sum over connected graphs G on {0..m-1} of prod_{ij in G} zeta_ij.

    Moebius recursion over subsets containing their least element:
    w(S) = Q(S) - sum_{T < S, min S in T} w(T) Q(S - T), where Q(S) = 1 iff
    S holds no overlapping pair. O(3^m).
    """
    m = len(adj)
    full = (1 << m) - 1
    # Q over all subsets: extend an independent set by its top element.
    Q = [0] * (full + 1)
    Q[0] = 1
    for S in range(1, full + 1):
        top = S.bit_length() - 1
        rest = S ^ (1 << top)
        Q[S] = Q[rest] and not (adj[top] & rest)
    w = [0] * (full + 1)
    for S in range(1, full + 1):
        low = S & -S
        acc = Q[S]
        # proper subsets T of S with low in T: T = low | R, R a proper subset of S - low
        others = S ^ low
        R = (others - 1) & others
        while True:
            if R != others:
                T = low | R
                if w[T] and Q[S ^ T]:
                    acc -= w[T]
            if R == 0:
                break
            R = (R - 1) & others
        w[S] = acc
    return w[full]


def ursell(tup: Sequence[Polymer]) -> Fraction:
    m = len(tup)
    if m < 1:
        raise ArgumentError("ursell needs at least one polymer")
    if m > URSELL_CAP:
        raise ResourceError(f"ursell is capped at m={URSELL_CAP}, got {m}")
    if m == 1:
        return Fraction(1)
    return Fraction(connected_weight(_overlap_adjacency(tup)), math.factorial(m))


def ursell_bruteforce(tup: Sequence[Polymer]) -> Fraction:
    """Direct sum over every connected graph on {0..m-1}. Oracle only."""
    m = len(tup)
    if m == 1:
        return Fraction(1)
    pairs = list(combinations(range(m), 2))
    z = [zeta(tup[i], tup[j]) for i, j in pairs]
    total = 0
    for bits in range(1 << len(pairs)):
        prod = 1
        parent = list(range(m))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        comps = m
        for k, (i, j) in enumerate(pairs):
            if bits >> k & 1:
                prod *= z[k]
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
                    comps -= 1
        if comps == 1:
            total += prod
    return Fraction(total, math.factorial(m))


class KPCheck(NamedTuple):
    holds: bool
    margin: float


def kp_condition(rho, dim: int) -> KPCheck:
    """margin = 1 - (4d-1) e rho^-2; the expansion is certified when margin >= 0."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    if dim < 1:
        raise ArgumentError("dim must be >= 1")
    margin = 1.0 - (4 * dim - 1) * E / float(rho) ** 2
    # Boundary rho = sqrt((4d-1)e) lands within rounding of 0.
    if abs(margin) < 1e-12:
        margin = 0.0
    return KPCheck(margin >= 0, margin)


def _overlap_constant(region: Region) -> int:
    return 4 * region.dimension - 1 if region.embedded else region.overlap_degree()


def _kp_ratio(region: Region, rho) -> float:
    return E * _overlap_constant(region) / float(rho) ** 2


def _flags_for(region: Region, rho) -> tuple[str, ...]:
    if _kp_ratio(region, rho) <= 1 + 1e-12:
        return ()
    warnings.warn(
        f"rho={rho} is outside the certified convergence regime for {region!r}; "
        "series results are flagged unreliable",
        stacklevel=3,
    )
    return ("unreliable",)


@dataclass(frozen=True)
class ClusterTerm:
    """A multiset of polymers, represented by one ordering of it.

    ``orderings`` is the number of distinct ordered tuples it stands for.
    """

    tuple: tuple[Polymer, ...]
    ursell: Fraction
    orderings: int
    support_mask: int  # vertex bitmask of the region covered by the polymers

    @property
    def order(self) -> int:
        return len(self.tuple)

    def weight(self, rho):
        return self.ursell * rho ** (-2 * self.order)


def _edge_adjacency(region: Region) -> list[int]:
    pairs = region.edge_pairs
    by_vertex: list[int] = [0] * len(region)
    for k, (i, j) in enumerate(pairs):
        by_vertex[i] |= 1 << k
        by_vertex[j] |= 1 << k
    return [(by_vertex[i] | by_vertex[j]) & ~(1 << k) for k, (i, j) in enumerate(pairs)]


def connected_supports(region: Region, max_size: int) -> list[tuple[int, ...]]:
    """All sets of distinct edges with connected overlap graph, size <= max_size.

    Grown breadth-first from each anchor edge, only adding edges with a larger
    index than the anchor, so every set is produced under its least edge.
    Output order is deterministic: by anchor, then size, then sorted indices.
    """
    eadj = _edge_adjacency(region)
    out = []
    for a in range(len(region.edges)):
        above = ~((1 << (a + 1)) - 1)
        level = {1 << a}
        for size in range(1, max_size + 1):
            out.extend(sorted(_bits(s) for s in level))
            if size == max_size:
                break
            nxt = set()
            for s in level:
                frontier = 0
                for k in _bits(s):
                    frontier |= eadj[k]
                frontier &= above & ~s
                while frontier:
                    b = frontier & -frontier
                    frontier ^= b
                    nxt.add(s | b)
            level = nxt
    return out


def _bits(x: int) -> tuple[int, ...]:
    out = []
    while x:
        b = x & -x
        out.append(b.bit_length() - 1)
        x ^= b
    return tuple(out)


def _compositions(m: int, s: int):
    """Tuples of s positive integers summing to m."""
    for cuts in combinations(range(1, m), s - 1):
        bounds = (0,) + cuts + (m,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(s))


@lru_cache(maxsize=16)
def clusters(region: Region, m_max: int) -> tuple[ClusterTerm, ...]:
    """Every connected multiset of at most m_max polymers, in deterministic order."""
    if m_max < 1:
        raise ArgumentError("m_max must be >= 1")
    if m_max > URSELL_CAP:
        raise ResourceError(f"cluster order is capped at {URSELL_CAP}")
    edges = region.edges
    pair_masks = [(1 << i) | (1 << j) for i, j in region.edge_pairs]
    out = []
    for support in connected_supports(region, m_max):
        polys = [edges[k] for k in support]
        vmask = 0
        for k in support:
            vmask |= pair_masks[k]
        for m in range(len(support), m_max + 1):
            for mult in _compositions(m, len(support)):
                tup = tuple(p for p, k in zip(polys, mult) for _ in range(k))
                count = math.factorial(m)
                for k in mult:
                    count //= math.factorial(k)
                out.append(ClusterTerm(tup, ursell(tup), count, vmask))
    out.sort(key=lambda c: c.order)  # stable: keeps anchor order within each order
    return tuple(out)


@dataclass(frozen=True)
class SeriesResult:
    per_order_terms: tuple
    total: object
    m_max: int
    tail_estimate: float
    coefficients: tuple[Fraction, ...] = ()
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.per_order_terms) != self.m_max:
            raise ValueError("one term per order is required")

    def to_csv(self) -> str:
        lines = ["order,term,cumulative"]
        acc = 0
        for m, t in enumerate(self.per_order_terms, 1):
            acc += t
            lines.append(f"{m},{float(t):.17g},{float(acc):.17g}")
        return "\n".join(lines) + "\n"


def _tail(last_abs: float, ratio: float) -> float:
    r = min(max(ratio, 0.0), 0.99)
    return abs(last_abs) * r / (1 - r)


def _powers(rho, m_max):
    x = Fraction(1) / Fraction(rho) ** 2 if is_exact(rho) else 1.0 / float(rho) ** 2
    return [x**m for m in range(1, m_max + 1)]


def _order_sums(terms: Iterable[ClusterTerm], m_max: int, absolute=False) -> list[Fraction]:
    acc = [Fraction(0)] * m_max
    for c in terms:
        phi = abs(c.ursell) if absolute else c.ursell
        acc[c.order - 1] += phi * c.orderings
    return acc


def _series(coeffs: list[Fraction], rho, ratio: float, flags) -> SeriesResult:
    pw = _powers(rho, len(coeffs))
    if is_exact(rho):
        terms = tuple(c * p for c, p in zip(coeffs, pw))
    else:
        terms = tuple(float(c) * p for c, p in zip(coeffs, pw))
    total = sum(terms, Fraction(0) if is_exact(rho) else 0.0)
    return SeriesResult(terms, total, len(coeffs), _tail(float(terms[-1]), ratio), tuple(coeffs), flags)


def truncated_log_z(region: Region, rho, m_max: int) -> SeriesResult:
    """log(Z_{K,rho} / rho^|K|) summed over clusters of order <= m_max."""
    check_rho(rho, positive=True)
    if m_max < 1:
        raise ArgumentError("m_max must be >= 1")
    flags = _flags_for(region, rho)
    coeffs = _order_sums(clusters(region, m_max), m_max)
    return _series(coeffs, rho, _kp_ratio(region, rho), flags)


def _touching(cs, mask: int):
    return [c for c in cs if c.support_mask & mask]


def pinned_series(region: Region, A: Iterable[Vertex], rho, m_max: int) -> SeriesResult:
    """Sum over clusters with at least one polymer touching A (the sets C_A^m)."""
    check_rho(rho, positive=True)
    flags = _flags_for(region, rho)
    cs = _touching(clusters(region, m_max), region.mask(A))
    return _series(_order_sums(cs, m_max), rho, _kp_ratio(region, rho), flags)


def truncated_correlation(region: Region, A, B, rho, m_max: int) -> CorrelationResult:
    """U from the pinned-cluster factorisation

        U = (C_A/C_0)(C_B/C_0)(exp(S_AB) - 1),  C_X/C_0 = rho^-|X| exp(-S_X),

    with S_X the cluster sum over C_X^m and S_AB over C_A^m n C_B^m.
    """
    check_rho(rho, positive=True)
    A = tuple(sorted({tuple(a) for a in A}))
    B = tuple(sorted({tuple(b) for b in B}))
    if not A or not B:
        raise DomainError("A and B must be non-empty")
    if set(A) & set(B):
        raise DomainError("A and B must be disjoint")
    if m_max < 1:
        raise ArgumentError("m_max must be >= 1")
    ma, mb = region.mask(A), region.mask(B)
    flags = list(_flags_for(region, rho))
    dist = set_distance(A, B)
    if m_max < dist:
        warnings.warn(f"m_max={m_max} < d(A,B)={dist}: no shared cluster contributes", stacklevel=2)
        flags.append("below-min-order")

    cs = clusters(region, m_max)
    ta, tb = _touching(cs, ma), _touching(cs, mb)
    tab = [c for c in ta if c.support_mask & mb]
    x = 1.0 / float(rho) ** 2
    pw = [x**m for m in range(1, m_max + 1)]

    def total(cl):
        return sum(float(c) * p for c, p in zip(_order_sums(cl, m_max), pw))

    s_a, s_b, s_ab = total(ta), total(tb), total(tab)
    r_a = float(rho) ** -len(A) * math.exp(-s_a)
    r_b = float(rho) ** -len(B) * math.exp(-s_b)
    value = r_a * r_b * math.expm1(s_ab)

    ratio = _kp_ratio(region, rho)
    # Majorant for the omitted orders: next-order absolute pinned sums, geometric tail.
    tail = 0.0
    abs_last = 0.0
    for cl in (ta, tb):
        if cl:
            last = float(_order_sums(cl, m_max, absolute=True)[-1]) * pw[-1]
            abs_last = max(abs_last, last)
    tail = _tail(abs_last, ratio)
    err = r_a * r_b * math.exp(s_ab) * tail + abs(value) * 2 * tail
    err = max(err, math.ulp(abs(value)))
    return CorrelationResult(value, "series", err, A, B, rho, region.descriptor, tail, tuple(flags))


def pinned_sum_profile(region: Region, g1: Polymer, rho, m_max: int) -> list:
    """Values of 1 + sum_{n=2}^{N} n sum_{(g_2..g_n)} |phi(g_1..g_n)| rho^(-2(n-1)) for N = 1..m_max."""
    check_rho(rho, positive=True)
    g1 = region.edge(*g1)
    acc = [Fraction(0)] * (m_max + 1)
    for c in clusters(region, m_max):
        k1 = c.tuple.count(g1)
        if k1 and c.order >= 2:
            # orderings with g1 in first position = orderings * k1 / n; times the factor n
            acc[c.order] += abs(c.ursell) * c.orderings * k1
    x = Fraction(1) / Fraction(rho) ** 2 if is_exact(rho) else 1.0 / float(rho) ** 2
    out = []
    value = Fraction(1) if is_exact(rho) else 1.0
    for n in range(1, m_max + 1):
        if n >= 2:
            value += (acc[n] if is_exact(rho) else float(acc[n])) * x ** (n - 1)
        out.append(value)
    return out


def pinned_sum_check(region: Region, g1: Polymer, rho, m_max: int):
    return pinned_sum_profile(region, g1, rho, m_max)[-1]


def proposition_threshold(A_size: int, dim: int) -> float:
    """Smallest rho covered by the large-activity decay bound: e sqrt(e |A| (4d-1))."""
    return E * math.sqrt(E * A_size * (4 * dim - 1))


class BoundPair(NamedTuple):
    intermediate: float
    final: float


def rigorous_bound(A_size: int, dim: int, distance: int, rho) -> BoundPair:
    """intermediate = e^{-2D} e^3 rho^-2 |A| 2d;  final = e^{-2D+1}."""
    if distance <= 0:
        raise ArgumentError("distance must be positive")
    if A_size < 1 or dim < 1:
        raise ArgumentError("A_size and dim must be positive")
    if rho <= 0:
        raise DomainError("rho must be positive")
    if float(rho) < proposition_threshold(A_size, dim) * (1 - 1e-12):
        warnings.warn(
            f"rho={rho} is below e*sqrt(e*|A|*(4d-1)) = {proposition_threshold(A_size, dim):.6g}; "
            "outside the large-activity regime",
            stacklevel=2,
        )
    inter = math.exp(-2 * distance) * E**3 * float(rho) ** -2 * A_size * 2 * dim
    return BoundPair(inter, math.exp(-2 * distance + 1))


def guerra_constant(a: float, b: float) -> float:
    """Decay rate b / (ln(2(a+1)) (a+1)) transported from [a, a+2] down to (0, a)."""
    if a < 0 or b < 0:
        raise DomainError("a and b must be nonnegative")
    return b / (math.log(2 * (a + 1)) * (a + 1))


@dataclass(frozen=True)
class DecayBound:
    rho: float
    A_size: int
    dim: int
    a: float
    c_tilde: float
    c: float


def predicted_decay(rho, A_size: int, dim: int) -> DecayBound:
    """Small-activity decay rate c = c_tilde rho with a = e sqrt(e |A| (4d-1)), b = 2."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    a = proposition_threshold(A_size, dim)
    ct = guerra_constant(a, 2.0)
    return DecayBound(float(rho), A_size, dim, a, ct, ct * float(rho))
