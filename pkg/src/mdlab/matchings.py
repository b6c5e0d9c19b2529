"""Exact monomer-dimer computations on small regions.

The partition function of region K is stored as its matching polynomial:
``coefficients[n]`` is the number of matchings with n dimers, so

    Z_{K,rho} = sum_n coefficients[n] * rho**(|K| - 2n).

Coefficients come from vertex elimination on bitmasks,

    Z(S) = rho * Z(S - v) + sum_{u ~ v, u in S} Z(S - u - v),

with v the least surviving vertex. The memo table is per region and shared by
every constrained weight C_{K,rho}(A) = Z_{K \\ A, rho}, so correlations on the
same region reuse work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational, Real
from typing import Iterable, Iterator

from .errors import DomainError, InfeasibleError, ResourceError
from .lattice import Edge, Region, Vertex

ENUMERATION_CAP = 20
DP_CAP = 32

METHODS = ("exact-rational", "exact-float", "series", "montecarlo")


@dataclass(frozen=True)
class MatchingConfig:
    """One configuration omega = (M, d)."""

    monomers: frozenset[Vertex]
    dimers: frozenset[Edge]

    def weight(self, rho):
        return rho ** len(self.monomers)


@dataclass(frozen=True)
class PartitionPolynomial:
    coefficients: tuple[int, ...]
    vertex_count: int

    def __call__(self, rho):
        return evaluate(self.coefficients, self.vertex_count, rho)

    def __len__(self) -> int:
        return len(self.coefficients)

    def to_lines(self) -> list[str]:
        return [f"{n} {c}" for n, c in enumerate(self.coefficients) if c]

    @classmethod
    def from_lines(cls, lines: Iterable[str], vertex_count: int) -> "PartitionPolynomial":
        coeffs: dict[int, int] = {}
        for line in lines:
            if line.strip():
                n, c = line.split()
                coeffs[int(n)] = int(c)
        top = max(coeffs, default=0)
        return cls(tuple(coeffs.get(n, 0) for n in range(top + 1)), vertex_count)


@dataclass(frozen=True)
class CorrelationResult:
    value: float | Fraction
    method: str
    abs_error: float
    A: tuple[Vertex, ...]
    B: tuple[Vertex, ...]
    rho: object
    region: str
    tail_estimate: float | None = None
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if (self.abs_error == 0) != (self.method == "exact-rational"):
            raise ValueError("abs_error must be 0 exactly for exact-rational results")


def check_rho(rho, *, positive: bool = False):
    if not isinstance(rho, Real) or isinstance(rho, bool):
        raise DomainError(f"rho must be a real number, got {rho!r}")
    if rho < 0 or (positive and rho == 0) or (isinstance(rho, float) and not math.isfinite(rho)):
        raise DomainError(f"rho must be {'positive' if positive else 'nonnegative'}, got {rho}")
    return rho


def is_exact(rho) -> bool:
    return isinstance(rho, Rational)


def evaluate(coefficients, vertex_count: int, rho):
    """sum_n c_n rho^(N - 2n). Exact for int/Fraction rho, float otherwise."""
    check_rho(rho)
    if not is_exact(rho):
        rho = float(rho)
    total = 0
    r2 = rho * rho
    # Horner in rho^2: c_0 carries the highest power of rho.
    for c in coefficients:
        total = total * r2 + c
    lead = vertex_count - 2 * (len(coefficients) - 1)
    return total * rho**lead


class _Eliminator:
    """Memoised vertex-elimination on subsets of one region."""

    def __init__(self, region: Region):
        self.n = len(region)
        self.nbr = [0] * self.n
        for i, j in region.edge_pairs:
            self.nbr[i] |= 1 << j
            self.nbr[j] |= 1 << i
        # dict get/set are atomic under the GIL; a race only duplicates work.
        self.memo: dict[int, tuple[int, ...]] = {0: (1,)}

    def poly(self, S: int) -> tuple[int, ...]:
        hit = self.memo.get(S)
        if hit is not None:
            return hit
        low = S & -S
        rest = S ^ low
        out = list(self.poly(rest))
        nb = self.nbr[low.bit_length() - 1] & rest
        while nb:
            u = nb & -nb
            nb ^= u
            sub = self.poly(rest ^ u)
            need = len(sub) + 1
            if len(out) < need:
                out.extend([0] * (need - len(out)))
            for k, c in enumerate(sub, 1):
                out[k] += c
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        res = tuple(out)
        self.memo[S] = res
        return res


@lru_cache(maxsize=64)
def _eliminator(region: Region) -> _Eliminator:
    return _Eliminator(region)


def _check_cap(region: Region, cap: int, what: str):
    if len(region) > cap:
        raise ResourceError(f"{what} is capped at {cap} vertices; region has {len(region)}")


def subset_polynomial(region: Region, mask: int, cap: int = DP_CAP) -> PartitionPolynomial:
    """Matching polynomial of the induced subgraph on the vertices in ``mask``."""
    _check_cap(region, cap, "matching_polynomial")
    return PartitionPolynomial(_eliminator(region).poly(mask), bin(mask).count("1"))


def matching_polynomial(region: Region, cap: int = DP_CAP) -> PartitionPolynomial:
    return subset_polynomial(region, region.full_mask, cap)


def partition_value(region: Region, rho):
    """Z_{K,rho}."""
    check_rho(rho)
    return matching_polynomial(region)(rho)


def _as_vertices(region: Region, A: Iterable[Vertex]) -> tuple[Vertex, ...]:
    A = tuple(sorted({tuple(a) for a in A}))
    region.mask(A)  # raises DomainError for foreign vertices
    return A


def constrained_weight(region: Region, A: Iterable[Vertex], rho):
    """C_{K,rho}(A) = Z_{K \\ A, rho}: weight with monomers pinned on A."""
    check_rho(rho)
    mask = region.full_mask & ~region.mask(A)
    return subset_polynomial(region, mask)(rho)


def _exact_weights(region: Region, masks: Iterable[int], rho) -> list[Fraction]:
    r = Fraction(rho)
    return [Fraction(subset_polynomial(region, region.full_mask & ~m)(r)) for m in masks]


def _finish(value: Fraction, rho, **echo) -> CorrelationResult:
    if is_exact(rho):
        return CorrelationResult(value, "exact-rational", 0.0, rho=rho, **echo)
    f = float(value)
    # Computed exactly at the binary value of rho; the only error is the final rounding.
    return CorrelationResult(f, "exact-float", math.ulp(f) / 2, rho=rho, **echo)


def correlation(region: Region, A: Iterable[Vertex], B: Iterable[Vertex], rho) -> CorrelationResult:
    """U_{K,rho}(A,B) = C(A u B)/C(0) - C(A)/C(0) * C(B)/C(0)."""
    check_rho(rho)
    A, B = _as_vertices(region, A), _as_vertices(region, B)
    if not A or not B:
        raise DomainError("A and B must be non-empty")
    if set(A) & set(B):
        raise DomainError("A and B must be disjoint")
    ma, mb = region.mask(A), region.mask(B)
    c0, ca, cb, cab = _exact_weights(region, (0, ma, mb, ma | mb), rho)
    if c0 == 0:
        raise InfeasibleError(f"Z vanishes on {region.descriptor or 'region'} at rho={rho}")
    value = cab / c0 - (ca / c0) * (cb / c0)
    return _finish(value, rho, A=A, B=B, region=region.descriptor)


def pinning_probability(region: Region, A: Iterable[Vertex], rho):
    """P_{K,rho}(A subset of M) = rho^|A| C(A)/C(0)."""
    check_rho(rho)
    A = _as_vertices(region, A)
    c0, ca = _exact_weights(region, (0, region.mask(A)), rho)
    if c0 == 0:
        raise InfeasibleError("Z vanishes")
    p = Fraction(rho) ** len(A) * ca / c0
    return p if is_exact(rho) else float(p)


def _edge_mask(region: Region, e) -> int:
    u, v = region.edge(*e)
    return region.mask((u, v))


def dimer_probability(region: Region, e, rho):
    """P(e in D) = Z_{K \\ e} / Z_K."""
    check_rho(rho)
    c0, ce = _exact_weights(region, (0, _edge_mask(region, e)), rho)
    if c0 == 0:
        raise InfeasibleError("Z vanishes")
    p = ce / c0
    return p if is_exact(rho) else float(p)


def dimer_covariance(region: Region, e1, e2, rho):
    """P(e1, e2 in D) - P(e1 in D) P(e2 in D) for vertex-disjoint edges."""
    check_rho(rho)
    m1, m2 = _edge_mask(region, e1), _edge_mask(region, e2)
    if m1 & m2:
        raise DomainError("edges share a vertex")
    c0, c1, c2, c12 = _exact_weights(region, (0, m1, m2, m1 | m2), rho)
    if c0 == 0:
        raise InfeasibleError("Z vanishes")
    cov = c12 / c0 - (c1 / c0) * (c2 / c0)
    return cov if is_exact(rho) else float(cov)


def enumerate_matchings(region: Region, cap: int = ENUMERATION_CAP) -> Iterator[MatchingConfig]:
    """Every element of Omega_K exactly once (backtracking on the least free vertex)."""
    _check_cap(region, cap, "enumerate_matchings")
    verts, nbrs = region.vertices, region.neighbours
    n = len(verts)

    def rec(i: int, used: int, monos: list, dimers: list):
        while i < n and used >> i & 1:
            i += 1
        if i == n:
            yield MatchingConfig(frozenset(monos), frozenset(dimers))
            return
        monos.append(verts[i])
        yield from rec(i + 1, used | 1 << i, monos, dimers)
        monos.pop()
        for j in nbrs[i]:
            if j > i and not used >> j & 1:
                dimers.append((verts[i], verts[j]))
                yield from rec(i + 1, used | 1 << i | 1 << j, monos, dimers)
                dimers.pop()

    yield from rec(0, 0, [], [])
