"""Metropolis sampling of the monomer-dimer measure and decay fits.

States are two bitmasks: ``dimers`` over edge indices and ``covered`` over
vertex indices. A proposal picks a uniform edge; an empty edge between two
monomers gains a dimer with probability min(1, rho^-2), an occupied edge loses
it with probability min(1, rho^2). Both moves satisfy detailed balance with
respect to rho^|M|.

Every chain draws from its own Philox stream keyed by (seed, group, chain),
so results do not depend on how many worker processes run them.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ArgumentError, DomainError, InsufficientDataError
from .lattice import Region, Vertex, make_region, set_distance
from .matchings import (
    CorrelationResult,
    MatchingConfig,
    check_rho,
    correlation,
    enumerate_matchings,
)

_BLOCK = 1 << 16
N_BATCHES = 20


@dataclass(frozen=True)
class ChainParams:
    sweeps: int
    burn_in: int = 0
    thinning: int = 1
    chains: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1 or self.chains < 1:
            raise ArgumentError("sweeps and chains must be positive")
        if not 0 <= self.burn_in < self.sweeps:
            raise ArgumentError("need 0 <= burn_in < sweeps")
        if self.thinning < 1:
            raise ArgumentError("thinning must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ArgumentError("seed must be a 64-bit unsigned integer")

    @property
    def samples_per_chain(self) -> int:
        return -(-(self.sweeps - self.burn_in) // self.thinning)


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_samples: int
    ess: float

    def csv_row(self, quantity: str) -> str:
        return f"{quantity},{self.mean:.17g},{self.stderr:.17g},{self.n_samples},{self.ess:.17g}"


ESTIMATE_HEADER = "quantity,mean,stderr,n,ess"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("MDLAB_WORKERS", "1")))
    except ValueError:
        return 1


def _generator(seed: int, group: int, chain: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, group, chain])))


def _edge_vertex_masks(region: Region) -> list[int]:
    return [(1 << i) | (1 << j) for i, j in region.edge_pairs]


def _chain(region: Region, rho: float, params: ChainParams, group: int, chain: int):
    """One chain from the all-monomer state; returns recorded (dimers, covered) masks."""
    emask = _edge_vertex_masks(region)
    ebit = [1 << k for k in range(len(emask))]
    n_edges = len(emask)
    p_add = min(1.0, rho**-2)
    p_rem = min(1.0, rho**2)
    rng = _generator(params.seed, group, chain)
    dimers = covered = 0
    rec_d: list[int] = []
    rec_c: list[int] = []
    es: list[int] = []
    us: list[float] = []
    pos = 0
    for sweep in range(params.sweeps):
        for _ in range(n_edges):
            if pos == len(es):
                es = rng.integers(0, n_edges, size=_BLOCK).tolist()
                us = rng.random(_BLOCK).tolist()
                pos = 0
            e = es[pos]
            u = us[pos]
            pos += 1
            b = ebit[e]
            if dimers & b:
                if u < p_rem:
                    dimers ^= b
                    covered ^= emask[e]
            elif not covered & emask[e]:
                if u < p_add:
                    dimers |= b
                    covered |= emask[e]
        if sweep >= params.burn_in and (sweep - params.burn_in) % params.thinning == 0:
            rec_d.append(dimers)
            rec_c.append(covered)
    return rec_d, rec_c


def _chain_job(args):
    return _chain(*args)


def sample_masks(region: Region, rho, params: ChainParams, group: int = 0, workers: int | None = None):
    """Recorded states of every chain in ``group``, ordered by chain index."""
    check_rho(rho, positive=True)
    rho = float(rho)
    jobs = [(region, rho, params, group, c) for c in range(params.chains)]
    workers = default_workers() if workers is None else workers
    if workers > 1 and params.chains > 1:
        with ProcessPoolExecutor(max_workers=min(workers, params.chains)) as ex:
            return list(ex.map(_chain_job, jobs))
    return [_chain_job(j) for j in jobs]


def config_from_mask(region: Region, dimer_mask: int) -> MatchingConfig:
    dimers = []
    covered = set()
    for k, e in enumerate(region.edges):
        if dimer_mask >> k & 1:
            dimers.append(e)
            covered.update(e)
    monos = frozenset(v for v in region.vertices if v not in covered)
    return MatchingConfig(monos, frozenset(dimers))


def run_chain(region: Region, rho, params: ChainParams, group: int = 0) -> Iterator[MatchingConfig]:
    """Recorded samples as configurations, chain 0 first."""
    for rec_d, _ in sample_masks(region, rho, params, group, workers=1):
        for d in rec_d:
            yield config_from_mask(region, d)


def mask_of_config(region: Region, cfg: MatchingConfig) -> int:
    return sum(1 << region.edge_index[region.edge(*e)] for e in cfg.dimers)


def transition_probabilities(region: Region, rho, dimer_mask: int) -> dict[int, Fraction]:
    """One-proposal kernel P(state -> .) in exact arithmetic (rho rational)."""
    rho = Fraction(rho)
    n = len(region.edges)
    emask = _edge_vertex_masks(region)
    covered = 0
    for k in range(n):
        if dimer_mask >> k & 1:
            covered |= emask[k]
    out: dict[int, Fraction] = {}
    stay = Fraction(0)
    for k in range(n):
        pick = Fraction(1, n)
        if dimer_mask >> k & 1:
            acc = min(Fraction(1), rho**2)
        elif not covered & emask[k]:
            acc = min(Fraction(1), rho**-2)
        else:
            acc = Fraction(0)
        if acc:
            nxt = dimer_mask ^ (1 << k)
            out[nxt] = out.get(nxt, 0) + pick * acc
        stay += pick * (1 - acc)
    if stay:
        out[dimer_mask] = out.get(dimer_mask, 0) + stay
    return out


def exact_law(region: Region, rho) -> dict[int, Fraction | float]:
    """Exact probabilities of every configuration, keyed by dimer bitmask."""
    weights = {mask_of_config(region, c): c.weight(Fraction(rho)) for c in enumerate_matchings(region)}
    z = sum(weights.values())
    return {k: w / z for k, w in weights.items()}


def batch_means(series: Sequence[np.ndarray], n_batches: int = N_BATCHES) -> Estimate:
    """Pooled mean over chains with a batch-means standard error."""
    series = [np.asarray(s, dtype=float) for s in series]
    n_total = sum(len(s) for s in series)
    if n_total == 0:
        raise InsufficientDataError("no samples")
    mean = float(sum(s.sum() for s in series) / n_total)
    size = max(1, min(len(s) for s in series) // n_batches)
    bms = []
    for s in series:
        k = len(s) // size
        bms.extend(s[: k * size].reshape(k, size).mean(axis=1))
    bms = np.asarray(bms)
    var = float(np.var(np.concatenate(series), ddof=1)) if n_total > 1 else 0.0
    if len(bms) < 2 or var == 0.0:
        return Estimate(mean, 0.0, n_total, float(n_total))
    bvar = float(np.var(bms, ddof=1))
    stderr = math.sqrt(bvar / len(bms))
    ess = n_total if bvar == 0 else min(float(n_total), n_total * var / (size * bvar))
    return Estimate(mean, stderr, n_total, ess)


def _indicator_series(cov_chains, mask: int):
    return [np.fromiter(((c & mask) == 0 for c in cov), dtype=float, count=len(cov)) for cov in cov_chains]


def estimate_pinning(region: Region, A: Iterable[Vertex], rho, params: ChainParams,
                     group: int = 0, workers: int | None = None) -> Estimate:
    """P(A subset of M) from one chain group."""
    mask = region.mask(A)
    check_rho(rho, positive=True)
    if mask == 0:
        n = params.samples_per_chain * params.chains
        return Estimate(1.0, 0.0, n, float(n))
    chains = sample_masks(region, rho, params, group, workers)
    return batch_means(_indicator_series([c for _, c in chains], mask))


def estimate_correlation(region: Region, A, B, rho, params: ChainParams,
                         workers: int | None = None) -> CorrelationResult:
    """U = rho^-(|A|+|B|) (P(A u B in M) - P(A in M) P(B in M)).

    The three probabilities come from independent chain groups (0, 1, 2), so
    errors add in quadrature.
    """
    A = tuple(sorted({tuple(a) for a in A}))
    B = tuple(sorted({tuple(b) for b in B}))
    if not A or not B:
        raise DomainError("A and B must be non-empty")
    if set(A) & set(B):
        raise DomainError("A and B must be disjoint")
    p_ab = estimate_pinning(region, A + B, rho, params, 0, workers)
    p_a = estimate_pinning(region, A, rho, params, 1, workers)
    p_b = estimate_pinning(region, B, rho, params, 2, workers)
    scale = float(rho) ** -(len(A) + len(B))
    value = scale * (p_ab.mean - p_a.mean * p_b.mean)
    err = scale * math.sqrt(p_ab.stderr**2 + (p_b.mean * p_a.stderr) ** 2 + (p_a.mean * p_b.stderr) ** 2)
    err = max(err, math.ulp(abs(value)))
    return CorrelationResult(value, "montecarlo", err, A, B, rho, region.descriptor)


@dataclass(frozen=True)
class DecayFit:
    c: float
    log_c_prime: float
    r_squared: float
    points_used: int

    def csv_row(self, rho) -> str:
        label = rho if isinstance(rho, str) else f"{float(rho):.17g}"
        return f"{label},{self.c:.17g},{self.log_c_prime:.17g},{self.r_squared:.17g},{self.points_used}"


DECAY_HEADER = "rho,c,log_c_prime,r2,points"


def fit_decay(points: Iterable[tuple[float, float, float]], noise: float = 0.0) -> DecayFit:
    """Weighted least squares of log|value| against distance; c = -slope.

    Points with |value| <= max(1e-12, 3 * noise) are dropped.
    """
    floor = max(1e-12, 3 * noise)
    pts = [(float(d), abs(float(v)), float(w)) for d, v, w in points if abs(float(v)) > floor and w > 0]
    if len({d for d, _, _ in pts}) < 2:
        raise InsufficientDataError(f"need >= 2 usable points at distinct distances, have {len(pts)}")
    x = np.array([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    w = np.array([p[2] for p in pts])
    xm = np.average(x, weights=w)
    ym = np.average(y, weights=w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum(w * (y - ym) ** 2))
    ss_res = float(np.sum(w * (y - (intercept + slope * x)) ** 2))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1 - ss_res / ss_tot))
    return DecayFit(-slope, intercept, r2, len(pts))


def translate_sweep(region: Region, A: Sequence[Vertex], B: Sequence[Vertex], shift: Vertex,
                    steps: Iterable[int], rho) -> list[tuple[int, float, float]]:
    """Exact (distance, U, 1.0) with B translated by k * shift for each k in ``steps``."""
    out = []
    for k in steps:
        Bk = [tuple(b + k * s for b, s in zip(v, shift)) for v in B]
        res = correlation(region, A, Bk, rho)
        out.append((set_distance(A, Bk), float(res.value), 1.0))
    return out


def finite_size_ladder(descriptors: Sequence[str], A, B, rho, rel_tol: float = 0.05):
    """Exact U on a growing sequence of regions.

    Each row is (descriptor, value, flagged) where ``flagged`` marks a relative
    change above ``rel_tol`` from the previous size.
    """
    rows = []
    prev = None
    for desc in descriptors:
        v = float(correlation(make_region(desc), A, B, rho).value)
        flagged = prev is not None and abs(v - prev) > rel_tol * max(abs(v), abs(prev))
        rows.append((desc, v, flagged))
        prev = v
    return rows
