import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mdlab.errors import DomainError, InfeasibleError, ResourceError
from mdlab.lattice import make_region, remove
from mdlab.matchings import (
    CorrelationResult,
    PartitionPolynomial,
    constrained_weight,
    correlation,
    dimer_covariance,
    dimer_probability,
    enumerate_matchings,
    matching_polynomial,
    partition_value,
    pinning_probability,
)

from oracles import configurations, matchings_by_edge_subsets, pin_probability

SMALL = ["path:1", "path:4", "path:7", "cycle:3", "cycle:6", "grid:2x2", "grid:2x4", "grid:3x3", "grid:3x4", "box:2,2,2"]


def test_enumeration_counts():
    assert sum(1 for _ in enumerate_matchings(make_region("path:2"))) == 2
    assert sum(1 for _ in enumerate_matchings(make_region("path:3"))) == 3
    assert sum(1 for _ in enumerate_matchings(make_region("grid:2x2"))) == 7


def test_enumeration_yields_valid_distinct_configs():
    r = make_region("grid:3x3")
    seen = set()
    for cfg in enumerate_matchings(r):
        covered = [v for e in cfg.dimers for v in e]
        assert len(covered) == len(set(covered))
        assert set(covered).isdisjoint(cfg.monomers)
        assert set(covered) | cfg.monomers == set(r.vertices)
        seen.add((cfg.monomers, cfg.dimers))
    assert seen == set(configurations(r))


def test_enumeration_cap():
    with pytest.raises(ResourceError, match="20"):
        next(enumerate_matchings(make_region("grid:3x7")))


@pytest.mark.parametrize(
    "desc, coeffs",
    [("path:3", (1, 2)), ("grid:2x2", (1, 4, 2)), ("grid:2x3", (1, 7, 11, 3))],
)
def test_polynomial_examples(desc, coeffs):
    assert matching_polynomial(make_region(desc)).coefficients == coeffs


def test_grid2x3_against_edge_subsets():
    # 2^7 edge subsets
    assert list(matching_polynomial(make_region("grid:2x3")).coefficients) == [1, 7, 11, 3]
    assert matchings_by_edge_subsets(make_region("grid:2x3")) == [1, 7, 11, 3]


@pytest.mark.parametrize("desc", SMALL)
def test_polynomial_matches_enumeration(desc):
    r = make_region(desc)
    poly = matching_polynomial(r).coefficients
    by_size = [0] * len(poly)
    for cfg in enumerate_matchings(r):
        by_size[len(cfg.dimers)] += 1
    assert list(poly) == by_size == matchings_by_edge_subsets(r)
    assert poly[0] == 1 and len(poly) - 1 <= len(r) // 2


def test_polynomial_cap():
    with pytest.raises(ResourceError):
        matching_polynomial(make_region("grid:6x6"))


def test_path_recursion():
    rho = Fraction(3, 7)
    z = [partition_value(make_region(f"path:{n}"), rho) if n else Fraction(1) for n in range(0, 21)]
    for n in range(2, 21):
        assert z[n] == rho * z[n - 1] + z[n - 2]


def test_partition_value_examples():
    assert partition_value(make_region("grid:2x2"), 1) == 7
    assert partition_value(make_region("path:3"), 2) == 12
    assert partition_value(make_region("path:3"), 0) == 0
    assert partition_value(make_region("grid:2x2"), 0) == 2
    assert math.isclose(partition_value(make_region("path:3"), 2.0), 12.0)
    with pytest.raises(DomainError):
        partition_value(make_region("path:3"), -1)


def test_polynomial_serialisation_roundtrip():
    p = matching_polynomial(make_region("grid:2x3"))
    assert p.to_lines() == ["0 1", "1 7", "2 11", "3 3"]
    assert PartitionPolynomial.from_lines(p.to_lines(), 6) == p


def test_constrained_weight_examples():
    p3 = make_region("path:3")
    assert constrained_weight(p3, [(0,)], 1) == 2
    assert constrained_weight(p3, [], 5) == partition_value(p3, 5)
    assert constrained_weight(p3, [(0,), (2,)], 1) == 1
    with pytest.raises(DomainError):
        constrained_weight(p3, [(9,)], 1)


@pytest.mark.parametrize("desc", ["grid:3x3", "cycle:7", "grid:2x5"])
def test_constrained_weight_equals_removed_region(desc):
    r = make_region(desc)
    A = list(r.vertices[::3])
    assert constrained_weight(r, A, Fraction(5, 4)) == partition_value(remove(r, A), Fraction(5, 4))


def test_correlation_examples():
    p3 = make_region("path:3")
    res = correlation(p3, [(0,)], [(2,)], 1)
    assert res.value == Fraction(-1, 9) and res.method == "exact-rational" and res.abs_error == 0
    # 1/66 - (65/528)^2
    assert Fraction(1, 66) - Fraction(65, 528) ** 2 == Fraction(-1, 278784)
    assert correlation(p3, [(0,)], [(2,)], 8).value == Fraction(-1, 278784)


def test_correlation_float_mode():
    res = correlation(make_region("path:3"), [(0,)], [(2,)], 8.0)
    assert res.method == "exact-float" and res.abs_error > 0
    assert abs(res.value - (-1 / 278784)) <= res.abs_error


def test_correlation_errors():
    p3 = make_region("path:3")
    with pytest.raises(DomainError):
        correlation(p3, [(0,)], [(0,), (1,)], 1)
    with pytest.raises(DomainError):
        correlation(p3, [], [(1,)], 1)
    with pytest.raises(InfeasibleError):
        correlation(p3, [(0,)], [(2,)], 0)


def test_correlation_result_invariant():
    with pytest.raises(ValueError):
        CorrelationResult(0.1, "exact-float", 0.0, (), (), 1.0, "")
    with pytest.raises(ValueError):
        CorrelationResult(Fraction(1), "exact-rational", 1e-9, (), (), 1, "")


K33 = make_region("grid:3x3")
verts33 = st.sets(st.sampled_from(list(K33.vertices)), min_size=1, max_size=3)


@settings(max_examples=40, deadline=None)
@given(verts33, verts33, st.fractions(min_value=Fraction(1, 10), max_value=10, max_denominator=20))
def test_correlation_symmetric(A, B, rho):
    B = B - A
    if not B:
        return
    assert correlation(K33, A, B, rho).value == correlation(K33, B, A, rho).value


def test_dimer_probability_examples():
    assert dimer_probability(make_region("path:2"), ((0,), (1,)), 1) == Fraction(1, 2)
    sq = make_region("grid:2x2")
    for e in sq.edges:
        assert dimer_probability(sq, e, 1) == Fraction(2, 7)
    assert dimer_probability(make_region("path:3"), ((0,), (1,)), 1) == Fraction(1, 3)
    with pytest.raises(InfeasibleError):
        dimer_probability(make_region("path:3"), ((0,), (1,)), 0)


def test_dimer_covariance_examples():
    sq = make_region("grid:2x2")
    assert dimer_covariance(sq, ((0, 0), (1, 0)), ((0, 1), (1, 1)), 1) == Fraction(3, 49)
    p4 = make_region("path:4")
    assert dimer_covariance(p4, ((0,), (1,)), ((2,), (3,)), 1) == Fraction(1, 25)
    with pytest.raises(DomainError):
        dimer_covariance(p4, ((0,), (1,)), ((1,), (2,)), 1)


def test_dimer_covariance_against_enumeration():
    # P(both) - P(e1)P(e2) summed over configurations of path:4
    p4 = make_region("path:4")
    e1, e2 = ((0,), (1,)), ((2,), (3,))
    rho = Fraction(1)
    z = both = one = two = Fraction(0)
    for monos, dimers in configurations(p4):
        w = rho ** len(monos)
        z += w
        both += w * (e1 in dimers and e2 in dimers)
        one += w * (e1 in dimers)
        two += w * (e2 in dimers)
    assert dimer_covariance(p4, e1, e2, rho) == both / z - (one / z) * (two / z)


@pytest.mark.parametrize("desc", ["grid:3x3", "grid:2x4", "path:6"])
def test_dimer_covariance_equals_vertex_correlation(desc):
    r = make_region(desc)
    rho = Fraction(3, 2)
    es = r.edges
    for e1 in es:
        for e2 in es:
            if set(e1) & set(e2):
                continue
            assert dimer_covariance(r, e1, e2, rho) == correlation(r, e1, e2, rho).value


@pytest.mark.parametrize("desc", ["grid:3x3", "grid:2x5", "cycle:6", "path:7"])
def test_pinning_identity(desc):
    r = make_region(desc)
    rho = Fraction(2, 3)
    for k in range(0, len(r), 2):
        A = [r.vertices[k]] + ([r.vertices[k + 1]] if k + 1 < len(r) else [])
        assert pinning_probability(r, A, rho) == pin_probability(r, A, rho)


@pytest.mark.parametrize("desc", ["grid:2x3", "grid:3x3", "cycle:5"])
def test_normalisation(desc):
    r = make_region(desc)
    rho = Fraction(7, 5)
    z = partition_value(r, rho)
    assert sum(c.weight(rho) for c in enumerate_matchings(r)) / z == 1


@pytest.mark.parametrize("desc, A, B", [
    ("path:3", [(0,)], [(2,)]),
    ("grid:3x3", [(0, 0)], [(2, 2)]),
    ("grid:3x3", [(0, 0)], [(2, 0)]),
    ("grid:2x4", [(0, 0)], [(1, 3)]),
])
def test_large_rho_bound_in_absolute_value(desc, A, B):
    r = make_region(desc)
    d = r.dimension
    from mdlab.cluster import proposition_threshold
    from mdlab.lattice import set_distance
    rho = Fraction(math.ceil(proposition_threshold(len(A), d) * 100), 100)
    u = correlation(r, A, B, rho).value
    assert abs(u) <= math.exp(-2 * set_distance(A, B) + 1)
