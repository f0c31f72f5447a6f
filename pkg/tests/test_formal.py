import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lapbc.formal import (CoverageError, SampledFunction, apply_formal, boundedness_report,
                          greens_identity_check, laplacian_of_delta, weighted_degree)
from lapbc.graph import (LAMBDA_EXAMPLE4, WeightedGraph, build_family, combinatorial_ball,
                         example4, line_z, random_graph, regular_tree)
from lapbc.spectral import spectral_radius
from lapbc.truncation import truncate, truncate_graph

LAM = LAMBDA_EXAMPLE4


def test_delta_on_line():
    z = line_z()
    assert apply_formal(z, SampledFunction.delta(0), 0) == 2
    u = SampledFunction.from_callable(lambda x: math.exp(LAM * x))
    for x in (-7, 0, 3, 12):
        assert abs(apply_formal(z, u, x) + u(x)) <= 1e-12 * u(x) * 4


def test_constant_is_harmonic():
    t = regular_tree(3)
    assert apply_formal(t, SampledFunction.constant(2.5), (0, 1)) == 0


def test_coverage_error():
    u = SampledFunction({0: 1.0}, default=None)
    with pytest.raises(CoverageError):
        apply_formal(line_z(), u, 0)


def test_laplacian_of_delta_values():
    z = line_z()
    assert laplacian_of_delta(z, 0, 0) == 2
    assert laplacian_of_delta(z, 0, 1) == -1
    assert laplacian_of_delta(z, 0, 5) == 0


@pytest.mark.parametrize("desc", ["line-Z", "regular-tree:k=3", "fm-tree:k=3,q=0.5",
                                  "example4:rho=0.5,A=0.3333333333333333"])
def test_laplacian_of_delta_matches(desc):
    gen = build_family(desc)
    K, _ = combinatorial_ball(gen, None, 2)
    for x in K:
        for z in K:
            assert laplacian_of_delta(gen, x, z) == apply_formal(gen, SampledFunction.delta(x), z)


def test_greens_trivial_cases():
    z = line_z()
    r = greens_identity_check(z, SampledFunction.delta(0), SampledFunction.delta(0))
    assert r.form == r.lhs_pairing == r.rhs_pairing == 2
    t = regular_tree(3)
    K, _ = combinatorial_ball(t, None, 3)
    one = SampledFunction({x: 1.0 for x in K})
    K2, _ = combinatorial_ball(t, None, 1)
    r = greens_identity_check(t, SampledFunction({x: 1.0 for x in K2}), SampledFunction.delta(()))
    assert abs(r.form) == abs(r.lhs_pairing) == abs(r.rhs_pairing) == 0
    assert greens_identity_check(t, one, one).deviation <= 1e-12


def test_greens_requires_finite_support():
    with pytest.raises(CoverageError):
        greens_identity_check(line_z(), SampledFunction.constant(1.0), SampledFunction.delta(0))


@given(st.integers(0, 2**31 - 1))
def test_greens_random_tree(seed):
    rng = np.random.default_rng(seed)
    t = regular_tree(3)
    K, _ = combinatorial_ball(t, None, 3)
    u = SampledFunction({x: complex(*rng.standard_normal(2)) for x in K})
    v = SampledFunction({x: complex(*rng.standard_normal(2)) for x in K if rng.random() < 0.6})
    r = greens_identity_check(t, u, v)
    assert r.relative_deviation <= 1e-12
    s = greens_identity_check(t, v, u)
    assert abs(s.lhs_pairing - np.conj(r.rhs_pairing)) <= 1e-12 * r.scale


def test_weighted_degree():
    assert weighted_degree(line_z(), 17) == 2
    g = WeightedGraph.checked([("a", 2.0, 3.0)], [])
    assert weighted_degree(g.generator(), "a") == 1.5
    e = example4()
    for x in (1, 5, 20):
        assert e.m(x) < 1
        assert math.isclose(weighted_degree(e, x), (2 + e.c(x)) / e.m(x), rel_tol=1e-15)
    assert weighted_degree(e, 20) > weighted_degree(e, 10) > weighted_degree(e, 5)


def test_boundedness_verdicts(rng):
    r = boundedness_report(line_z(), levels=5)
    assert r.verdict == "bounded" and r.sup == 2
    r = boundedness_report(example4(), levels=8)
    assert r.verdict == "unbounded-evidence"
    g = random_graph(rng, 10, 0.5, connected=True)
    r = boundedness_report(g.generator())
    assert r.verdict == "bounded"
    assert r.sup == max(weighted_degree(g.generator(), x) for x in g.ids)


def test_truncation_norm_bound(rng):
    for _ in range(10):
        g = random_graph(rng, 12, 0.4, connected=True, killing=0.3)
        gen = g.generator()
        C = boundedness_report(gen).sup
        assert spectral_radius(truncate_graph(g, "neumann")) <= 2 * C + 1e-9
    T = truncate(line_z(), range(-6, 7), bc="neumann")
    assert spectral_radius(T) <= 4 + 1e-9
