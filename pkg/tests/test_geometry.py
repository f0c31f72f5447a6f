import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lapbc.formal import SampledFunction
from lapbc.geometry import (Ray, appendixA_demo, ball_graph, boundary_value, canonical_ray,
                            cheeger_bruteforce, dodziuk_kendall_check, lipschitz_check,
                            path_metric, ray_completeness_probe)
from lapbc.graph import (WeightedGraph, complete_graph, cycle_graph, fm_tree, line_z, path_graph,
                         random_graph, regular_tree, weighted_half_line)


def _triangle():
    return WeightedGraph.checked([(0, 1, 0), (1, 1, 0), (2, 1, 0)],
                                 [(0, 1, 4.0), (1, 2, 1.0), (0, 2, 1.0)])


def _steep():
    return weighted_half_line(lambda n: 16.0 ** n, name="steep")


def test_metric_line():
    for n in (0, 1, 7, 25):
        d = path_metric(line_z(), 0, n)
        assert d.value == n and d.exact


def test_metric_single_edge_and_triangle():
    g = WeightedGraph.checked([(0, 1, 0), (1, 1, 0)], [(0, 1, 4.0)])
    assert path_metric(g.generator(), 0, 1).value == 0.5
    assert path_metric(_triangle().generator(), 0, 1).value == 0.5
    assert path_metric(_triangle().generator(), 1, 2).value == 1.0


def test_metric_bound_flagged():
    d = path_metric(line_z(), 0, 50, bound=10)
    assert not d.exact and d.value <= 50
    with pytest.raises(ValueError):
        path_metric(line_z(), 0, 1, bound=0)


def test_metric_unreachable():
    g = WeightedGraph.checked([(0, 1, 0), (1, 1, 0)], [])
    assert path_metric(g.generator(), 0, 1).value == math.inf


@given(st.integers(0, 10_000))
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 9, 0.5, connected=True).generator()
    x, y, z = (int(v) for v in rng.integers(0, 9, 3))
    dxz = path_metric(g, x, z).value
    assert dxz <= path_metric(g, x, y).value + path_metric(g, y, z).value + 1e-12
    assert (path_metric(g, x, y).value == 0) == (x == y)


def test_metric_vs_dense_floyd(rng):
    g = random_graph(rng, 10, 0.5, connected=True)
    n = len(g)
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0)
    for u, v, b in g.edges:
        D[u, v] = D[v, u] = b ** -0.5
    for k in range(n):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    gen = g.generator()
    for x, y in itertools.combinations(range(n), 2):
        assert abs(path_metric(gen, x, y).value - D[x, y]) <= 1e-12


def test_ray_probes():
    assert ray_completeness_probe(canonical_ray(line_z()), 40).verdict == "complete-along-ray"
    p = ray_completeness_probe(canonical_ray(_steep()), 40)
    assert p.verdict == "incomplete-evidence" and abs(p.lengths[-1] - 4 / 3) <= 1e-12
    assert ray_completeness_probe(canonical_ray(fm_tree(3, 0.5)), 40).verdict == "complete-along-ray"
    assert np.all(canonical_ray(_steep()).steps(40) > 0)
    with pytest.raises(ValueError):
        ray_completeness_probe(canonical_ray(line_z()), 0)


def test_ray_nonadjacent():
    bad = Ray(line_z(), lambda n: 2 * n)
    with pytest.raises(ValueError):
        bad.lengths(3)


def test_lipschitz_examples():
    g = line_z()
    r = lipschitz_check(g, SampledFunction.delta(0), [(0, 1)])
    assert r.verdict == "ok" and abs(r.energy - 2) <= 1e-15
    assert abs(r.max_ratio - 1 / math.sqrt(2)) <= 1e-15
    r = lipschitz_check(g, SampledFunction.constant(3.0), [(0, 9)], energy=0.0)
    assert r.max_ratio == 0.0 and r.verdict == "ok"
    u = SampledFunction.from_callable(lambda x: float(min(abs(x), 5)))
    r = lipschitz_check(g, u, [(0, 10), (-3, 4)])
    assert abs(r.energy - 10) <= 1e-12
    assert abs(r.ratios[0] - 5 / (math.sqrt(10) * 10)) <= 1e-15 and r.verdict == "ok"


def test_lipschitz_unstable_energy():
    u = SampledFunction.from_callable(lambda x: float(x))
    assert lipschitz_check(line_z(), u, [(0, 1)], max_radius=8).verdict == "inconclusive"


@given(st.integers(0, 10_000))
def test_lipschitz_random(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 8, 0.5, connected=True).generator()
    u = SampledFunction({i: float(v) for i, v in enumerate(rng.standard_normal(8))})
    pairs = [tuple(int(v) for v in rng.integers(0, 8, 2)) for _ in range(5)]
    assert lipschitz_check(g, u, pairs).max_ratio <= 1 + 1e-9


def test_boundary_values():
    ray = canonical_ray(_steep())
    assert boundary_value(_steep(), SampledFunction.constant(2.5), ray).value == 2.5
    bv = boundary_value(_steep(), SampledFunction.delta(3), ray)
    assert bv.value == 0.0
    u = SampledFunction.from_callable(lambda n: sum(4.0 ** -k for k in range(n + 1)))
    bv = boundary_value(_steep(), u, ray, depth=30)
    assert abs(bv.value - 4 / 3) <= 1e-15 and bv.certificate < 1e-15
    # with energy the certificate is √Q times the remaining ray length
    bv = boundary_value(_steep(), u, ray, depth=20, energy=1.0)
    assert abs(bv.value - 4 / 3) <= bv.certificate + 1e-15
    with pytest.raises(ValueError, match="no boundary point"):
        boundary_value(line_z(), SampledFunction.constant(1.0), canonical_ray(line_z()))


def test_cheeger_paths():
    for n in range(2, 11):
        r = cheeger_bruteforce(path_graph(n))
        assert r.alpha == 1.0 / (n - 1) and len(r.minimizer) == n - 1


def test_cheeger_small():
    assert cheeger_bruteforce(complete_graph(4)).alpha == 1.0
    assert cheeger_bruteforce(path_graph(2)).alpha == 1.0
    assert cheeger_bruteforce(cycle_graph(8)).alpha == 2.0 / 7.0


def test_cheeger_cap():
    with pytest.raises(ValueError):
        cheeger_bruteforce(path_graph(23))


@pytest.mark.parametrize("seed", range(6))
def test_cheeger_connected_equals_full(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 15))
    g = random_graph(rng, n, 0.3, connected=True, weights=(1.0, 1.0))
    a = cheeger_bruteforce(g, connected_only=True).alpha
    b = cheeger_bruteforce(g, connected_only=False).alpha
    assert a == b


def test_dodziuk_kendall():
    g = path_graph(6).generator()
    res = cheeger_bruteforce(path_graph(6))
    phis = [SampledFunction({x: 1.0 for x in res.minimizer}), SampledFunction.delta(2),
            SampledFunction({})]
    rep = dodziuk_kendall_check(g, res.alpha, phis)
    assert rep.ok and rep.samples == 3
    # both sides of the indicator case: lhs = 1, rhs = α²/2 · Σ D = (1/25)/2 · 9
    assert abs(rep.min_slack - min(1 - 9 / 50, 2 - 2 / 50, 0.0)) <= 1e-15
    tree = regular_tree(4)
    rep = dodziuk_kendall_check(tree, 2.0, [SampledFunction.delta(())])
    assert not rep.ok


def test_ball_graph_halo():
    g, halo = ball_graph(regular_tree(3), 1)
    assert len(g) == 4 and sum(halo.values()) == 6.0


def test_appendix_demo():
    rep = appendixA_demo()
    assert abs(rep.mass_partial[-1] - 1) <= 1e-12
    assert rep.q_of_one == 0.0 and rep.one_in_l2
    assert rep.cheeger_upper_bounds == sorted(rep.cheeger_upper_bounds, reverse=True)
    assert rep.lower_bound_constant == 1.5
    assert rep.heat_mass_verdict == "incomplete"
    assert abs(rep.neumann_mass_value - 1) <= 1e-6
    assert rep.resolvent_gap_evidence and rep.complete_along_ray
    assert all(e >= rep.lower_bound_constant for e in rep.phi_energies)
    assert rep.phi_distances[-1] < 1e-4
    with pytest.raises(ValueError):
        appendixA_demo(k=2)
