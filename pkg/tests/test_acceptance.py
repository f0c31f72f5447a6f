"""Acceptance suite: one PASS/FAIL line per criterion, each with its tolerance and time limit.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are printed
at the end of the session (and inline with ``-s``).
"""

import math
import time

import numpy as np
import pytest

from lapbc.completeness import example4_verify, heat_mass, radial_tree_criterion
from lapbc.formal import SampledFunction, boundedness_report, greens_identity_check
from lapbc.forms import complexify, dirichlet_axioms_check
from lapbc.geometry import appendixA_demo, cheeger_bruteforce
from lapbc.graph import (Exhaustion, WeightedGraph, build_family, combinatorial_ball, example4,
                         halo_of, line_z, path_graph, complete_graph, radial_reduce, radial_tree,
                         random_graph)
from lapbc.harmonic import bvp_solve, classify_solution, radial_solve
from lapbc.selftest import FAMILIES
from lapbc.spectral import (dense_bottom, f_beta_identity_check, li_asymptotics,
                            positivity_improving_check, resolvent_apply, resolvent_limit_check,
                            spectral_radius)
from lapbc.truncation import (DIRICHLET, NEUMANN, BoundaryCondition, inner_boundary,
                              ordering_check, truncate, truncate_graph)

RESULTS = []


def report(num, title, passed, elapsed, limit, detail):
    ok = passed and elapsed < limit
    line = (f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}; "
            f"{elapsed:.2f}s (limit {limit:g}s)")
    RESULTS.append(line)
    print(line)
    assert passed, line
    assert elapsed < limit, line


def _components(graph: WeightedGraph):
    parent = {x: x for x in graph.ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, b in graph.edges:
        if b > 0:
            parent[find(u)] = find(v)
    return len({find(x) for x in graph.ids})


def _random_K(rng, gen, n):
    """Random nonempty proper subset of a finite generator's vertices."""
    size = int(rng.integers(2, n))
    return sorted(int(v) for v in rng.choice(n, size=size, replace=False))


def test_criterion_01_greens_formula():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    gens = [build_family(d) for d in FAMILIES]
    gens += [random_graph(rng, 12, 0.4, connected=True, killing=0.3).generator() for _ in range(5)]
    worst, count = 0.0, 0
    for i in range(1000):
        gen = gens[i % len(gens)]
        K, _ = combinatorial_ball(gen, None, int(rng.integers(1, 4)))
        cplx = i % 3 == 0

        def sample():
            supp = rng.choice(len(K), size=int(rng.integers(1, len(K) + 1)), replace=False)
            vals = rng.standard_normal(len(supp))
            if cplx:
                vals = vals + 1j * rng.standard_normal(len(supp))
            return SampledFunction({K[j]: v for j, v in zip(supp, vals)})

        worst = max(worst, greens_identity_check(gen, sample(), sample()).relative_deviation)
        count += 1
    report(1, "Green's formula", worst <= 1e-12, time.perf_counter() - t0, 10,
           f"{count} pairs, max relative deviation {worst:.2e} (tol 1e-12)")


def test_criterion_02_example4():
    t0 = time.perf_counter()
    rep = example4_verify(rho=0.5, window=200, tail_from=30)
    lam_ref = math.log((3 + math.sqrt(5)) / 2)
    checks = {
        "lambda": abs(rep.lam - math.acosh(1.5)) <= 1e-14 and abs(lam_ref - math.acosh(1.5)) <= 1e-14,
        "identity": rep.lam_identity_error <= 1e-14,
        "c+m": rep.c_plus_m_exact,
        "residual": rep.residual <= 1e-10,
        "l2 tail": rep.l2_tail < 1e-6 and rep.esa_failure_evidence,
        "sc": rep.sc_evidence,
    }
    bad = [k for k, v in checks.items() if not v]
    report(2, "explicit example on Z", not bad, time.perf_counter() - t0, 5,
           f"lambda={rep.lam:.12f}, residual {rep.residual:.1e}, tail {rep.l2_tail:.1e}, "
           f"failed {bad or 'none'}")


def test_criterion_03_radial_trees():
    t0 = time.perf_counter()
    out = {}
    for d in ("3", "2^(n+2)"):
        g = radial_tree(d)
        hm = heat_mass(g, 1.0, levels=list(range(20, 41)))
        prof = radial_reduce(g, depth=40)
        cls = classify_solution(radial_solve(prof), prof)
        out[d] = (hm, radial_tree_criterion(d), cls)
    hm3, c3, s3 = out["3"]
    hm2, c2, s2 = out["2^(n+2)"]
    ok = (hm3.verdict == "SC-infinity" and 1 - hm3.limit <= 1e-6
          and hm2.verdict == "incomplete" and hm2.delta > 1e-3
          and c3.verdict == "SC" and not s3.sc_failure_evidence
          and c2.verdict == "not-SC" and s2.sc_failure_evidence)
    report(3, "radial-tree stochastic completeness", ok, time.perf_counter() - t0, 60,
           f"d=3: {hm3.verdict} 1-M={1 - hm3.limit:.1e}; d=2^(n+2): {hm2.verdict} "
           f"delta={hm2.delta:.4f}; criterion {c3.verdict}/{c2.verdict}")


def test_criterion_04_li_asymptotics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    cases = []
    for _ in range(20):
        n = int(rng.integers(5, 51))
        g = random_graph(rng, n, 0.5, connected=True, killing=0.2)
        x, y = (int(v) for v in rng.integers(0, n, 2))
        cases.append((truncate_graph(g, DIRICHLET), x, y))
    z = line_z()
    K = list(range(1, 21))
    cases.append((truncate(z, K, halo_of(z, K), DIRICHLET), 10, 10))
    rate, kern, cross = 0.0, 0.0, 0.0
    for T, x, y in cases:
        li = li_asymptotics(T, x, y, [50.0, 100.0, 200.0])
        E0, phi = dense_bottom(T)
        i = T.index
        cross = max(cross, abs(E0 - li.energy), abs(phi[i[x]] * phi[i[y]] - li.limit))
        rate = max(rate, li.rate_deviation)
        kern = max(kern, li.kernel_deviation)
    ok = rate <= 5e-3 and kern <= 1e-8 and cross <= 1e-9
    report(4, "heat kernel asymptotics at t=200", ok, time.perf_counter() - t0, 30,
           f"max |log p/t + E0| {rate:.2e} (tol 5e-3), max |e^(tE0)p - PhiPhi| {kern:.2e} "
           f"(tol 1e-8), oracle gap {cross:.1e} (tol 1e-9)")


def test_criterion_05_positivity_improving():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    agree, exact_zero = 0, True
    for i in range(200):
        n = int(rng.integers(2, 16))
        g = random_graph(rng, n, float(rng.uniform(0.05, 0.5)),
                         connected=True if i % 2 else None, killing=0.3)
        T = truncate_graph(g, NEUMANN)
        rep = positivity_improving_check(T)
        connected = _components(g) == 1
        agree += (rep.verdict == "improving") == connected
        exact_zero &= rep.max_across == 0.0
    report(5, "positivity improving iff connected", agree == 200 and exact_zero,
           time.perf_counter() - t0, 20,
           f"{agree}/200 verdicts match connectivity, cross-component entries exactly 0: {exact_zero}")


def test_criterion_06_form_ordering():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst, diag_ok, triples = 0.0, True, 0
    for i in range(50):
        n = int(rng.integers(6, 20))
        gen = random_graph(rng, n, 0.35, connected=True, killing=0.3).generator()
        K = _random_K(rng, gen, n)
        halo = halo_of(gen, K)
        bnd = inner_boundary(truncate(gen, K, halo, DIRICHLET))
        A = [x for x in bnd if rng.random() < 0.5]
        rep = ordering_check(gen, K, halo, subset=A, samples=100, seed=i)
        worst = max(worst, rep.max_violation)
        diag_ok &= rep.diagonal_gap_min >= 0
        triples += 1
    report(6, "form ordering N <= mixed <= D", worst <= 1e-12 and diag_ok,
           time.perf_counter() - t0, 10,
           f"{triples} triples x 100 vectors, max violation {worst:.1e} (tol 1e-12), "
           f"diagonal gap nonnegative: {diag_ok}")


def test_criterion_07_resolvent_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    fgap = 0.0
    for i in range(100):
        n = int(rng.integers(3, 25))
        gen = random_graph(rng, n, 0.4, connected=bool(i % 2), killing=0.3).generator()
        K = _random_K(rng, gen, n) if i % 3 else list(range(n))
        T = truncate(gen, K, halo_of(gen, K), DIRICHLET if i % 4 else NEUMANN)
        fb = f_beta_identity_check(T, float(10 ** rng.uniform(-2, 2)), rng.standard_normal(T.n))
        fgap = max(fgap, fb.form_gap, fb.identity_gap)
    # beta limit: line-Z truncation with u = v = delta_0, plus random interior pairs
    betas = (10.0, 100.0, 1000.0, 10000.0)
    z = line_z()
    K, halo = combinatorial_ball(z, 0, 10)
    T = truncate(z, K, halo, DIRICHLET)
    e0 = np.zeros(T.n)
    e0[T.index[0]] = 1.0
    limits = [resolvent_limit_check(z, T, e0, e0, betas)]
    for _ in range(10):
        g = random_graph(rng, 15, 0.3, connected=True).generator()
        K, halo = combinatorial_ball(g, 0, 1)
        T = truncate(g, K, halo, DIRICHLET)
        u = rng.standard_normal(T.n)
        v = np.where(T.boundary_weight > 0, 0.0, rng.standard_normal(T.n))
        if not v.any():
            continue
        limits.append(resolvent_limit_check(g, T, u, v, betas))
    ratio = max(r.deviations[-1] / r.scale for r in limits)
    monotone = all(r.monotone for r in limits)
    ok = fgap <= 1e-10 and ratio <= 1e-5 and monotone
    report(7, "resolvent identities", ok, time.perf_counter() - t0, 10,
           f"f_beta max gap {fgap:.1e} (tol 1e-10); beta=1e4 deviation/scale {ratio:.2e} "
           f"(tol 1e-5) over {len(limits)} cases; monotone: {monotone}")


def test_criterion_08_finite_measure_tree():
    t0 = time.perf_counter()
    rep = appendixA_demo(k=3, q=0.5, t=1.0, levels=40)
    sups = rep.resolvent_gap_sups
    stable = abs(sups[-1] - sups[-2]) <= 1e-6 * abs(sups[-1])
    checks = {
        "m(V)": abs(rep.mass_partial[-1] - 1) <= 1e-12,
        "Q(1)": rep.q_of_one == 0.0,
        "heat mass": rep.heat_mass_verdict == "incomplete",
        "Neumann mass": abs(rep.neumann_mass_value - 1) <= 1e-6,
        "resolvent gap": rep.resolvent_gap_evidence and stable,
    }
    bad = [k for k, v in checks.items() if not v]
    report(8, "finite-measure tree", not bad, time.perf_counter() - t0, 60,
           f"m(V)-1={rep.mass_partial[-1] - 1:.1e}, delta={rep.heat_mass_delta:.4f}, "
           f"M^N={rep.neumann_mass_value:.9f}, gap sup={sups[-1]:.6f}; failed {bad or 'none'}")


def test_criterion_09_dirichlet_form_axioms():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst, checks, diag_ok = 0.0, 0, True
    for i in range(50):
        n = int(rng.integers(2, 20))
        g = random_graph(rng, n, 0.4, connected=bool(i % 2), killing=0.3)
        T = truncate_graph(g, DIRICHLET if i % 3 == 0 else NEUMANN)
        u = rng.standard_normal(T.n) * float(rng.uniform(0.5, 3))
        rep = dirichlet_axioms_check(T, u, contractions=18, seed=i, tol=1e-12)
        checks += rep.checks
        worst = max(worst, rep.max_violation)
        Q = complexify(T)
        for _ in range(20):
            w = rng.standard_normal(T.n) + 1j * rng.standard_normal(T.n)
            q = Q(w, w)
            diag_ok &= q.imag == 0.0 and q.real >= 0
    report(9, "Dirichlet form axioms", worst <= 1e-12 and checks >= 1000 and diag_ok,
           time.perf_counter() - t0, 10,
           f"{checks} (graph, u, contraction) triples, max violation {worst:.1e} (tol 1e-12), "
           f"complex diagonal real and nonnegative: {diag_ok}")


def test_criterion_10_maximum_principle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    min_entry, bvp_ok = math.inf, True
    for i in range(200):
        n = int(rng.integers(5, 30))
        gen = random_graph(rng, n, 0.2, connected=True, killing=0.3).generator()
        K, halo = combinatorial_ball(gen, 0, int(rng.integers(1, 3)))
        T = truncate(gen, K, halo, DIRICHLET)
        f = np.zeros(T.n)
        f[rng.integers(T.n)] = float(rng.uniform(0.1, 2))
        u = resolvent_apply(T, float(rng.uniform(0.1, 5)), f)
        min_entry = min(min_entry, float(u.min()))
        if halo:
            g = {y: float(rng.uniform(0, 3)) for y in halo}
            sol = bvp_solve(gen, K, halo, g, beta=float(rng.uniform(0.1, 2)))
            vals = sol.on(K)
            bvp_ok &= bool(np.all(vals >= 0) and np.all(vals <= max(g.values())))
    report(10, "maximum principle", min_entry > 0 and bvp_ok, time.perf_counter() - t0, 10,
           f"min resolvent entry {min_entry:.2e} over 200 truncations, 0 <= u <= max g: {bvp_ok}")


def test_criterion_11_boundedness():
    t0 = time.perf_counter()
    z = line_z()
    rep = boundedness_report(z, Exhaustion.up_to(z, 5), 5)
    radii = []
    for r in (10, 100, 2000):
        K, halo = combinatorial_ball(z, 0, r)
        radii.append(spectral_radius(truncate(z, K, halo, DIRICHLET)))
    ex = boundedness_report(example4(), Exhaustion(example4(), radii=(10, 20, 40, 80)), 4)
    ok = (rep.verdict == "bounded" and rep.sup == 2.0 and abs(radii[-1] - 4) <= 1e-6
          and radii == sorted(radii) and ex.verdict == "unbounded-evidence")
    report(11, "boundedness characterization", ok, time.perf_counter() - t0, 10,
           f"line-Z {rep.verdict} sup Deg={rep.sup}, spectral radii {[f'{r:.8f}' for r in radii]}, "
           f"example family {ex.verdict}")


def test_criterion_12_cheeger():
    t0 = time.perf_counter()
    paths = all(cheeger_bruteforce(path_graph(n)).alpha == 1.0 / (n - 1) for n in range(2, 11))
    k4 = cheeger_bruteforce(complete_graph(4)).alpha == 1.0
    rng = np.random.default_rng(12)
    match = 0
    for n in range(3, 15):
        g = random_graph(rng, n, 0.3, connected=bool(n % 2), weights=(1.0, 1.0))
        if len(g.edges) == 0:
            g = path_graph(n)
        a = cheeger_bruteforce(g, connected_only=True)
        b = cheeger_bruteforce(g, connected_only=False)
        match += a.alpha == b.alpha
    report(12, "Cheeger brute force", paths and k4 and match == 12, time.perf_counter() - t0, 120,
           f"paths 1/(n-1): {paths}, K4 = 1: {k4}, connected = unrestricted on {match}/12 graphs")
