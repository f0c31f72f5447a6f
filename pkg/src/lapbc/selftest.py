"""Invariant suite over the built-in family matrix, used by ``lapbc selftest``."""

from __future__ import annotations

import numpy as np

from .formal import SampledFunction, apply_formal, greens_identity_check, laplacian_of_delta
from .graph import build_family, combinatorial_ball, random_graph, validate

FAMILIES = ("line-Z", "regular-tree:k=3", "radial-tree:d=n+2", "fm-tree:k=3,q=0.5",
            "example4:rho=0.5,A=0.3333333333333333")


def _oracle_symmetry(gen, r=3):
    K, halo = combinatorial_ball(gen, None, r)
    for x in K:
        for y, b in gen.neighbors(x):
            if dict(gen.neighbors(y)).get(x) != b:
                return False
    return True


def run_selftest(seed: int = 0, samples: int = 20):
    """List of (name, passed, detail) for every invariant on every family."""
    from .completeness import heat_mass
    from .forms import dirichlet_axioms_check
    from .geometry import cheeger_bruteforce
    from .graph import path_graph
    from .spectral import dense_semigroup_oracle, f_beta_identity_check, semigroup_apply
    from .truncation import DIRICHLET, NEUMANN, ordering_check, truncate, truncate_graph

    rng = np.random.default_rng(seed)
    out = []
    for desc in FAMILIES:
        gen = build_family(desc)
        out.append((f"{desc}: neighbor symmetry", _oracle_symmetry(gen), ""))
        K, halo = combinatorial_ball(gen, None, 2)
        worst = 0.0
        for _ in range(samples):
            u = SampledFunction({x: float(rng.standard_normal()) for x in K})
            v = SampledFunction({x: float(rng.standard_normal()) for x in K})
            worst = max(worst, greens_identity_check(gen, u, v).relative_deviation)
        out.append((f"{desc}: Green's formula", worst <= 1e-12, f"max rel dev {worst:.2e}"))
        ok = all(laplacian_of_delta(gen, x, z) == apply_formal(gen, SampledFunction.delta(x), z)
                 for x in K[:4] for z in K)
        out.append((f"{desc}: delta formula", ok, ""))
        rep = ordering_check(gen, K, halo, samples=samples, seed=seed)
        out.append((f"{desc}: form ordering", rep.ok, f"max violation {rep.max_violation:.2e}"))
        T = truncate(gen, K, halo, DIRICHLET)
        f = np.abs(rng.standard_normal(T.n))
        if T.n <= 200 and np.max(T.diagonal) < 1e4:
            dev = float(np.max(np.abs(semigroup_apply(T, 0.7, f) - dense_semigroup_oracle(T, 0.7) @ f)))
            out.append((f"{desc}: semigroup vs dense", dev <= 1e-9, f"{dev:.2e}"))
        fb = f_beta_identity_check(T, 1.0, rng.standard_normal(T.n))
        out.append((f"{desc}: f_beta identity", fb.form_gap <= 1e-10 and fb.identity_gap <= 1e-10,
                    f"{fb.form_gap:.2e} {fb.identity_gap:.2e}"))
        hm = heat_mass(gen, 1.0, levels=4)
        vals = np.array(hm.values)
        ok = bool(np.all(vals <= 1 + 1e-10) and np.all(vals >= 0) and np.all(np.diff(vals) >= -1e-10))
        out.append((f"{desc}: heat mass bounds", ok, f"last {vals[-1]:.6g}"))

    for i in range(samples):
        g = random_graph(rng, int(rng.integers(3, 12)), 0.4, connected=bool(i % 2), killing=0.3)
        out.append((f"random {i}: validation", validate(g).ok, ""))
        T = truncate_graph(g, NEUMANN)
        rep = dirichlet_axioms_check(T, rng.standard_normal(T.n) * 2, contractions=10, seed=i)
        out.append((f"random {i}: Markov property", rep.ok, f"{rep.max_violation:.2e}"))
    for n in range(2, 11):
        a = cheeger_bruteforce(path_graph(n)).alpha
        out.append((f"path {n}: Cheeger", a == 1.0 / (n - 1), f"{a!r}"))
    return out
