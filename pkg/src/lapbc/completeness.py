"""Heat mass M_t, stochastic completeness at infinity, and the explicit Z example."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .formal import apply_formal
from .graph import (LAMBDA_EXAMPLE4, Exhaustion, as_generator, example4, line_z,
                    radial_reduce, sequence_from_expr)
from .harmonic import classify_shells
from .spectral import semigroup_with_integral
from .truncation import DIRICHLET, NEUMANN, radial_operator, truncate

SC_TOL = 1e-6
INCOMPLETE_GAP = 1e-3


def aitken(a: float, b: float, c: float) -> float:
    """Aitken Δ² extrapolation of the last three terms; falls back to c."""
    d1, d2 = b - a, c - b
    denom = d2 - d1
    if denom == 0 or not math.isfinite(denom) or d1 * d2 <= 0:
        return c
    est = c - d2 * d2 / denom
    # only trust extrapolation that moves in the direction of monotone travel
    if (est - c) * d2 < 0:
        return c
    return est


@dataclass
class HeatMassReport:
    t: float
    x: object
    levels: list
    values: list
    semigroup_terms: list
    killing_terms: list
    limit: float
    verdict: str  # "SC-infinity" | "incomplete" | "inconclusive"
    delta: float
    boundary: str = "dirichlet"
    notes: list = field(default_factory=list)

    def to_json(self) -> str:
        d = {"t": self.t, "x": repr(self.x), "levels": self.levels, "values": self.values,
             "limit": self.limit, "verdict": self.verdict, "delta": self.delta,
             "boundary": self.boundary, "notes": self.notes}
        return json.dumps(d, sort_keys=True)


def _levels(gen, x, levels, exhaustion, radial):
    """Yield (label, TruncatedOperator factory args, index of x)."""
    if radial:
        depths = list(levels) if not isinstance(levels, int) else list(range(1, levels + 1))
        for N in depths:
            yield N, ("radial", radial_reduce(gen, depth=N)), 0
    else:
        if exhaustion is None:
            exhaustion = Exhaustion.up_to(gen, levels, root=x)
        for lv in exhaustion:
            yield lv.radius, ("balls", lv), lv.vertices.index(x)


def _mass_on_level(gen, data, bc):
    kind, obj = data
    if kind == "radial":
        return radial_operator(obj, bc)
    return truncate(gen, obj.vertices, obj.halo, bc)


def _use_radial(gen, x, exhaustion, radial):
    if radial is not None:
        return radial
    return gen.symmetric and gen.profile_fn is not None and x == gen.root and exhaustion is None


def _verdict(values, sc_tol, gap, stab):
    vals = np.asarray(values)
    if len(vals) >= 3:
        limit = aitken(*vals[-3:])
    else:
        limit = float(vals[-1])
    limit = float(min(limit, 1.0))
    delta = 1.0 - limit
    stabilized = len(vals) >= 2 and abs(vals[-1] - vals[-2]) <= stab
    if not stabilized and len(vals) >= 3:
        # geometric decay of the increments with a remaining tail well below delta
        d1, d2 = vals[-2] - vals[-3], vals[-1] - vals[-2]
        if d1 > 0 and d2 > 0 and d2 / d1 < 0.9:
            r = d2 / d1
            stabilized = d2 * r / (1 - r) <= 0.1 * delta
    if delta <= sc_tol:
        return limit, "SC-infinity", delta
    if delta >= gap and stabilized:
        return limit, "incomplete", delta
    return limit, "inconclusive", delta


def heat_mass(gen, t: float, x=None, levels=8, *, exhaustion: Exhaustion | None = None,
              radial: bool | None = None, bc=DIRICHLET, sc_tol: float = SC_TOL,
              gap: float = INCOMPLETE_GAP, stab: float = 1e-6) -> HeatMassReport:
    """M_t(x) = (e^{-tL} 1)(x) + ∫_0^t (e^{-sL} c/m)(x) ds on Dirichlet truncations.

    ``levels`` is a level count or an explicit list of depths (radial) and
    the exhaustion defaults to combinatorial balls around ``x``. For
    spherically symmetric generators with ``x`` at the root, the
    sphere-reduced operator is used, which is exact for the radial data 1
    and c/m.
    """
    gen = as_generator(gen)
    if not t > 0:
        raise ValueError("t must be positive")
    x = gen.root if x is None else x
    radial = _use_radial(gen, x, exhaustion, radial)
    labels, vals, semi, kill = [], [], [], []
    for label, data, i in _levels(gen, x, levels, exhaustion, radial):
        T = _mass_on_level(gen, data, bc)
        f, J = semigroup_with_integral(T, t, np.ones(T.n), T.c / T.m)
        # 1 minus the flux through the truncation boundary; equal to f + J but
        # exact for conservative truncations and stable on stiff ones
        _, F = semigroup_with_integral(T, t, np.zeros(T.n), T.kept_boundary_weight / T.m)
        labels.append(label)
        semi.append(float(f[i]))
        kill.append(float(J[i]))
        vals.append(float(1.0 - F[i]))
    limit, verdict, delta = _verdict(vals, sc_tol, gap, stab)
    notes = ["sphere-reduced operator" if radial else "combinatorial balls"]
    return HeatMassReport(t, x, labels, vals, semi, kill, limit, verdict, delta,
                          str(bc), notes)


def neumann_mass(gen, t: float, x=None, levels=8, *, exhaustion: Exhaustion | None = None,
                 radial: bool | None = None) -> HeatMassReport:
    """M_t^(N) on Neumann truncations.

    Heuristic: Neumann truncations need not converge to the Neumann
    Laplacian, and the values carry no monotonicity guarantee.
    """
    rep = heat_mass(gen, t, x, levels, exhaustion=exhaustion, radial=radial, bc=NEUMANN)
    rep.notes.append("heuristic: Neumann truncations, no monotonicity guarantee")
    return rep


# ---------------------------------------------------------------------------
# radial trees


@dataclass(frozen=True)
class RadialCriterion:
    partial_sums: np.ndarray
    verdict: str  # "SC" | "not-SC" | "inconclusive"
    tail_estimate: float


def radial_tree_criterion(d, N: int = 200) -> RadialCriterion:
    """Partial sums of Σ 1/d_n and a divergence verdict.

    Geometrically decaying terms (ratio of consecutive terms below 0.99 over
    the tail) converge; terms decaying no faster than n^{-1.05} diverge;
    anything in between is inconclusive.
    """
    seq = sequence_from_expr(d) if isinstance(d, str) else d
    terms = np.array([1.0 / seq(n) for n in range(N + 1)])
    partial = np.cumsum(terms)
    tail = terms[N // 2:]
    ratios = tail[1:] / tail[:-1]
    ns = np.arange(N // 2, N + 1, dtype=float)
    ns[ns == 0] = 1.0
    slope = -np.polyfit(np.log(ns), np.log(tail), 1)[0]
    if np.all(ratios < 0.99):
        r = float(ratios.max())
        return RadialCriterion(partial, "not-SC", float(terms[-1] * r / (1 - r)))
    if slope <= 1.05:
        return RadialCriterion(partial, "SC", math.inf)
    if slope >= 1.5:
        p = slope
        return RadialCriterion(partial, "not-SC", float(terms[-1] * N / (p - 1)))
    return RadialCriterion(partial, "inconclusive", math.nan)


# ---------------------------------------------------------------------------
# the example on Z with c + m = 1


@dataclass
class Example4Report:
    lam: float
    lam_identity_error: float
    c_plus_m_exact: bool
    residual: float
    l2_partial: float
    l2_tail: float
    esa_failure_evidence: bool
    fundamental_growth: tuple
    sc_evidence: bool
    equivalence_error: float
    window: int

    @property
    def passed(self) -> bool:
        return (self.c_plus_m_exact and self.residual <= 1e-10 and self.esa_failure_evidence
                and self.sc_evidence and self.equivalence_error <= 1e-10)

    def as_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


def _fundamental_solutions(W: int):
    """Solutions of (Δ̃ + 1)w = 0 on Z with (w(-1), w(0)) = (1, 0) and (0, 1), on -W..W."""
    out = []
    for init in ((1.0, 0.0), (0.0, 1.0)):
        w = {-1: init[0], 0: init[1]}
        for x in range(0, W):
            w[x + 1] = 3.0 * w[x] - w[x - 1]
        for x in range(-1, -W, -1):
            w[x - 1] = 3.0 * w[x] - w[x + 1]
        out.append(w)
    return out


def example4_verify(rho: float = 0.5, A: float = 1.0 / 3.0, window: int = 50,
                    tail_from: int = 30, seed: int = 0) -> Example4Report:
    """Run the checks of the Z example with m = min(1, φ/u²), c = max(0, u²/φ − 1) m."""
    gen = example4(rho, A)
    lam = LAMBDA_EXAMPLE4
    lam_err = abs(math.exp(lam) + math.exp(-lam) - 2.0 - 1.0)
    xs = range(-window, window + 1)
    cm_exact = all(gen.c(x) + gen.m(x) == 1.0 and 0 < gen.m(x) <= 1 and gen.c(x) >= 0 for x in xs)

    u = lambda x: math.exp(lam * x)  # noqa: E731
    res = max(abs(apply_formal(gen, u, x) + u(x)) / max(1.0, u(x) / gen.m(x))
              for x in range(-window + 1, window))

    shells = [[0]] + [[-k, k] for k in range(1, window + 1)]
    vals = [np.array([u(x) for x in s]) for s in shells]
    mass = [np.array([gen.m(x) for x in s]) for s in shells]
    cls = classify_shells(vals, mass, rtol=1e-8)
    l2 = float(cls.l2_partial[-1])
    l2_tail = float(cls.l2_partial[-1] - cls.l2_partial[tail_from])

    base = line_z()
    fund = _fundamental_solutions(window)
    growth = []
    bounded = False
    for w in fund:
        sh = [np.array([w[x] for x in s]) for s in shells]
        cl = classify_shells(sh, [np.ones(len(s)) for s in shells])
        growth.append(float(cl.sup_partial[-1]))
        bounded = bounded or cl.bounded_evidence
    sc_ev = not bounded and all(g > 1e6 for g in growth)

    rng = np.random.default_rng(seed)
    wr = {x: float(v) for x, v in zip(range(-window - 1, window + 2),
                                      rng.standard_normal(2 * window + 3))}
    eq = 0.0
    for x in range(-window, window + 1):
        lhs = apply_formal(gen, wr, x) + wr[x]
        rhs = (apply_formal(base, wr, x) + wr[x]) / gen.m(x)
        eq = max(eq, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return Example4Report(lam, lam_err, cm_exact, res, l2, l2_tail,
                          cls.square_summable_evidence and l2_tail < 1e-6, tuple(growth), sc_ev,
                          eq, window)
