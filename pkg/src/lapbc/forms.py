"""Energy forms: exhaustion partial sums of Q^(N), the form inner product, Markov checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .formal import CoverageError, SampledFunction, _as_function
from .graph import Exhaustion, as_generator
from .truncation import TruncatedOperator

DIVERGENCE_CAP = 1e12


@dataclass(frozen=True)
class FormValue:
    """Value of Q^(N)(u, u) seen through an exhaustion.

    ``partial_sums[i]`` is the sum over edges inside level i plus killing on
    level i. ``value`` is the last partial sum, or ``inf`` when divergence
    was detected.
    """

    value: float
    partial_sums: tuple
    monotone: bool
    diverges: bool = False

    @property
    def finite(self) -> bool:
        return not self.diverges


def _level_sets(gen, exhaustion, level):
    if isinstance(exhaustion, Exhaustion):
        levels = exhaustion.levels
        if level is not None:
            levels = levels[: level + 1]
        return [lv.vertices for lv in levels]
    # a plain sequence of vertex sets
    sets = [tuple(s) for s in exhaustion]
    return sets if level is None else sets[: level + 1]


def _edge_sum(gen, K, u, v):
    Kset = set(K)
    acc = 0.0
    for x in K:
        ux, vx = u(x), v(x)
        for y, b in gen.neighbors(x):
            if y in Kset:
                acc += 0.5 * b * (ux - u(y)) * np.conj(vx - v(y))
        acc += gen.c(x) * ux * np.conj(vx)
    return acc


def qn_partial(gen, u, exhaustion, level: int | None = None, *,
               cap: float = DIVERGENCE_CAP) -> FormValue:
    """Partial sums of ½ Σ b |u(x) − u(y)|² + Σ c |u|² over the exhaustion levels.

    Divergence is declared when the partial sums exceed ``cap`` while
    increasing over the last three levels.
    """
    gen = as_generator(gen)
    u = _as_function(u)
    sums = []
    for K in _level_sets(gen, exhaustion, level):
        try:
            sums.append(float(np.real(_edge_sum(gen, K, u, u))))
        except CoverageError as exc:
            raise CoverageError(f"u not defined on level: {exc}") from None
    arr = np.array(sums)
    monotone = bool(np.all(np.diff(arr) >= -1e-12 * np.maximum(1.0, np.abs(arr[1:]))))
    diverges = (len(arr) >= 3 and arr[-1] > cap and np.all(np.diff(arr[-3:]) > 0))
    return FormValue(math.inf if diverges else float(arr[-1]), tuple(sums), monotone, diverges)


def q_inner(gen, u, v, exhaustion, level: int | None = None) -> complex:
    """Q^(N)(u, v) + ⟨u, v⟩ summed over one exhaustion level (the last by default)."""
    gen = as_generator(gen)
    u, v = _as_function(u), _as_function(v)
    K = _level_sets(gen, exhaustion, level)[-1]
    form = _edge_sum(gen, K, u, v)
    l2 = sum(u(x) * np.conj(v(x)) * gen.m(x) for x in K)
    return complex(form + l2)


# ---------------------------------------------------------------------------
# Markov property on finite forms


def _form_of(source) -> Callable:
    """Real bilinear form (u, v) -> Q(u, v) from a truncated operator or a callable."""
    if isinstance(source, TruncatedOperator):
        return lambda a, b: float(np.real(source.inner(source.apply(a), b)))
    if callable(source):
        return source
    raise TypeError("expected a TruncatedOperator or a bilinear callable")


def piecewise_linear_contraction(rng: np.random.Generator, span: float, pieces: int = 6):
    """Random normal contraction: piecewise linear, slopes in [-1, 1], C(0) = 0."""
    knots = np.sort(rng.uniform(-span, span, size=pieces - 1))
    knots = np.concatenate(([-np.inf], knots, [np.inf]))
    slopes = rng.uniform(-1.0, 1.0, size=pieces)
    # value at the knot left of 0 chosen so that C(0) = 0
    k0 = int(np.searchsorted(knots, 0.0, side="right") - 1)

    def C(s):
        s = np.asarray(s, float)
        out = np.empty_like(s)
        for idx, val in np.ndenumerate(s):
            out[idx] = _integrate_slopes(knots, slopes, k0, val)
        return out

    return C


def _integrate_slopes(knots, slopes, k0, s):
    # ∫_0^s of the step function of slopes
    if s >= 0:
        total, pos, k = 0.0, 0.0, k0
        while True:
            right = min(knots[k + 1], s)
            total += slopes[k] * (right - pos)
            if right >= s:
                return total
            pos, k = right, k + 1
    total, pos, k = 0.0, 0.0, k0
    while True:
        left = max(knots[k], s)
        total -= slopes[k] * (pos - left)
        if left <= s:
            return total
        pos, k = left, k - 1


@dataclass(frozen=True)
class AxiomReport:
    checks: int
    max_violation: float
    violations: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations


def dirichlet_axioms_check(source, u, contractions: int = 20, seed: int = 0,
                           tol: float = 1e-12) -> AxiomReport:
    """Q(u₊) ≤ Q(u), Q(u∧1) ≤ Q(u) and Q(Cu) ≤ Q(u) for sampled normal contractions C.

    Violations are measured relative to max(Q(u), 1).
    """
    u = np.asarray(u)
    if np.iscomplexobj(u):
        if np.any(np.imag(u) != 0):
            raise TypeError("contraction tests need real-valued u")
        u = np.real(u)
    u = u.astype(float)
    Q = _form_of(source)
    rng = np.random.default_rng(seed)
    qu = Q(u, u)
    scale = max(abs(qu), 1.0)
    cases = [("positive part", np.maximum(u, 0.0)), ("min with 1", np.minimum(u, 1.0))]
    span = float(np.max(np.abs(u))) if u.size else 1.0
    for i in range(contractions):
        C = piecewise_linear_contraction(rng, max(span, 1e-300))
        cases.append((f"contraction {i}", C(u)))
    worst, bad = 0.0, []
    for name, w in cases:
        gap = (Q(w, w) - qu) / scale
        worst = max(worst, gap)
        if gap > tol:
            bad.append((name, gap))
    return AxiomReport(len(cases), max(worst, 0.0), tuple(bad))


def complexify(real_form: Callable):
    """Sesquilinear extension of a real symmetric form.

    Q(u₁ + i v₁, u₂ + i v₂) = Q_r(u₁, u₂) + Q_r(v₁, v₂) + i (Q_r(v₁, u₂) − Q_r(u₁, v₂)).
    """
    Qf = _form_of(real_form)

    def Qr(x, y):
        # symmetrized so that the diagonal is real in floating point too
        return 0.5 * (Qf(x, y) + Qf(y, x))

    def Q(a, b):
        a = np.asarray(a, complex)
        b = np.asarray(b, complex)
        u1, v1, u2, v2 = a.real, a.imag, b.real, b.imag
        return complex(Qr(u1, u2) + Qr(v1, v2), Qr(v1, u2) - Qr(u1, v2))

    return Q
