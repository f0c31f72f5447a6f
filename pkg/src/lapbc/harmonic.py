"""Solutions of (L̃ + 1)u = 0: boundary value problems, radial recurrences, classification.

Verdicts about infinite graphs are drawn from finite levels and are always
reported as evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .formal import SampledFunction, _as_function, apply_formal
from .graph import Exhaustion, RadialProfile, as_generator, halo_of, radial_reduce
from .spectral import SolverError, resolvent_apply
from .truncation import DIRICHLET, NEUMANN, radial_operator, truncate

STABLE_RTOL = 1e-8


# ---------------------------------------------------------------------------
# boundary value problems


def bvp_solve(gen, K, halo=None, g=None, *, beta: float = 1.0) -> SampledFunction:
    """Solve (L̃ + β)u = 0 on K with u = g on the halo.

    ``g`` maps halo vertices to values (missing ones count as 0). The result
    holds u on K and g on the halo, and is 0 elsewhere.
    """
    gen = as_generator(gen)
    K = tuple(K)
    if halo is None:
        halo = halo_of(gen, K)
    g = _as_function(g if g is not None else {})
    T = truncate(gen, K, halo, DIRICHLET)
    Kset = set(K)
    rhs = np.zeros(T.n)
    for i, x in enumerate(K):
        for y, b in gen.neighbors(x):
            if y not in Kset:
                rhs[i] += b * g(y)
        rhs[i] /= T.m[i]
    A = sp.csc_matrix(T.matrix + beta * sp.identity(T.n))
    u = spla.spsolve(A, rhs) if T.n > 1 else rhs / A.toarray()[0]
    u = np.atleast_1d(u)
    res = A @ u - rhs
    if np.linalg.norm(res, np.inf) > 1e-8 * max(1.0, np.linalg.norm(rhs, np.inf)):
        raise SolverError("boundary value solve failed on a diagonally dominant system")
    vals = {y: g(y) for y in halo}
    vals.update(zip(K, u.tolist()))
    return SampledFunction(vals, 0.0)


def residual(gen, u, K, beta: float = 1.0) -> np.ndarray:
    """(L̃ + β)u evaluated on K."""
    gen = as_generator(gen)
    u = _as_function(u)
    return np.array([apply_formal(gen, u, x) + beta * u(x) for x in K])


# ---------------------------------------------------------------------------
# radial recurrence


@dataclass(frozen=True)
class RadialSolution:
    """Radial solution of (J + 1)u = 0 with u(0) = u0.

    Stored as log u and the step logs log(u(n+1)/u(n)), so neither huge
    values nor nearly equal neighbors lose precision.
    """

    log_u: np.ndarray
    log_ratio: np.ndarray

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_u)

    def __len__(self):
        return len(self.log_u)


def radial_solve(profile: RadialProfile, u0: float = 1.0) -> RadialSolution:
    """u(n+1) = u(n) + [B_{n-1}(u(n) − u(n−1)) + (C_n + M_n) u(n)] / B_n, u(0) = u0.

    Iterated on the ratios r_n = u(n+1)/u(n), which never overflow; the
    log of u is accumulated from them.
    """
    M, B, C = profile.mass, profile.out_weight, profile.killing
    N = profile.depth
    if u0 <= 0:
        raise ValueError("u0 must be positive")
    lr = np.empty(N)
    for n in range(N):
        # B_{n-1}(1 - u(n-1)/u(n)) = -B_{n-1} expm1(-log r_{n-1})
        back = 0.0 if n == 0 else -B[n - 1] * math.expm1(-lr[n - 1])
        lr[n] = math.log1p((back + C[n] + M[n]) / B[n])
    log_u = np.concatenate(([math.log(u0)], math.log(u0) + np.cumsum(lr)))
    return RadialSolution(log_u, lr)


def radial_residual(profile: RadialProfile, sol: RadialSolution) -> np.ndarray:
    """(J + 1)u / u at indices 0..depth-1, relative to the size of its terms."""
    lr = sol.log_ratio
    n = len(lr)
    M, B, C = profile.mass[:n], profile.out_weight[:n], profile.killing[:n]
    down = np.concatenate(([0.0], -np.expm1(-lr[:-1])))  # 1 - u(n-1)/u(n)
    up = np.expm1(lr)  # u(n+1)/u(n) - 1
    Bm = np.concatenate(([0.0], B[:-1]))
    terms = (Bm * down - B * up + C) / M + 1.0
    scale = (np.abs(Bm * down) + np.abs(B * up) + C) / M + 1.0
    return terms / scale


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class SolutionClass:
    l2_partial: np.ndarray
    sup_partial: np.ndarray
    square_summable_evidence: bool
    bounded_evidence: bool
    growing: bool
    growth_rate: float
    verdict: str  # "classified" | "trivial" | "inconclusive"

    @property
    def esa_failure_evidence(self) -> bool:
        return self.verdict == "classified" and self.square_summable_evidence

    @property
    def sc_failure_evidence(self) -> bool:
        return self.verdict == "classified" and self.bounded_evidence


def _stabilized(seq: np.ndarray, rtol: float, window: int = 3) -> bool:
    if len(seq) < window + 1 or not np.all(np.isfinite(seq[-window - 1:])):
        return False
    tail = seq[-window - 1:]
    return bool(np.all(np.abs(np.diff(tail)) <= rtol * max(abs(tail[-1]), 1e-300)))


def classify_shells(values_per_shell, mass_per_shell, *, rtol: float = STABLE_RTOL) -> SolutionClass:
    """Classify a solution given its values and measures on successive shells.

    Shell 0 is the innermost set; level n is the union of shells 0..n. A flag
    is granted when the relevant partial quantity changes by less than
    ``rtol`` (relative) over the last three levels.
    """
    if len(values_per_shell) < 3:
        return SolutionClass(np.array([]), np.array([]), False, False, False, math.nan,
                             "inconclusive")
    with np.errstate(over="ignore", invalid="ignore"):
        l2 = np.cumsum([float(np.sum(np.abs(np.asarray(v)) ** 2 * np.asarray(m)))
                        for v, m in zip(values_per_shell, mass_per_shell)])
        sup = np.maximum.accumulate([float(np.max(np.abs(v))) for v in values_per_shell])
    if sup[0] <= 1e-12:
        return SolutionClass(l2, sup, False, False, False, 0.0, "trivial")
    sq = _stabilized(l2, rtol)
    bd = _stabilized(sup, rtol)
    k = min(5, len(sup) - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = float((np.log(sup[-1]) - np.log(sup[-1 - k])) / k) if np.isfinite(sup[-1]) else math.inf
    growing = not bd and bool(sup[-1] > sup[-2])
    return SolutionClass(l2, sup, sq, bd, growing, rate, "classified")


def classify_solution(u, m=None, levels=None, *, rtol: float = STABLE_RTOL) -> SolutionClass:
    """Classify a solution of (L̃ + 1)u = 0 from finite data.

    ``u`` is either a :class:`RadialSolution` (then ``m`` is the
    :class:`RadialProfile` and each sphere is a shell) or a function on V
    (then ``m`` is a generator and ``levels`` a sequence of nested vertex sets).
    """
    if isinstance(u, RadialSolution):
        prof = m
        with np.errstate(over="ignore"):
            vals = [np.array([v]) for v in u.values]
        mass = [np.array([x]) for x in prof.mass[: len(vals)]]
        return classify_shells(vals, mass, rtol=rtol)
    gen = as_generator(m)
    u = _as_function(u)
    if isinstance(levels, Exhaustion):
        levels = [lv.vertices for lv in levels]
    seen: set = set()
    vals, mass = [], []
    for K in levels:
        shell = [x for x in K if x not in seen]
        seen.update(shell)
        vals.append(np.array([u(x) for x in shell]))
        mass.append(np.array([gen.m(x) for x in shell]))
    return classify_shells(vals, mass, rtol=rtol)


# ---------------------------------------------------------------------------
# Neumann/Dirichlet resolvent gap


@dataclass(frozen=True)
class ResolventGap:
    sup_norms: tuple
    min_entries: tuple
    evidence: bool
    threshold: float
    label: str = "evidence for Q^(N) != Q^(D) from finite levels; not a proof"


def resolvent_gap(gen, exhaustion=None, x=None, beta: float = 1.0, levels: int = 8, *,
                  threshold: float = 1e-6, rtol: float = 1e-6, radial: bool | None = None,
                  radii=None) -> ResolventGap:
    """sup |((L^N_K + β)^{-1} − (L^D_K + β)^{-1}) δ_x| across exhaustion levels.

    Evidence is reported when the sup norms stay above ``threshold`` and
    change by less than ``rtol`` (relative) over the last three levels. For
    spherically symmetric generators and x at the root the sphere-reduced
    operators are used.
    """
    gen = as_generator(gen)
    x = gen.root if x is None else x
    if radial is None:
        radial = gen.symmetric and gen.profile_fn is not None and x == gen.root and exhaustion is None
    sups, mins = [], []
    if radial:
        radii = list(radii) if radii is not None else list(range(1, levels + 1))
        for N in radii:
            prof = radial_reduce(gen, depth=N)
            TD, TN = radial_operator(prof, DIRICHLET), radial_operator(prof, NEUMANN)
            d = _gap_vector(TD, TN, 0, beta)
            sups.append(float(np.max(np.abs(d))))
            mins.append(float(d.min()))
    else:
        if exhaustion is None:
            exhaustion = Exhaustion.up_to(gen, levels, root=x)
        for lv in exhaustion:
            TD = truncate(gen, lv.vertices, lv.halo, DIRICHLET)
            TN = truncate(gen, lv.vertices, lv.halo, NEUMANN)
            d = _gap_vector(TD, TN, TD.index[x], beta)
            sups.append(float(np.max(np.abs(d))))
            mins.append(float(d.min()))
    arr = np.array(sups)
    evidence = bool(len(arr) >= 4 and np.all(arr[-3:] > threshold) and _stabilized(arr, rtol))
    return ResolventGap(tuple(sups), tuple(mins), evidence, threshold)


def _gap_vector(TD, TN, i, beta):
    e = np.zeros(TD.n)
    e[i] = 1.0
    return resolvent_apply(TN, beta, e, check=False) - resolvent_apply(TD, beta, e, check=False)


# ---------------------------------------------------------------------------
# orthogonality and maximum principle


@dataclass(frozen=True)
class OrthogonalityCheck:
    pairing: complex
    deviation: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.deviation <= self.bound


def orthogonality_check(gen, w, v, *, rtol: float = 1e-9) -> OrthogonalityCheck:
    """Q̃(w, v) + ⟨w, v⟩ for finitely supported v, by direct finite sums.

    Zero whenever (L̃ + 1)w = 0 on supp v. The tolerance scales with ‖v‖ and
    the energy of w on the edges touching supp v.
    """
    gen = as_generator(gen)
    w, v = _as_function(w), _as_function(v)
    if not v.finitely_supported:
        raise ValueError("v must be finitely supported")
    supp = sorted(v.values)
    region = set(supp)
    for x in supp:
        region.update(y for y, _ in gen.neighbors(x))
    pairing = 0.0
    energy = 0.0
    vnorm = 0.0
    for x in sorted(region):
        wx, vx = w(x), v(x)
        for y, b in gen.neighbors(x):
            vy = v(y)
            if vx == 0 and vy == 0:
                continue
            pairing += 0.5 * b * (wx - w(y)) * np.conj(vx - vy)
            energy += 0.5 * b * abs(wx - w(y)) ** 2
        pairing += (gen.c(x) + gen.m(x)) * wx * np.conj(vx)
        if vx != 0:
            energy += (gen.c(x) + gen.m(x)) * abs(wx) ** 2
            vnorm += abs(vx) ** 2 * gen.m(x)
    bound = rtol * math.sqrt(vnorm) * max(math.sqrt(energy), 1.0)
    return OrthogonalityCheck(complex(pairing), abs(pairing), bound)


@dataclass(frozen=True)
class MaxPrincipleReport:
    components: int
    violations: tuple
    precondition_ok: bool

    @property
    def ok(self) -> bool:
        return not self.violations


def max_principle_check(gen, K, u, *, beta: float = 1.0, tol: float = 0.0) -> MaxPrincipleReport:
    """On each component of K: u ≡ 0 or u > 0, given u ≥ 0 and (L̃ + β)u ≥ 0 on K."""
    gen = as_generator(gen)
    u = _as_function(u)
    K = tuple(K)
    idx = {x: i for i, x in enumerate(K)}
    rows, cols = [], []
    for x in K:
        for y, _ in gen.neighbors(x):
            if y in idx:
                rows.append(idx[x])
                cols.append(idx[y])
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(K), len(K)))
    ncomp, labels = connected_components(A, directed=False)
    vals = np.array([u(x) for x in K], dtype=float)
    res = residual(gen, u, K, beta)
    pre = bool(np.all(vals >= 0) and np.all(res >= -1e-12 * max(1.0, np.abs(vals).max(initial=0))))
    bad = []
    for comp in range(ncomp):
        sel = vals[labels == comp]
        if np.all(sel == 0):
            continue
        if not np.all(sel > tol):
            where = [K[i] for i in np.flatnonzero(labels == comp) if vals[i] <= tol]
            bad.append((comp, tuple(where)))
    return MaxPrincipleReport(ncomp, tuple(bad), pre)
