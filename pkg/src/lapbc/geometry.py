"""Path metric with edge lengths b^{-1/2}, rays and boundary values, Cheeger constants."""

from __future__ import annotations

import heapq
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .formal import SampledFunction, _as_function, weighted_degree
from .forms import qn_partial
from .graph import Exhaustion, WeightedGraph, as_generator, combinatorial_ball, fm_tree

CHEEGER_MAX_VERTICES = 22


def max_workers() -> int:
    """Thread cap from LAPBC_THREADS (default: CPU count)."""
    env = os.environ.get("LAPBC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# path metric


@dataclass(frozen=True)
class Distance:
    value: float
    exact: bool
    expanded: int


def path_metric(gen, x, y, bound: int = 100_000) -> Distance:
    """Best-first search for d(x, y) with edge length b^{-1/2}.

    ``bound`` caps the number of expanded vertices. When it is hit, the
    smallest tentative distance on the frontier is returned as a lower
    bound with ``exact=False``.
    """
    gen = as_generator(gen)
    if bound <= 0:
        raise ValueError("search bound must be positive")
    if x == y:
        return Distance(0.0, True, 0)
    dist = {x: 0.0}
    done = set()
    counter = itertools.count()
    heap = [(0.0, next(counter), x)]
    expanded = 0
    while heap:
        d, _, z = heapq.heappop(heap)
        if z in done:
            continue
        if z == y:
            return Distance(d, True, expanded)
        if expanded >= bound:
            return Distance(d, False, expanded)
        done.add(z)
        expanded += 1
        for w, b in gen.neighbors(z):
            if b <= 0 or w in done:
                continue
            nd = d + b ** -0.5
            if nd < dist.get(w, math.inf):
                dist[w] = nd
                heapq.heappush(heap, (nd, next(counter), w))
    return Distance(math.inf, True, expanded)


# ---------------------------------------------------------------------------
# rays


@dataclass(frozen=True)
class Ray:
    """Infinite path x_0, x_1, ... given by ``vertex(n)``."""

    gen: object
    vertex: Callable[[int], object]
    name: str = "ray"

    def vertices(self, depth: int) -> list:
        return [self.vertex(n) for n in range(depth + 1)]

    def steps(self, depth: int) -> np.ndarray:
        """Edge lengths b(x_i, x_{i+1})^{-1/2}, i = 0..depth-1."""
        gen = as_generator(self.gen)
        out = []
        for n in range(depth):
            a, b = self.vertex(n), self.vertex(n + 1)
            w = dict(gen.neighbors(a)).get(b)
            if not w:
                raise ValueError(f"ray steps {a!r} -> {b!r} are not adjacent")
            out.append(w ** -0.5)
        return np.array(out)

    def lengths(self, depth: int) -> np.ndarray:
        """Cumulative lengths L_n = Σ_{i<n} b(x_i, x_{i+1})^{-1/2}, n = 0..depth."""
        return np.concatenate([[0.0], np.cumsum(self.steps(depth))])


def canonical_ray(gen) -> Ray:
    """Rightward ray on Z-like generators, leftmost-child ray on trees, n -> n on half-lines."""
    gen = as_generator(gen)
    if gen.root == ():
        return Ray(gen, lambda n: (0,) * n, "leftmost-child")
    return Ray(gen, lambda n: gen.root + n, "rightward")


def _geometric_tail(increments: np.ndarray, window: int = 5):
    """Tail bound Σ_{k>n} inc_k if increments decay at least geometrically, else None."""
    tail = increments[-window:]
    if len(tail) < 2 or np.any(tail <= 0):
        return 0.0 if np.all(tail == 0) else None
    r = float(np.max(tail[1:] / tail[:-1]))
    if r >= 0.99:
        return None
    return float(tail[-1] * r / (1 - r))


@dataclass(frozen=True)
class RayProbe:
    lengths: np.ndarray
    verdict: str  # "incomplete-evidence" | "complete-along-ray" | "inconclusive"
    tail_bound: float


def ray_completeness_probe(ray: Ray, depth: int = 40, *, cauchy_tol: float = 1e-9) -> RayProbe:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    # steps, not differences of cumulative lengths, which stall in floating point
    inc = ray.steps(depth)
    L = np.concatenate([[0.0], np.cumsum(inc)])
    tail = _geometric_tail(inc)
    if tail is not None and tail < cauchy_tol:
        return RayProbe(L, "incomplete-evidence", tail)
    # steps not shrinking (or shrinking like 1/n or slower): lengths grow without bound
    half = inc[len(inc) // 2:]
    ns = np.arange(len(inc) // 2, len(inc), dtype=float) + 1.0
    if np.all(half > 0):
        slope = -np.polyfit(np.log(ns), np.log(half), 1)[0] if len(half) > 1 else 0.0
        if slope <= 1.0 + 1e-9:
            return RayProbe(L, "complete-along-ray", math.inf)
    return RayProbe(L, "inconclusive", math.nan if tail is None else tail)


# ---------------------------------------------------------------------------
# Lipschitz bound and boundary values


def stabilized_energy(gen, u, root=None, *, start: int = 1, max_radius: int = 60,
                      tol: float = 1e-12):
    """Q^(N)(u) on growing balls until the increment drops below ``tol``.

    Returns (energy, radius) or (partial energy, None) if it did not stabilize.
    """
    gen = as_generator(gen)
    prev = None
    for r in range(start, max_radius + 1):
        K, _ = combinatorial_ball(gen, root, r)
        val = qn_partial(gen, u, [K]).value
        if prev is not None and abs(val - prev) < tol:
            return val, r
        prev = val
    return prev, None


@dataclass(frozen=True)
class LipschitzReport:
    energy: float
    max_ratio: float
    verdict: str  # "ok" | "violated" | "inconclusive"
    ratios: tuple = ()


def lipschitz_check(gen, u, pairs, *, energy: float | None = None, root=None,
                    bound: int = 100_000, max_radius: int = 60) -> LipschitzReport:
    """max |u(x) − u(y)| / (√Q^(N)(u) · d(x, y)) over the given pairs."""
    gen = as_generator(gen)
    u = _as_function(u)
    if energy is None:
        energy, r = stabilized_energy(gen, u, root, max_radius=max_radius)
        if r is None:
            return LipschitzReport(energy, math.nan, "inconclusive")
    ratios = []
    for x, y in pairs:
        diff = abs(u(x) - u(y))
        if diff == 0:
            ratios.append(0.0)
            continue
        d = path_metric(gen, x, y, bound)
        if energy <= 0 or d.value == 0:
            ratios.append(math.inf)
            continue
        ratios.append(diff / (math.sqrt(energy) * d.value))
    worst = max(ratios) if ratios else 0.0
    return LipschitzReport(energy, worst, "ok" if worst <= 1 + 1e-9 else "violated",
                           tuple(ratios))


@dataclass(frozen=True)
class BoundaryValue:
    value: float
    certificate: float
    certified_by_energy: bool
    samples: np.ndarray = field(repr=False)


def boundary_value(gen, u, ray: Ray, depth: int = 40, *, energy: float | None = None) -> BoundaryValue:
    """u_∞ along a ray of finite length.

    The certificate bounds |u(x_depth) − u_∞|. With finite energy it is
    √Q^(N)(u) times the remaining ray length; otherwise it is the geometric
    tail of the observed increments of u along the ray.
    """
    probe = ray_completeness_probe(ray, depth)
    if probe.verdict != "incomplete-evidence":
        raise ValueError("no boundary point along this ray")
    u = _as_function(u)
    vals = np.array([u(x) for x in ray.vertices(depth)], dtype=float)
    if energy is not None and math.isfinite(energy):
        return BoundaryValue(float(vals[-1]), math.sqrt(energy) * probe.tail_bound, True, vals)
    inc = np.abs(np.diff(vals))
    # trailing zero increments: u has settled to floating-point resolution
    nz = np.flatnonzero(inc)
    if len(nz) and nz[-1] < len(inc) - 1:
        tail = _geometric_tail(inc[:nz[-1] + 1])
        if tail is None:
            # eventually constant (e.g. finitely supported) after a long enough run
            if len(inc) - 1 - nz[-1] < 5:
                raise ValueError("u does not settle along the ray")
            tail = 0.0
        return BoundaryValue(float(vals[-1]), tail, False, vals)
    tail = _geometric_tail(inc)
    if tail is None:
        raise ValueError("u does not settle along the ray")
    # extrapolate the geometric tail of signed increments
    d = np.diff(vals)
    est = vals[-1]
    if len(d) >= 2 and d[-1] != 0 and d[-2] != 0:
        r = d[-1] / d[-2]
        if abs(r) < 1:
            est = vals[-1] + d[-1] * r / (1 - r)
    return BoundaryValue(float(est), tail, False, vals)


# ---------------------------------------------------------------------------
# Cheeger constant


@dataclass(frozen=True)
class CheegerResult:
    alpha: float
    minimizer: tuple
    subsets_checked: int


def _edge_arrays(graph: WeightedGraph):
    ids = sorted(graph.ids)
    idx = {x: i for i, x in enumerate(ids)}
    us = np.array([idx[u] for u, _, _ in graph.edges], dtype=np.int64)
    vs = np.array([idx[v] for _, v, _ in graph.edges], dtype=np.int64)
    bs = np.array([b for _, _, b in graph.edges], dtype=float)
    return ids, us, vs, bs


def _connected_subsets(n: int, nbrs: list[set]):
    """Every nonempty connected vertex subset as a bitmask (each exactly once)."""
    out = []

    def extend(mask, frontier, banned):
        out.append(mask)
        frontier = set(frontier)
        banned = set(banned)
        while frontier:
            v = frontier.pop()
            banned.add(v)
            new = {w for w in nbrs[v] if w not in banned and not (mask >> w) & 1}
            extend(mask | (1 << v), frontier | new, banned)

    for s in range(n):
        # subsets whose smallest vertex is s
        banned = set(range(s))
        extend(1 << s, {w for w in nbrs[s] if w > s}, banned | {s})
    return out


def cheeger_bruteforce(graph: WeightedGraph, *, boundary_weight: dict | None = None,
                       connected_only: bool = True) -> CheegerResult:
    """min over nonempty K of Q^(D)(1_K, 1_K) / #K by enumeration.

    ``Q^(D)(1_K, 1_K)`` is the weight of edges leaving K; ``boundary_weight``
    adds, per vertex, weight to vertices outside the finite graph (halo
    edges of a truncation). Without halo weight, K ranges over proper subsets.
    """
    n = len(graph)
    if n > CHEEGER_MAX_VERTICES:
        raise ValueError(f"brute force is capped at {CHEEGER_MAX_VERTICES} vertices")
    ids, us, vs, bs = _edge_arrays(graph)
    halo = np.zeros(n)
    if boundary_weight:
        for x, w in boundary_weight.items():
            halo[ids.index(x)] += w
    full = (1 << n) - 1
    if connected_only:
        nbrs = [set() for _ in range(n)]
        for a, b in zip(us, vs):
            nbrs[a].add(int(b))
            nbrs[b].add(int(a))
        masks = np.array(_connected_subsets(n, nbrs), dtype=np.int64)
    else:
        masks = np.arange(1, full + 1, dtype=np.int64)
    if not halo.any():
        masks = masks[masks != full]
    if masks.size == 0:
        raise ValueError("no admissible subset")

    def block(ms):
        bits = (ms[:, None] >> np.arange(n)) & 1
        cut = ((bits[:, us] ^ bits[:, vs]) * bs).sum(axis=1) + bits @ halo
        ratio = cut / bits.sum(axis=1)
        k = int(np.argmin(ratio))
        return float(ratio[k]), int(ms[k])

    chunks = [masks[i:i + 1 << 16] for i in range(0, len(masks), 1 << 16)]
    with ThreadPoolExecutor(max_workers=min(max_workers(), len(chunks))) as ex:
        results = list(ex.map(block, chunks))
    alpha, best = min(results, key=lambda p: (p[0], p[1]))
    K = tuple(ids[i] for i in range(n) if (best >> i) & 1)
    return CheegerResult(alpha, K, int(len(masks)))


@dataclass(frozen=True)
class DodziukKendallReport:
    samples: int
    min_slack: float
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def dodziuk_kendall_check(gen, alpha: float, phis) -> DodziukKendallReport:
    """½ Σ_{x,y} b (φ(x) − φ(y))² ≥ (α²/2) Σ_x D(x) φ(x)² for finitely supported φ."""
    gen = as_generator(gen)
    slacks, bad = [], []
    for k, phi in enumerate(phis):
        phi = _as_function(phi)
        supp = set(phi.values)
        region = set(supp)
        for x in supp:
            region.update(y for y, _ in gen.neighbors(x))
        lhs = 0.0
        rhs = 0.0
        for x in region:
            px = phi(x)
            for y, b in gen.neighbors(x):
                lhs += 0.5 * b * (px - phi(y)) ** 2
            rhs += gen.degree(x) * px ** 2
        rhs *= alpha ** 2 / 2
        slack = lhs - rhs
        slacks.append(slack)
        if slack < -1e-12 * max(1.0, lhs):
            bad.append((k, slack))
    return DodziukKendallReport(len(slacks), min(slacks) if slacks else math.inf, tuple(bad))


def ball_graph(gen, r: int, root=None):
    """Finite graph induced on a combinatorial ball, plus the per-vertex halo weight."""
    gen = as_generator(gen)
    K, _ = combinatorial_ball(gen, root, r)
    Kset = set(K)
    verts = tuple((x, gen.m(x), gen.c(x)) for x in K)
    edges, halo = [], {}
    for x in K:
        for y, b in gen.neighbors(x):
            if y in Kset:
                if x < y:
                    edges.append((x, y, b))
            else:
                halo[x] = halo.get(x, 0.0) + b
    return WeightedGraph(verts, tuple(edges)), halo


# ---------------------------------------------------------------------------
# the finite-measure tree demonstration


@dataclass
class AppendixAReport:
    k: int
    q: float
    mass_partial: list
    q_of_one: float
    one_in_l2: bool
    cheeger_upper_bounds: list
    alpha_external: float
    lower_bound_constant: float
    phi_energies: list
    phi_distances: list
    heat_mass_verdict: str
    heat_mass_delta: float
    neumann_mass_value: float
    resolvent_gap_evidence: bool
    resolvent_gap_sups: list
    complete_along_ray: bool

    def as_dict(self) -> dict:
        from dataclasses import asdict
        return asdict(self)


def appendixA_demo(k: int = 3, q: float = 0.5, t: float = 1.0, levels: int = 40, *,
                   form_radius: int = 6, cheeger_radii=(1, 2), gap_levels: int = 30) -> AppendixAReport:
    """Finite-measure k-regular tree: complete, yet 1 ∈ D(Q^(N)) \\ D(Q^(D)).

    The classical Cheeger constant k − 2 of the regular tree enters only as a
    labeled external input for the lower-bound constant; the brute-force
    values reported next to it are upper bounds from finite balls.
    """
    from .completeness import heat_mass, neumann_mass
    from .graph import radial_reduce
    from .harmonic import resolvent_gap

    if k < 3 or not 0 < q < 1:
        raise ValueError("need k >= 3 and 0 < q < 1")
    gen = fm_tree(k, q)
    prof = radial_reduce(gen, depth=levels)
    mass_partial = np.cumsum(prof.mass).tolist()

    ex = Exhaustion(gen, radii=range(1, form_radius + 1))
    q1 = qn_partial(gen, SampledFunction.constant(1.0), ex)

    ub = []
    for r in cheeger_radii:
        g, halo = ball_graph(gen, r)
        ub.append(cheeger_bruteforce(g, boundary_weight=halo).alpha)
    alpha = float(k - 2)
    d0 = gen.degree(gen.root)
    const = alpha ** 2 / 2 * d0
    # φ_R = 1 on the ball of radius R: energy = edges leaving the ball, distance to 1 in ℓ²(m)
    energies, dists = [], []
    for R in range(0, min(levels, 30)):
        energies.append(float(prof.out_weight[R]))
        dists.append(float(math.sqrt(max(0.0, 1.0 - mass_partial[R]))))

    hm = heat_mass(gen, t, levels=list(range(max(1, levels - 12), levels + 1)))
    nm = neumann_mass(gen, t, levels=[levels])
    gap = resolvent_gap(gen, levels=gap_levels)
    probe = ray_completeness_probe(canonical_ray(gen), 40)
    return AppendixAReport(k, q, mass_partial, q1.value, bool(math.isfinite(mass_partial[-1])),
                           ub, alpha, const, energies, dists, hm.verdict, hm.delta,
                           nm.values[-1], gap.evidence, list(gap.sup_norms),
                           probe.verdict == "complete-along-ray")
