"""Weighted graphs (V, b, c, m), lazy generators for infinite graphs, and exhaustions.

A graph is described by symmetric edge weights ``b``, a killing term ``c >= 0``
and a vertex measure ``m > 0``. Finite graphs are stored explicitly in
:class:`WeightedGraph`; infinite graphs are accessed through the oracles of a
:class:`GraphGenerator`. Every generator is locally finite: ``neighbors(x)``
returns a finite list.
"""

from __future__ import annotations

import ast
import json
import math
import sys
import operator
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np

Vertex = Hashable

LAMBDA_EXAMPLE4 = math.log((3.0 + math.sqrt(5.0)) / 2.0)


class GraphFormatError(ValueError):
    """Raised when a graph file cannot be parsed."""


class GraphValidationError(ValueError):
    """Raised when graph data violates an invariant of (V, b, c, m)."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class FamilyError(ValueError):
    """Unknown family descriptor or parameter out of range."""


# ---------------------------------------------------------------------------
# finite graphs


@dataclass(frozen=True)
class Violation:
    kind: str
    where: tuple
    detail: str = ""

    def __str__(self):
        loc = ", ".join(repr(w) for w in self.where)
        return f"{self.kind} at ({loc})" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}


@dataclass(frozen=True)
class WeightedGraph:
    """Finite weighted graph.

    Parameters
    ----------
    vertices : tuple of (id, m, c)
        Vertex records. Measures must be positive and killing terms non-negative.
    edges : tuple of (u, v, b)
        Undirected edges, each stored once.

    The raw constructor does not validate; use :func:`validate` or
    :meth:`checked` for that.
    """

    vertices: tuple
    edges: tuple

    @classmethod
    def checked(cls, vertices, edges) -> "WeightedGraph":
        g = cls(tuple(tuple(v) for v in vertices), tuple(tuple(e) for e in edges))
        report = validate(g)
        if not report.ok:
            raise GraphValidationError(report.violations)
        return g

    @property
    def ids(self) -> list:
        return [v[0] for v in self.vertices]

    def __len__(self):
        return len(self.vertices)

    def canonical(self) -> "WeightedGraph":
        """Same graph with vertices and edges in canonical (sorted) order."""
        verts = tuple(sorted(self.vertices, key=lambda r: r[0]))
        edges = []
        for u, v, b in self.edges:
            if v < u:
                u, v = v, u
            edges.append((u, v, b))
        return WeightedGraph(verts, tuple(sorted(edges, key=lambda e: (e[0], e[1]))))

    def generator(self, root=None) -> "GraphGenerator":
        adj: dict = {v[0]: {} for v in self.vertices}
        for u, v, b in self.edges:
            adj.setdefault(u, {})[v] = b
            adj.setdefault(v, {})[u] = b
        meas = {v[0]: v[1] for v in self.vertices}
        kill = {v[0]: v[2] for v in self.vertices}
        nbrs = {x: tuple(sorted(d.items(), key=lambda p: p[0])) for x, d in adj.items()}
        if root is None:
            root = min(meas) if meas else None
        return GraphGenerator(
            neighbors_fn=nbrs.__getitem__,
            measure_fn=meas.__getitem__,
            killing_fn=kill.__getitem__,
            root=root,
            name="finite",
            finite_vertices=tuple(sorted(meas)),
        )


def validate(graph: WeightedGraph) -> ValidationReport:
    """List every violated invariant of a finite weighted graph."""
    out = []
    seen_ids = set()
    for rec in graph.vertices:
        x, m, c = rec
        if x in seen_ids:
            out.append(Violation("duplicate vertex", (x,)))
        seen_ids.add(x)
        if not (isinstance(m, (int, float)) and math.isfinite(m) and m > 0):
            out.append(Violation("non-positive measure", (x,), f"m={m!r}"))
        if not (isinstance(c, (int, float)) and math.isfinite(c) and c >= 0):
            out.append(Violation("killing term sign", (x,), f"c={c!r}"))
    weights: dict = {}
    for u, v, b in graph.edges:
        if u == v:
            out.append(Violation("self-loop", (u, v)))
            continue
        for z in (u, v):
            if z not in seen_ids:
                out.append(Violation("unknown vertex", (u, v), f"{z!r} not declared"))
        if not (isinstance(b, (int, float)) and math.isfinite(b) and b > 0):
            out.append(Violation("non-positive weight", (u, v), f"b={b!r}"))
        key = frozenset((u, v))
        if key in weights:
            if weights[key][1] != b:
                out.append(Violation("symmetry", (u, v), f"b={weights[key][1]!r} vs {b!r}"))
            else:
                out.append(Violation("duplicate edge", (u, v)))
        else:
            weights[key] = ((u, v), b)
    return ValidationReport(tuple(out))


def load_graph(path) -> WeightedGraph:
    """Read a graph from the JSON file format and validate it."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}: {exc}") from exc
    return graph_from_dict(data)


def graph_from_dict(data: dict) -> WeightedGraph:
    if not isinstance(data, dict) or "vertices" not in data:
        raise GraphFormatError("expected an object with a 'vertices' list")
    try:
        verts = [(str(v["id"]), v.get("m", 1), v.get("c", 0)) for v in data["vertices"]]
        edges = [(str(e["u"]), str(e["v"]), e["b"]) for e in data.get("edges", [])]
    except (KeyError, TypeError) as exc:
        raise GraphFormatError(f"malformed vertex or edge record: {exc}") from exc
    return WeightedGraph.checked(verts, edges)


def graph_to_dict(graph: WeightedGraph) -> dict:
    g = graph.canonical()
    return {
        "vertices": [{"id": x, "m": m, "c": c} for x, m, c in g.vertices],
        "edges": [{"u": u, "v": v, "b": b} for u, v, b in g.edges],
    }


def save_graph(graph: WeightedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph), fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class RadialProfile:
    """Sphere-aggregated data of a spherically symmetric graph.

    ``mass[n]`` is the measure of sphere n, ``out_weight[n]`` the total edge
    weight between spheres n and n+1 (defined for n = 0..depth, the last entry
    being the weight leaving the ball of radius ``depth``), ``killing[n]`` the
    total killing on sphere n.
    """

    mass: np.ndarray
    out_weight: np.ndarray
    killing: np.ndarray

    @property
    def depth(self) -> int:
        return len(self.mass) - 1

    def truncated(self, depth: int) -> "RadialProfile":
        return RadialProfile(self.mass[: depth + 1], self.out_weight[: depth + 1],
                             self.killing[: depth + 1])

    def reduced_apply(self, u) -> np.ndarray:
        """Apply the reduced operator J to a radial sequence u(0..depth+1)."""
        u = np.asarray(u, dtype=float)
        n = len(u) - 1
        M, B, C = self.mass[:n], self.out_weight[:n], self.killing[:n]
        Bm = np.concatenate(([0.0], B[:-1]))
        uprev = np.concatenate(([0.0], u[:-2]))
        return (Bm * (u[:-1] - uprev) + B * (u[:-1] - u[1:])) / M + C / M * u[:-1]

    def as_generator(self) -> "GraphGenerator":
        """The weighted half-line with m = mass, b(n, n+1) = out_weight, c = killing."""
        M, B, C = self.mass, self.out_weight, self.killing
        depth = self.depth

        def nbrs(n):
            out = []
            if n > 0:
                out.append((n - 1, float(B[n - 1])))
            if n < depth:
                out.append((n + 1, float(B[n])))
            return out

        return GraphGenerator(nbrs, lambda n: float(M[n]), lambda n: float(C[n]), root=0,
                              name="radial-chain", finite_vertices=tuple(range(depth + 1)))


@dataclass(frozen=True, eq=False)
class GraphGenerator:
    """Lazy description of a (possibly infinite) weighted graph.

    The oracles must be deterministic and the neighbor oracle symmetric:
    ``y`` appears in ``neighbors(x)`` with weight ``b`` iff ``x`` appears in
    ``neighbors(y)`` with the same weight.
    """

    neighbors_fn: Callable[[Vertex], Sequence[tuple]]
    measure_fn: Callable[[Vertex], float]
    killing_fn: Callable[[Vertex], float]
    root: Vertex = None
    symmetric: bool = False
    name: str = ""
    profile_fn: Callable[[int], RadialProfile] | None = None
    finite_vertices: tuple | None = None
    params: dict = field(default_factory=dict)

    def neighbors(self, x) -> list:
        return sorted(self.neighbors_fn(x), key=lambda p: p[0])

    def m(self, x) -> float:
        return float(self.measure_fn(x))

    def c(self, x) -> float:
        return float(self.killing_fn(x))

    def degree(self, x) -> float:
        """Sum of edge weights at x (without killing)."""
        return float(sum(b for _, b in self.neighbors_fn(x)))

    @property
    def is_finite(self) -> bool:
        return self.finite_vertices is not None


def as_generator(g) -> GraphGenerator:
    if isinstance(g, GraphGenerator):
        return g
    if isinstance(g, WeightedGraph):
        return g.generator()
    raise TypeError(f"expected WeightedGraph or GraphGenerator, got {type(g).__name__}")


# ---------------------------------------------------------------------------
# families

_ALLOWED_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
                   ast.Div: operator.truediv, ast.FloorDiv: operator.floordiv,
                   ast.Pow: operator.pow, ast.BitXor: operator.pow}


def sequence_from_expr(expr: str) -> Callable[[int], int]:
    """Compile an integer sequence ``n -> d(n)`` from a small arithmetic expression.

    ``^`` means power, so ``"2^(n+2)"`` and ``"2**(n+2)"`` are equivalent.
    """
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise FamilyError(f"bad sequence expression {expr!r}") from exc

    def ev(node, n):
        if isinstance(node, ast.Expression):
            return ev(node.body, n)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "n":
            return n
        if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
            return _ALLOWED_BINOPS[type(node.op)](ev(node.left, n), ev(node.right, n))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand, n)
        raise FamilyError(f"unsupported token in sequence expression {expr!r}")

    ev(tree, 0)

    def seq(n: int) -> int:
        val = ev(tree, n)
        if val != int(val):
            raise FamilyError(f"sequence {expr!r} is not integer at n={n}")
        return int(val)

    return seq


def line_z() -> GraphGenerator:
    """The integers with b(x, x±1) = 1, m = 1, c = 0."""

    def profile(depth):
        M = np.full(depth + 1, 2.0)
        M[0] = 1.0
        return RadialProfile(M, np.full(depth + 1, 2.0), np.zeros(depth + 1))

    return GraphGenerator(lambda x: ((x - 1, 1.0), (x + 1, 1.0)), lambda x: 1.0,
                          lambda x: 0.0, root=0, symmetric=True, name="line-Z",
                          profile_fn=profile)


def weighted_half_line(weight: Callable[[int], float], measure: Callable[[int], float] = None,
                       killing: Callable[[int], float] = None, name="half-line") -> GraphGenerator:
    """Vertices 0, 1, 2, ... with b(n, n+1) = weight(n)."""
    measure = measure or (lambda n: 1.0)
    killing = killing or (lambda n: 0.0)

    def nbrs(n):
        out = [(n + 1, float(weight(n)))]
        if n > 0:
            out.insert(0, (n - 1, float(weight(n - 1))))
        return out

    def profile(depth):
        ns = range(depth + 1)
        return RadialProfile(np.array([measure(n) for n in ns], float),
                             np.array([weight(n) for n in ns], float),
                             np.array([killing(n) for n in ns], float))

    return GraphGenerator(nbrs, measure, killing, root=0, symmetric=True, name=name,
                          profile_fn=profile)


def _tree(children: Callable[[int], int], measure: Callable[[int], float], name: str,
          params: dict) -> GraphGenerator:
    """Rooted tree whose vertices at distance n have ``children(n)`` children.

    Vertices are tuples of child indices; the root is ``()``. Measure depends
    only on the distance to the root.
    """

    def nbrs(x):
        n = len(x)
        out = []
        if n:
            out.append((x[:-1], 1.0))
        out.extend((x + (i,), 1.0) for i in range(children(n)))
        return out

    @lru_cache(maxsize=None)
    def sphere_size(n):
        return 1 if n == 0 else sphere_size(n - 1) * children(n - 1)

    def profile(depth):
        try:
            sizes = [float(sphere_size(n)) for n in range(depth + 2)]
        except OverflowError:
            raise ValueError(f"{name}: sphere sizes exceed the float range before depth {depth + 1}") from None
        M = np.array([sizes[n] * measure(n) for n in range(depth + 1)])
        B = np.array(sizes[1:])
        return RadialProfile(M, B, np.zeros(depth + 1))

    return GraphGenerator(nbrs, lambda x: measure(len(x)), lambda x: 0.0, root=(),
                          symmetric=True, name=name, profile_fn=profile, params=params)


def regular_tree(k: int) -> GraphGenerator:
    if k < 1:
        raise FamilyError("regular-tree needs k >= 1")
    return _tree(lambda n: k if n == 0 else k - 1, lambda n: 1.0, f"regular-tree:k={k}",
                 {"k": k})


def radial_tree(degree: Callable[[int], int] | str) -> GraphGenerator:
    """Radially symmetric tree; vertices at distance n have degree d(n), m = 1, c = 0."""
    label = degree if isinstance(degree, str) else getattr(degree, "__name__", "d")
    d = sequence_from_expr(degree) if isinstance(degree, str) else degree
    if d(0) < 1:
        raise FamilyError("radial-tree needs d(0) >= 1")
    for n in range(1, 8):
        if d(n) < 2:
            raise FamilyError(f"radial-tree needs d(n) >= 2 for n >= 1 (d({n})={d(n)})")
    return _tree(lambda n: d(0) if n == 0 else d(n) - 1, lambda n: 1.0,
                 f"radial-tree:d={label}", {"d": label})


def fm_tree(k: int = 3, q: float = 0.5) -> GraphGenerator:
    """k-regular tree with finite total measure: sphere n carries mass (1-q) q^n."""
    if not 0 < q < 1:
        raise FamilyError("fm-tree needs 0 < q < 1")
    if k < 3:
        warnings.warn(f"fm-tree with k={k} < 3 has Cheeger constant 0", stacklevel=2)
    if k < 2:
        raise FamilyError("fm-tree needs k >= 2")

    def measure(n):
        size = 1 if n == 0 else k * (k - 1) ** (n - 1)
        return (1.0 - q) * q ** n / size

    return _tree(lambda n: k if n == 0 else k - 1, measure, f"fm-tree:k={k},q={q}",
                 {"k": k, "q": q})


def example4(rho: float = 0.5, A: float = 1.0 / 3.0) -> GraphGenerator:
    """The integers with b(x, x±1) = 1 and m, c built from u(x) = e^{λx}, φ(x) = A ρ^|x|.

    m = min(1, φ/u²) and c = max(0, u²/φ - 1)·m, so that c + m = 1. The
    measure is evaluated in log space, so it stays accurate far from 0. Far to
    the right (x beyond roughly 280 for the defaults) the true value drops
    below the smallest normal double and is held there, so m stays positive.
    """
    if not 0 < rho < 1 or not A > 0:
        raise FamilyError("example4 needs 0 < rho < 1 and A > 0")
    lam = LAMBDA_EXAMPLE4
    log_a, log_rho = math.log(A), math.log(rho)

    def measure(x):
        return max(math.exp(min(0.0, log_a + abs(x) * log_rho - 2.0 * lam * x)), sys.float_info.min)

    def killing(x):
        # max(0, u²/φ - 1)·m equals 1 - m, in both branches of the minimum
        return 1.0 - measure(x)

    return GraphGenerator(lambda x: ((x - 1, 1.0), (x + 1, 1.0)), measure, killing, root=0,
                          name=f"example4:rho={rho},A={A}", params={"rho": rho, "A": A})


def path_graph(n: int, b: float = 1.0) -> WeightedGraph:
    return WeightedGraph(tuple((i, 1.0, 0.0) for i in range(n)),
                         tuple((i, i + 1, b) for i in range(n - 1)))


def complete_graph(n: int) -> WeightedGraph:
    return WeightedGraph(tuple((i, 1.0, 0.0) for i in range(n)),
                         tuple((i, j, 1.0) for i in range(n) for j in range(i + 1, n)))


def cycle_graph(n: int) -> WeightedGraph:
    return WeightedGraph(tuple((i, 1.0, 0.0) for i in range(n)),
                         tuple((i, (i + 1) % n, 1.0) for i in range(n)))


def random_graph(rng: np.random.Generator, n: int, p: float, *, connected: bool | None = None,
                 weights=(0.5, 2.0), measures=(0.5, 2.0), killing=0.0) -> WeightedGraph:
    """Erdős–Rényi graph with random weights; ``connected=True`` adds a random spanning tree.

    ``killing`` is the probability that a vertex gets c ~ U(0, 1).
    """
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges[(i, j)] = float(rng.uniform(*weights))
    if connected:
        order = rng.permutation(n)
        for a in range(1, n):
            i, j = sorted((int(order[a]), int(order[rng.integers(a)])))
            edges.setdefault((i, j), float(rng.uniform(*weights)))
    verts = []
    for i in range(n):
        c = float(rng.uniform(0, 1)) if rng.random() < killing else 0.0
        verts.append((i, float(rng.uniform(*measures)), c))
    return WeightedGraph(tuple(verts), tuple((i, j, b) for (i, j), b in sorted(edges.items())))


def _parse_params(text: str) -> dict:
    out = {}
    if not text:
        return out
    for part in text.split(","):
        if "=" not in part:
            raise FamilyError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_family(descriptor: str) -> GraphGenerator:
    """Build a generator from a family descriptor such as ``"regular-tree:k=3"``.

    Known families: ``line-Z``, ``regular-tree:k=K``, ``radial-tree:d=EXPR``,
    ``fm-tree:k=K,q=Q``, ``example4:rho=R,A=A``, and the finite ``path:n=N``,
    ``cycle:n=N``, ``complete:n=N``.
    """
    name, _, rest = descriptor.partition(":")
    name = name.strip()
    if name == "radial-tree":
        # the expression may itself contain commas or '='
        if not rest.startswith("d="):
            raise FamilyError("radial-tree needs d=EXPR")
        return radial_tree(rest[2:])
    params = _parse_params(rest)
    try:
        if name == "line-Z":
            return line_z()
        if name == "regular-tree":
            return regular_tree(int(params.get("k", 3)))
        if name == "fm-tree":
            return fm_tree(int(params.get("k", 3)), float(params.get("q", 0.5)))
        if name == "example4":
            return example4(float(params.get("rho", 0.5)), float(params.get("A", 1.0 / 3.0)))
        if name == "path":
            return path_graph(int(params["n"])).generator()
        if name == "cycle":
            return cycle_graph(int(params["n"])).generator()
        if name == "complete":
            return complete_graph(int(params["n"])).generator()
    except (KeyError, ValueError) as exc:
        if isinstance(exc, FamilyError):
            raise
        raise FamilyError(f"bad parameters for {name!r}: {exc}") from exc
    raise FamilyError(f"unknown family {name!r}")


# ---------------------------------------------------------------------------
# balls, exhaustions, radial reduction


def _bfs(gen: GraphGenerator, root, r: int):
    """Breadth-first layers up to radius r, neighbors visited in sorted order."""
    dist = {root: 0}
    order = [root]
    queue = deque([root])
    while queue:
        x = queue.popleft()
        if dist[x] >= r:
            continue
        for y, _ in gen.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                order.append(y)
                queue.append(y)
    return order, dist


def _sort_layers(order, dist):
    # BFS order already groups by distance; sort within each sphere for determinism
    return sorted(order, key=lambda v: (dist[v], v))


def halo_of(gen: GraphGenerator, K: Iterable) -> tuple:
    Kset = set(K)
    halo = set()
    for x in Kset:
        for y, _ in gen.neighbors(x):
            if y not in Kset:
                halo.add(y)
    return tuple(sorted(halo))


def combinatorial_ball(gen: GraphGenerator, root=None, r: int = 0):
    """Vertices within graph distance r of root, and the halo of that set."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    root = gen.root if root is None else root
    order, dist = _bfs(gen, root, r)
    K = tuple(_sort_layers(order, dist))
    return K, halo_of(gen, K)


@dataclass(frozen=True)
class Level:
    radius: int
    vertices: tuple
    halo: tuple


class Exhaustion:
    """Nested combinatorial balls K_1 ⊆ K_2 ⊆ ... around a root, with halos."""

    def __init__(self, gen: GraphGenerator, root=None, radii: Sequence[int] = (1, 2, 3)):
        self.gen = gen
        self.root = gen.root if root is None else root
        self.radii = tuple(sorted(int(r) for r in radii))
        if any(r < 0 for r in self.radii):
            raise ValueError("radii must be non-negative")
        self._levels = None

    @classmethod
    def up_to(cls, gen, levels: int, root=None, start: int = 1, step: int = 1):
        return cls(gen, root, range(start, start + step * levels, step))

    @property
    def levels(self) -> list[Level]:
        if self._levels is None:
            rmax = self.radii[-1] if self.radii else 0
            order, dist = _bfs(self.gen, self.root, rmax)
            ordered = _sort_layers(order, dist)
            out = []
            for r in self.radii:
                K = tuple(v for v in ordered if dist[v] <= r)
                out.append(Level(r, K, halo_of(self.gen, K)))
            self._levels = out
        return self._levels

    def __iter__(self):
        return iter(self.levels)

    def __len__(self):
        return len(self.radii)


def radial_reduce(gen: GraphGenerator, root=None, depth: int = 1, *,
                  enumerate_check: bool | None = None) -> RadialProfile:
    """Sphere masses, inter-sphere weights and sphere killing about ``root``.

    Generators with a closed-form profile use it; otherwise (or when
    ``enumerate_check`` is set) the spheres are enumerated and every sphere is
    checked for identical m, c, inward and outward weight sums.
    """
    root = gen.root if root is None else root
    if not gen.symmetric:
        raise ValueError(f"generator {gen.name or '?'} does not declare spherical symmetry")
    if root != gen.root:
        raise ValueError("radial reduction is only available about the generator root")
    use_closed = gen.profile_fn is not None and not enumerate_check
    if use_closed:
        return gen.profile_fn(depth)
    order, dist = _bfs(gen, root, depth + 1)
    M = np.zeros(depth + 1)
    B = np.zeros(depth + 1)
    C = np.zeros(depth + 1)
    ref: dict = {}
    for x in order:
        n = dist[x]
        if n > depth:
            continue
        out_w = in_w = 0.0
        for y, b in gen.neighbors(x):
            dy = dist.get(y)
            if dy == n + 1:
                out_w += b
            elif dy == n - 1:
                in_w += b
            elif dy == n:
                raise ValueError(f"edge inside sphere {n}: {x!r}-{y!r}; not a radial structure")
        data = (gen.m(x), gen.c(x), out_w, in_w)
        if n in ref and not np.allclose(ref[n][1], data, rtol=1e-12, atol=0):
            raise ValueError(f"asymmetric sphere {n}: witnesses {ref[n][0]!r} and {x!r}")
        ref.setdefault(n, (x, data))
        M[n] += data[0]
        C[n] += data[1]
        B[n] += out_w
    return RadialProfile(M, B, C)
