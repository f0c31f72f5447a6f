"""Finite restrictions of the Laplacian with Dirichlet, Neumann and mixed boundary conditions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .graph import GraphGenerator, RadialProfile, WeightedGraph, as_generator, halo_of

DENSE_LIMIT = 200


@dataclass(frozen=True)
class BoundaryCondition:
    """``kind`` is ``"dirichlet"``, ``"neumann"`` or ``"mixed"``; ``mixed`` uses ``subset``."""

    kind: str
    subset: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "mixed"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")

    @classmethod
    def mixed(cls, subset: Iterable) -> "BoundaryCondition":
        return cls("mixed", frozenset(subset))

    def __str__(self):
        if self.kind == "mixed":
            return f"mixed({sorted(self.subset)!r})"
        return self.kind


DIRICHLET = BoundaryCondition("dirichlet")
NEUMANN = BoundaryCondition("neumann")


def _bc(bc) -> BoundaryCondition:
    if isinstance(bc, BoundaryCondition):
        return bc
    return BoundaryCondition(str(bc).lower())


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Symmetric operator on ℓ²(K, m) restricting L̃ to a finite vertex set K.

    ``matrix[i, j] = -b(x_i, x_j)/m(x_i)`` off the diagonal. The diagonal is
    ``(Σ_{y∈K} b + c + w)/m`` (Dirichlet), ``(Σ_{y∈K} b + c)/m`` (Neumann) or the
    Neumann diagonal plus ``w/m`` on the mixed subset, where ``w(x)`` is the
    total weight from x to the halo.
    """

    vertices: tuple
    matrix: sp.csr_matrix
    m: np.ndarray
    c: np.ndarray
    boundary_weight: np.ndarray
    bc: BoundaryCondition
    halo: tuple = ()

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def index(self) -> dict:
        return {x: i for i, x in enumerate(self.vertices)}

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, u) -> np.ndarray:
        return self.matrix @ np.asarray(u)

    def inner(self, u, v) -> complex:
        """ℓ²(K, m) inner product, linear in the first argument."""
        return np.sum(np.asarray(u) * np.conj(np.asarray(v)) * self.m)

    def norm(self, u) -> float:
        return float(np.sqrt(np.real(self.inner(u, u))))

    def quadratic_form(self, u, v=None):
        """q_K(u, v) = ⟨T u, v⟩ in ℓ²(K, m); real for real input."""
        v = u if v is None else v
        val = self.inner(self.apply(u), v)
        if np.isrealobj(u) and np.isrealobj(v):
            return float(np.real(val))
        return complex(val)

    def symmetrized(self) -> sp.csr_matrix:
        """D^{1/2} T D^{-1/2}, symmetric in the Euclidean inner product (D = diag m)."""
        s = np.sqrt(self.m)
        return sp.csr_matrix(sp.diags(s) @ self.matrix @ sp.diags(1.0 / s))

    def adjacency(self) -> sp.csr_matrix:
        A = self.matrix.copy()
        A.setdiag(0)
        A.eliminate_zeros()
        return (A != 0).astype(np.int8)

    def components(self) -> np.ndarray:
        _, labels = connected_components(self.adjacency(), directed=False)
        return labels

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    @property
    def kept_boundary_weight(self) -> np.ndarray:
        """Halo weight that stays on the diagonal under this boundary condition."""
        if self.bc.kind == "dirichlet":
            return self.boundary_weight.copy()
        if self.bc.kind == "mixed":
            mask = np.array([x in self.bc.subset for x in self.vertices], dtype=float)
            return self.boundary_weight * mask
        return np.zeros(self.n)


def _assemble(vertices, offdiag: dict, m, c, w, bc: BoundaryCondition, halo=()):
    n = len(vertices)
    idx = {x: i for i, x in enumerate(vertices)}
    rows, cols, vals = [], [], []
    inner_deg = np.zeros(n)
    for (x, y), b in offdiag.items():
        i, j = idx[x], idx[y]
        rows.append(i)
        cols.append(j)
        vals.append(-b / m[i])
        inner_deg[i] += b
    diag = inner_deg + c
    if bc.kind == "dirichlet":
        diag = diag + w
    elif bc.kind == "mixed":
        mask = np.array([x in bc.subset for x in vertices], dtype=float)
        diag = diag + w * mask
    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend(diag / m)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    M.sum_duplicates()
    return TruncatedOperator(tuple(vertices), M, np.asarray(m, float), np.asarray(c, float),
                             np.asarray(w, float), bc, tuple(halo))


def truncate(gen, K: Iterable, halo: Iterable | None = None, bc="dirichlet") -> TruncatedOperator:
    """Restrict L̃ to the finite set K under boundary condition ``bc``.

    Dirichlet means extension by zero outside K (the halo weight stays on the
    diagonal); Neumann drops the edges leaving K.
    """
    gen = as_generator(gen)
    bc = _bc(bc)
    K = tuple(K)
    if not K:
        raise ValueError("cannot truncate to an empty vertex set")
    Kset = set(K)
    if halo is None:
        halo = halo_of(gen, K)
    if bc.kind == "mixed":
        boundary = {x for x in K if any(y not in Kset for y, _ in gen.neighbors(x))}
        if not bc.subset <= boundary:
            raise ValueError("mixed subset must lie in the inner boundary of K")
    off = {}
    w = np.zeros(len(K))
    for i, x in enumerate(K):
        for y, b in gen.neighbors(x):
            if y in Kset:
                off[(x, y)] = b
            else:
                w[i] += b
    m = np.array([gen.m(x) for x in K])
    c = np.array([gen.c(x) for x in K])
    return _assemble(K, off, m, c, w, bc, halo)


def truncate_graph(graph: WeightedGraph, bc="neumann") -> TruncatedOperator:
    """The full operator of a finite graph (all boundary conditions coincide)."""
    gen = graph.generator()
    return truncate(gen, gen.finite_vertices, (), bc)


def radial_operator(profile: RadialProfile, bc="dirichlet") -> TruncatedOperator:
    """Truncation of the sphere-reduced operator on {0..depth}.

    For a spherically symmetric graph this acts on radial functions exactly
    like the truncation of L̃ to the ball of radius ``depth``; the weight
    ``out_weight[depth]`` plays the role of the halo weight.
    """
    bc = _bc(bc)
    M, B, C = profile.mass, profile.out_weight, profile.killing
    N = profile.depth
    off = {}
    for n in range(N):
        off[(n, n + 1)] = B[n]
        off[(n + 1, n)] = B[n]
    w = np.zeros(N + 1)
    w[N] = B[N]
    return _assemble(tuple(range(N + 1)), off, M, C, w, bc, (N + 1,))


def inner_boundary(T: TruncatedOperator) -> tuple:
    return tuple(x for x, w in zip(T.vertices, T.boundary_weight) if w > 0)


@dataclass(frozen=True)
class OrderingReport:
    samples: int
    max_violation: float
    diagonal_gap_min: float
    ok: bool


def ordering_check(gen, K, halo=None, subset=None, samples: int = 100, seed: int = 0,
                   tol: float = 1e-12) -> OrderingReport:
    """Check q^N_K(u) ≤ q^mixed_K(u) ≤ q^D_K(u) on random real u.

    Violations are measured relative to the size of q^D_K(u). The mixed
    subset defaults to a random half of the inner boundary.
    """
    gen = as_generator(gen)
    rng = np.random.default_rng(seed)
    TD = truncate(gen, K, halo, DIRICHLET)
    TN = truncate(gen, K, halo, NEUMANN)
    if subset is None:
        bnd = inner_boundary(TD)
        subset = [x for x in bnd if rng.random() < 0.5]
    TM = truncate(gen, K, halo, BoundaryCondition.mixed(subset))
    gap = (TD.matrix - TN.matrix).toarray()
    off = gap - np.diag(np.diag(gap))
    diag_min = float(np.min(np.diag(gap))) if not np.any(off) else -np.inf
    worst = 0.0
    for _ in range(samples):
        u = rng.standard_normal(TD.n)
        qn, qm, qd = TN.quadratic_form(u), TM.quadratic_form(u), TD.quadratic_form(u)
        scale = max(abs(qd), 1.0)
        worst = max(worst, (qn - qm) / scale, (qm - qd) / scale)
    ok = worst <= tol and diag_min >= 0
    return OrderingReport(samples, max(worst, 0.0), diag_min, ok)
