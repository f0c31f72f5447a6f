"""Pointwise evaluation of the formal Laplacian and Green's formula on finite supports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import Exhaustion, GraphGenerator, as_generator


class CoverageError(KeyError):
    """A function was evaluated at a vertex where it has no value."""


class SampledFunction:
    """Finitely many values of a function on V, plus an optional rule outside them.

    Parameters
    ----------
    values : dict
        Vertex -> value. The keys form the support.
    default : None, number or callable
        Value used off the support. ``None`` means the function is unknown
        there; a callable is evaluated pointwise (e.g. ``lambda x: exp(lam*x)``).
    """

    __slots__ = ("values", "default")

    def __init__(self, values=None, default=0.0):
        self.values = dict(values or {})
        self.default = default

    @classmethod
    def delta(cls, x, scale=1.0):
        return cls({x: scale}, 0.0)

    @classmethod
    def constant(cls, value):
        return cls({}, value)

    @classmethod
    def from_callable(cls, fn: Callable):
        return cls({}, fn)

    @property
    def support(self) -> set:
        """Vertices with stored non-zero values (finite only when the default is 0)."""
        return {x for x, v in self.values.items() if v != 0}

    @property
    def finitely_supported(self) -> bool:
        return self.default is not None and not callable(self.default) and self.default == 0

    def __call__(self, x):
        if x in self.values:
            return self.values[x]
        if self.default is None:
            raise CoverageError(x)
        if callable(self.default):
            return self.default(x)
        return self.default

    def on(self, vertices) -> np.ndarray:
        vals = [self(x) for x in vertices]
        dtype = complex if any(isinstance(v, complex) for v in vals) else float
        return np.array(vals, dtype=dtype)

    def map(self, fn) -> "SampledFunction":
        """Pointwise composition; defaults are composed too."""
        vals = {x: fn(v) for x, v in self.values.items()}
        if self.default is None:
            d = None
        elif callable(self.default):
            base = self.default
            d = lambda x: fn(base(x))  # noqa: E731
        else:
            d = fn(self.default)
        return SampledFunction(vals, d)


def _as_function(u) -> SampledFunction:
    if isinstance(u, SampledFunction):
        return u
    if isinstance(u, dict):
        return SampledFunction(u, 0.0)
    if callable(u):
        return SampledFunction.from_callable(u)
    raise TypeError(f"cannot interpret {type(u).__name__} as a function on V")


def apply_formal(gen, u, x):
    """(L̃u)(x) = (1/m(x)) Σ_y b(x,y)(u(x) − u(y)) + (c(x)/m(x)) u(x)."""
    gen = as_generator(gen)
    u = _as_function(u)
    ux = u(x)
    acc = 0.0
    for y, b in gen.neighbors(x):
        try:
            uy = u(y)
        except CoverageError:
            raise CoverageError(f"u has no value at neighbor {y!r} of {x!r}") from None
        acc += b * (ux - uy)
    return (acc + gen.c(x) * ux) / gen.m(x)


def laplacian_of_delta(gen, x, z) -> float:
    """L̃δ_x(z) = (B_z δ_x(z) − b(x,z)) / m(z) with B_z = Σ_y b(z,y) + c(z)."""
    gen = as_generator(gen)
    nb = gen.neighbors(z)
    Bz = sum(b for _, b in nb) + gen.c(z)
    bxz = sum(b for y, b in nb if y == x)
    return ((Bz if x == z else 0.0) - bxz) / gen.m(z)


def weighted_degree(gen, x) -> float:
    """Deg(x) = (Σ_y b(x,y) + c(x)) / m(x)."""
    gen = as_generator(gen)
    return (gen.degree(x) + gen.c(x)) / gen.m(x)


@dataclass(frozen=True)
class GreensCheck:
    form: complex
    lhs_pairing: complex
    rhs_pairing: complex
    deviation: float
    scale: float

    @property
    def relative_deviation(self) -> float:
        return self.deviation / self.scale if self.scale > 0 else self.deviation


def greens_identity_check(gen, u, v) -> GreensCheck:
    """Compare Q̃(u,v), Σ (L̃u) v̄ m and Σ u (L̃v)‾ m for finitely supported u, v.

    All three are finite sums over the supports and their 1-neighborhoods.
    ``scale`` is the sum of absolute values of the terms entering the form,
    so ``relative_deviation`` measures rounding, not cancellation.
    """
    gen = as_generator(gen)
    u, v = _as_function(u), _as_function(v)
    if not (u.finitely_supported and v.finitely_supported):
        raise CoverageError("greens_identity_check needs finitely supported u and v")
    core = set(u.values) | set(v.values)
    region = set(core)
    for x in core:
        region.update(y for y, _ in gen.neighbors(x))
    region = sorted(region)

    form = 0.0
    scale = 0.0
    for x in region:
        ux, vx = u(x), v(x)
        for y, b in gen.neighbors(x):
            term = 0.5 * b * (ux - u(y)) * np.conj(vx - v(y))
            form += term
            scale += abs(term)
        term = gen.c(x) * ux * np.conj(vx)
        form += term
        scale += abs(term)

    lhs = sum(apply_formal(gen, u, x) * np.conj(v(x)) * gen.m(x) for x in region)
    rhs = sum(u(x) * np.conj(apply_formal(gen, v, x)) * gen.m(x) for x in region)
    vals = [complex(form), complex(lhs), complex(rhs)]
    dev = max(abs(a - b) for a in vals for b in vals)
    return GreensCheck(vals[0], vals[1], vals[2], dev, scale)


@dataclass(frozen=True)
class BoundednessReport:
    sup_per_level: tuple
    argmax_per_level: tuple
    verdict: str
    sup: float


def boundedness_report(gen, exhaustion: Exhaustion | None = None, levels: int = 5, *,
                       growth_rtol: float = 1e-12) -> BoundednessReport:
    """Sup of the weighted degree over successive exhaustion levels.

    Verdict ``bounded`` when the sup is constant over the last half of the
    levels (or the graph is finite), ``unbounded-evidence`` when it increases
    at every one of the last three levels, ``inconclusive`` otherwise.
    """
    gen = as_generator(gen)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if gen.is_finite:
        degs = [(weighted_degree(gen, x), x) for x in gen.finite_vertices]
        best = max(degs, key=lambda p: p[0])
        return BoundednessReport((best[0],), (best[1],), "bounded", best[0])
    if exhaustion is None:
        exhaustion = Exhaustion.up_to(gen, levels)
    sups, args = [], []
    best, arg = -math.inf, None
    for lvl in exhaustion:
        for x in lvl.vertices:
            d = weighted_degree(gen, x)
            if d > best:
                best, arg = d, x
        sups.append(best)
        args.append(arg)
    sups_a = np.array(sups)
    tail = sups_a[len(sups_a) // 2:]
    rising = np.diff(sups_a[-4:]) > growth_rtol * np.abs(sups_a[-4:-1])
    if len(sups_a) >= 4 and rising.all():
        verdict = "unbounded-evidence"
    elif len(sups_a) >= 2 and np.all(np.abs(tail - tail[-1]) <= growth_rtol * abs(tail[-1])):
        verdict = "bounded"
    else:
        verdict = "inconclusive"
    return BoundednessReport(tuple(sups), tuple(args), verdict, float(sups_a[-1]))
