"""Resolvents, heat semigroups, heat kernels and ground states of truncated operators.

Semigroups are computed by uniformization: with ``P = I - T/η`` entrywise
non-negative,

    e^{-tT} = Σ_k Poisson(k; tη) P^k,

so every computed kernel entry is a sum of non-negative terms. When ``tη`` is
large (stiff truncations with huge weighted degrees) the dense matrix
exponential is built by the same series on a short step and squared up, which
keeps all arithmetic non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.stats import poisson

from .formal import apply_formal
from .graph import as_generator
from .truncation import DENSE_LIMIT, TruncatedOperator

SERIES_TOL = 1e-14
# above this many expected jumps, switch to scaling and squaring on a dense matrix
DENSE_SQUARING_RATE = 2e4
DENSE_SQUARING_MAX_N = 3000


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# uniformization


def uniformization_rate(T: TruncatedOperator, shift: float = 0.0) -> float:
    top = float(np.max(T.diagonal - shift)) if T.n else 0.0
    return 1.01 * top if top > 0 else 1.0


def poisson_cutoff(mu: float, tol: float = SERIES_TOL, min_terms: int = 0) -> int:
    """Smallest K with P(N > K) <= tol for N ~ Poisson(mu), and K >= min_terms."""
    if mu == 0:
        return max(0, min_terms)
    K = poisson.isf(tol, mu)
    K = int(K) if np.isfinite(K) else int(mu + 12 * math.sqrt(mu) + 30)
    while K > 0 and poisson.sf(K - 1, mu) <= tol:
        K -= 1
    while poisson.sf(K, mu) > tol:
        K += 1
    return max(K, min_terms)


def _integral_cutoff(mu: float, tol: float) -> int:
    """K with E[(N - K - 1)^+] <= tol, the tail of Σ_k P(N > k)."""
    K = poisson_cutoff(mu, tol)
    while mu * poisson.sf(K, mu) - (K + 1) * poisson.sf(K + 1, mu) > tol:
        K += 1
    return K


def _stochastic_part(T: TruncatedOperator, eta: float, shift: float = 0.0) -> sp.csr_matrix:
    P = sp.identity(T.n, format="csr") - (T.matrix - shift * sp.identity(T.n)) / eta
    P = sp.csr_matrix(P)
    P.data[P.data < 0] = 0.0  # rounding of the diagonal only; entries are >= 0 in exact arithmetic
    return P


def _uniformized(T, t, f, g=None, *, shift=0.0, tol=SERIES_TOL, min_terms=0):
    """e^{-t(T-shift)} f and, if g is given, ∫_0^t e^{-sT} g ds (requires shift = 0)."""
    eta = uniformization_rate(T, shift)
    mu = t * eta
    P = _stochastic_part(T, eta, shift)
    K = poisson_cutoff(mu, tol, min_terms)
    if g is not None:
        K = max(K, _integral_cutoff(mu, tol * eta))
    ks = np.arange(K + 1)
    w = poisson.pmf(ks, mu)
    wi = poisson.sf(ks, mu) / eta if g is not None else None
    out = np.zeros_like(f, dtype=float)
    acc = np.zeros_like(g, dtype=float) if g is not None else None
    x = np.array(f, dtype=float)
    y = np.array(g, dtype=float) if g is not None else None
    for k in range(K + 1):
        out += w[k] * x
        if g is not None:
            acc += wi[k] * y
        if k < K:
            x = P @ x
            if g is not None:
                y = P @ y
    return out, acc


def semigroup_matrices(T: TruncatedOperator, t: float, *, integral: bool = False,
                       tol: float = 1e-17):
    """Dense e^{-tT} (and ∫_0^t e^{-sT} ds) by uniformized short steps and squaring.

    Every operation adds or multiplies non-negative numbers, so entries carry
    small relative error even when the weighted degrees span many orders of
    magnitude.
    """
    eta = uniformization_rate(T)
    s = max(0, math.ceil(math.log2(max(t * eta, 1.0))))
    h = t / 2 ** s
    mu = h * eta
    P = _stochastic_part(T, eta).toarray()
    K = poisson_cutoff(mu, tol) + 2
    ks = np.arange(K + 1)
    w = poisson.pmf(ks, mu)
    wi = poisson.sf(ks, mu) / eta
    E = np.zeros((T.n, T.n))
    J = np.zeros((T.n, T.n)) if integral else None
    Pk = np.eye(T.n)
    for k in range(K + 1):
        E += w[k] * Pk
        if integral:
            J += wi[k] * Pk
        Pk = Pk @ P
    for _ in range(s):
        if integral:
            J = J + E @ J
        E = E @ E
    return E, J


def dense_semigroup_oracle(T: TruncatedOperator, t: float) -> np.ndarray:
    """e^{-tT} from the eigendecomposition of the symmetrized matrix (test oracle)."""
    S = T.symmetrized().toarray()
    lam, V = np.linalg.eigh((S + S.T) / 2)
    s = np.sqrt(T.m)
    return (V * np.exp(-t * lam)) @ V.T * (1.0 / s)[:, None] * s[None, :]


def _tridiagonal_eig(T: TruncatedOperator):
    """Eigenpairs of the symmetrized operator when its graph is a path.

    Uses implicit QR on the tridiagonal form, which keeps small eigenvalues
    accurate when the diagonal is strongly graded (weighted degrees growing
    along the path). Returns (order, eigenvalues, eigenvectors) in path order.
    """
    order = _path_order(T)
    if order is None:
        return None
    S = T.symmetrized()
    d = S.diagonal()[order]
    e = np.array([S[order[i], order[i + 1]] for i in range(T.n - 1)])
    lam, Q = sla.eigh_tridiagonal(d, e, lapack_driver="stev")
    return order, lam, Q


def _eig_apply(T, eig, t, f, g=None):
    order, lam, Q = eig
    s = np.sqrt(T.m)[order]
    f = np.asarray(f, float)
    out = np.empty_like(f)
    out[order] = _eig_core(Q, s, np.exp(-t * lam), f[order])
    if g is None:
        return out, None
    with np.errstate(divide="ignore", invalid="ignore"):
        weights = np.where(lam * t > 1e-12, -np.expm1(-t * lam) / lam, t * (1 - lam * t / 2))
    acc = np.empty_like(np.asarray(g, float))
    acc[order] = _eig_core(Q, s, weights, np.asarray(g, float)[order])
    return out, acc


def _eig_core(Q, s, weights, f):
    f2 = f.reshape(len(s), -1)
    res = (Q @ (weights[:, None] * (Q.T @ (s[:, None] * f2)))) / s[:, None]
    return res.reshape(f.shape)


def _pick_method(T, t, method):
    if method != "auto":
        return method
    if t * uniformization_rate(T) > DENSE_SQUARING_RATE:
        if _path_order(T) is not None:
            return "tridiagonal"
        if T.n <= DENSE_SQUARING_MAX_N:
            return "squaring"
    return "uniformization"


def semigroup_apply(T: TruncatedOperator, t: float, f, *, method: str = "auto",
                    tol: float = SERIES_TOL, min_terms: int = 0) -> np.ndarray:
    """e^{-tT} f.

    ``method`` is ``"uniformization"`` (vector series), ``"squaring"`` (dense
    uniformized scaling and squaring), ``"eig"`` (dense eigendecomposition) or
    ``"auto"``. ``f`` may be a vector or a matrix of column vectors.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    f = np.asarray(f, dtype=float)
    if t == 0:
        return f.copy()
    method = _pick_method(T, t, method)
    if method == "uniformization":
        return _uniformized(T, t, f, tol=tol, min_terms=min_terms)[0]
    if method == "squaring":
        return semigroup_matrices(T, t)[0] @ f
    if method == "eig":
        return dense_semigroup_oracle(T, t) @ f
    if method == "tridiagonal":
        return _eig_apply(T, _tridiagonal_eig(T), t, f)[0]
    raise ValueError(f"unknown method {method!r}")


def semigroup_with_integral(T: TruncatedOperator, t: float, f, g, *, method: str = "auto",
                            tol: float = 1e-13):
    """(e^{-tT} f, ∫_0^t e^{-sT} g ds), the integral taken term by term in the series."""
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    if t == 0:
        return f.copy(), np.zeros_like(g)
    method = _pick_method(T, t, method)
    if method == "uniformization":
        return _uniformized(T, t, f, g, tol=tol)
    if method == "squaring":
        E, J = semigroup_matrices(T, t, integral=True)
        return E @ f, J @ g
    if method == "tridiagonal":
        return _eig_apply(T, _tridiagonal_eig(T), t, f, g)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# resolvents


def _factor(T: TruncatedOperator, beta: float):
    A = sp.csc_matrix(T.matrix + beta * sp.identity(T.n, format="csc"))
    return spla.splu(A)


def resolvent_apply(T: TruncatedOperator, beta: float, f, *, check: bool = True) -> np.ndarray:
    """g = (T + β)^{-1} f."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    f = np.asarray(f)
    lu = _factor(T, beta)
    g = lu.solve(f.astype(complex) if np.iscomplexobj(f) else f.astype(float))
    if check:
        r = T.matrix @ g + beta * g - f
        if np.linalg.norm(r) > 1e-8 * max(1.0, np.linalg.norm(f)) * (1 + beta):
            raise SolverError(f"resolvent residual {np.linalg.norm(r):.3e}; operator ill-conditioned")
    return g


class Resolvent:
    """(T + β)^{-1} with a cached factorization."""

    def __init__(self, T: TruncatedOperator, beta: float):
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.T, self.beta = T, beta
        self._lu = _factor(T, beta)

    def __call__(self, f):
        return self._lu.solve(np.asarray(f, dtype=float))


# ---------------------------------------------------------------------------
# heat kernel


@dataclass(frozen=True)
class HeatKernelSample:
    t: float
    x: object
    y: object
    value: float
    method: str


def heat_kernel(T: TruncatedOperator, t: float, x, y, *, method: str = "auto") -> HeatKernelSample:
    """p_t(x, y) with ⟨δ_x, e^{-tT} δ_y⟩ = m(x) m(y) p_t(x, y)."""
    idx = T.index
    i, j = idx[x], idx[y]
    e = np.zeros(T.n)
    e[j] = 1.0
    method = _pick_method(T, t, method) if t > 0 else "identity"
    col = semigroup_apply(T, t, e, method=method if t > 0 else "uniformization")
    return HeatKernelSample(t, x, y, float(col[i] / T.m[j]), method)


def heat_kernel_matrix(T: TruncatedOperator, t: float, *, min_terms: int | None = None) -> np.ndarray:
    """All p_t(x, y); ``min_terms`` (default |K|) forces enough series terms to reach every vertex."""
    n = T.n
    if min_terms is None:
        min_terms = n
    if _pick_method(T, t, "auto") == "squaring":
        E = semigroup_matrices(T, t)[0]
    else:
        E = semigroup_apply(T, t, np.eye(n), method="uniformization", min_terms=min_terms)
    return E / T.m[None, :]


# ---------------------------------------------------------------------------
# bottom of the spectrum


@dataclass(frozen=True)
class SpectralBottom:
    """E0 and its positive ground state, normalized in ℓ²(K, m)."""

    energy: float
    ground_state: np.ndarray
    residual: float
    component: np.ndarray
    per_component: tuple = ()
    iterations: int = 0


def _inverse_iteration(S: sp.csr_matrix, tol: float, maxiter: int):
    n = S.shape[0]
    if n == 1:
        return float(S[0, 0]), np.ones(1), 0.0, 0
    scale = max(1.0, float(abs(S).sum(axis=1).max()))
    sigma = -1e-9 * scale
    A = sp.csc_matrix(S - sigma * sp.identity(n))
    lu = spla.splu(A)
    v = np.full(n, 1.0 / math.sqrt(n))
    theta, r = math.inf, math.inf
    it = 0
    for it in range(1, maxiter + 1):
        v = lu.solve(v)
        v /= np.linalg.norm(v)
        Sv = S @ v
        theta = float(v @ Sv)
        r = float(np.linalg.norm(Sv - theta * v))
        if r <= tol * scale:
            break
        # move the shift up once the iterate is close, keeping it below theta - r
        if it % 25 == 0 and theta - 2 * r > sigma:
            sigma = theta - 2 * r
            lu = spla.splu(sp.csc_matrix(S - sigma * sp.identity(n)))
    if v.sum() < 0:
        v = -v
    return theta, v, r, it


def bottom_of_spectrum(T: TruncatedOperator, *, tol: float = 1e-13,
                       maxiter: int = 5000) -> SpectralBottom:
    """Smallest eigenvalue E0 and positive ground state Φ, per connected component.

    Shifted inverse iteration on the symmetrized matrix started from the
    positive constant vector. The returned Φ lives on the component with the
    smallest energy and vanishes elsewhere.
    """
    S = T.symmetrized()
    labels = T.components()
    results = []
    sq = np.sqrt(T.m)
    for comp in range(labels.max() + 1):
        idx = np.flatnonzero(labels == comp)
        Sc = sp.csr_matrix(S[idx][:, idx])
        theta, v, r, it = _inverse_iteration(Sc, tol, maxiter)
        phi = np.zeros(T.n)
        phi[idx] = v / sq[idx]
        results.append((theta, phi, r, it, comp))
    theta, phi, r, it, comp = min(results, key=lambda p: p[0])
    if r > 1e-6 * max(1.0, abs(theta)):
        raise SolverError(f"inverse iteration did not converge (residual {r:.2e})")
    return SpectralBottom(theta, phi, r, labels == comp,
                          tuple((p[0], p[1]) for p in results), it)


def dense_bottom(T: TruncatedOperator):
    """Dense-eigensolver oracle for E0 and Φ (connected T)."""
    S = T.symmetrized().toarray()
    lam, V = np.linalg.eigh((S + S.T) / 2)
    v = V[:, 0]
    if v.sum() < 0:
        v = -v
    return float(lam[0]), v / np.sqrt(T.m)


def _path_order(T: TruncatedOperator):
    A = T.adjacency().tolil()
    deg = np.asarray(T.adjacency().sum(axis=1)).ravel()
    if T.n < 2 or deg.max() > 2 or (deg == 1).sum() != 2:
        return None
    start = int(np.flatnonzero(deg == 1)[0])
    order, prev, cur = [start], -1, start
    while len(order) < T.n:
        nxt = [j for j in A.rows[cur] if j != prev]
        if not nxt:
            return None
        prev, cur = cur, nxt[0]
        order.append(cur)
    return np.array(order)


def spectral_radius(T: TruncatedOperator) -> float:
    """Largest eigenvalue of T (all eigenvalues are real and non-negative)."""
    S = T.symmetrized()
    if T.n <= 2000:
        return float(sla.eigvalsh(S.toarray())[-1])
    order = _path_order(T)
    if order is not None:
        Sp = S[order][:, order]
        d = Sp.diagonal()
        e = np.array([Sp[i, i + 1] for i in range(T.n - 1)])
        return float(sla.eigvalsh_tridiagonal(d, e, select="i",
                                              select_range=(T.n - 1, T.n - 1))[0])
    return float(spla.eigsh(S, k=1, which="LA", tol=1e-12, return_eigenvectors=False)[0])


# ---------------------------------------------------------------------------
# positivity improvement, Li asymptotics


@dataclass(frozen=True)
class PositivityReport:
    verdict: str
    connected: bool
    min_within: float
    max_across: float
    times: tuple

    @property
    def consistent(self) -> bool:
        return (self.verdict == "improving") == self.connected and self.max_across == 0.0


def positivity_improving_check(T: TruncatedOperator, times=(0.1, 1.0, 10.0)) -> PositivityReport:
    """Kernel positivity within components and exact zeros across them."""
    labels = T.components()
    same = labels[:, None] == labels[None, :]
    connected = bool(labels.max() == 0)
    min_within, max_across = math.inf, 0.0
    for t in times:
        if not t > 0:
            raise ValueError("times must be positive")
        p = heat_kernel_matrix(T, t)
        min_within = min(min_within, float(p[same].min()))
        if (~same).any():
            max_across = max(max_across, float(np.abs(p[~same]).max()))
    improving = connected and min_within > 0
    return PositivityReport("improving" if improving else "not-improving", connected,
                            min_within, max_across, tuple(times))


@dataclass(frozen=True)
class LiAsymptotics:
    times: np.ndarray
    log_rate: np.ndarray  # log p_t(x,y) / t
    normalized: np.ndarray  # e^{t E0} p_t(x,y)
    energy: float
    limit: float  # Φ(x) Φ(y)

    @property
    def rate_deviation(self) -> float:
        return float(abs(self.log_rate[-1] + self.energy))

    @property
    def kernel_deviation(self) -> float:
        return float(abs(self.normalized[-1] - self.limit))


def li_asymptotics(T: TruncatedOperator, x, y, times, *, bottom: SpectralBottom | None = None,
                   tol: float = 1e-15) -> LiAsymptotics:
    """log p_t(x,y)/t and e^{tE0} p_t(x,y) along increasing times.

    The kernel is computed as e^{-t(T - E0)} in the uniformized series, so no
    quantity underflows at large t; ``log p_t`` is then ``log(e^{tE0} p_t) - tE0``.
    """
    labels = T.components()
    idx = T.index
    i, j = idx[x], idx[y]
    if labels[i] != labels[j]:
        raise ValueError("x and y lie in different components")
    keep = np.flatnonzero(labels == labels[i])
    sub = TruncatedOperator(tuple(T.vertices[k] for k in keep),
                            sp.csr_matrix(T.matrix[keep][:, keep]), T.m[keep], T.c[keep],
                            T.boundary_weight[keep], T.bc)
    if bottom is None:
        bottom = bottom_of_spectrum(sub)
    E0 = bottom.energy
    si, sj = int(np.searchsorted(keep, i)), int(np.searchsorted(keep, j))
    e = np.zeros(sub.n)
    e[sj] = 1.0
    times = np.asarray(times, float)
    norm = np.empty(len(times))
    for a, t in enumerate(times):
        col = _uniformized(sub, t, e, shift=E0, tol=tol)[0]
        norm[a] = col[si] / sub.m[sj]
    log_rate = np.log(norm) / times - E0
    phi = bottom.ground_state
    return LiAsymptotics(times, log_rate, norm, E0, float(phi[si] * phi[sj]))


# ---------------------------------------------------------------------------
# resolvent identities


@dataclass(frozen=True)
class ResolventLimit:
    betas: tuple
    values: tuple
    target: complex
    deviations: tuple
    scale: float

    @property
    def monotone(self) -> bool:
        d = self.deviations
        return all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(d, d[1:]))


def resolvent_limit_check(gen, T: TruncatedOperator, u, v,
                          betas=(10.0, 100.0, 1000.0, 10000.0)) -> ResolventLimit:
    """β⟨u − βG_β u, v⟩ against ⟨L̃u, v⟩ for v supported in the interior of K.

    ``u`` and ``v`` are vectors on K (extended by zero). The target pairing is
    evaluated with the formal operator of ``gen``. ``scale`` is
    ‖T‖² ‖u‖ ‖v‖, the a priori bound on β·deviation.
    """
    gen = as_generator(gen)
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    bw = T.boundary_weight
    if np.any((v != 0) & (bw > 0)):
        raise ValueError("v must vanish on the inner boundary of K")
    ufun = dict(zip(T.vertices, u))
    target = 0.0
    for k in np.flatnonzero(v):
        x = T.vertices[k]
        target += apply_formal(gen, ufun, x) * v[k] * T.m[k]
    vals, devs = [], []
    for beta in betas:
        g = resolvent_apply(T, beta, u)
        val = beta * T.inner(u - beta * g, v)
        vals.append(float(np.real(val)))
        devs.append(float(abs(val - target)))
    rho = spectral_radius(T) if T.n <= DENSE_LIMIT * 10 else float(2 * np.max(T.diagonal))
    scale = rho ** 2 * T.norm(u) * T.norm(v)
    return ResolventLimit(tuple(betas), tuple(vals), float(target), tuple(devs), scale)


@dataclass(frozen=True)
class FBetaCheck:
    lhs: float
    half_sum_first: float
    half_sum_second: float
    form_gap: float  # max |first - second| entrywise
    min_first: float
    identity_gap: float  # |lhs - half_sum| relative


def f_beta_identity_check(T: TruncatedOperator, beta: float, u) -> FBetaCheck:
    """Both expressions of f_β and the identity β⟨u − βG_β u, u⟩ = ½⟨f_β, 1⟩.

    The first expression applies G_β to the n functions (u(x)1 − u)², one per
    vertex, literally.
    """
    u = np.asarray(u, float)
    n = T.n
    lu = _factor(T, beta)
    G = lambda f: lu.solve(np.asarray(f, float))  # noqa: E731
    one = np.ones(n)
    G1 = G(one)
    Gu = G(u)
    Gu2 = G(u ** 2)
    W = (u[None, :] - u[:, None]) ** 2  # column x holds (u(x) - u)^2
    GW = G(W)
    first = beta ** 2 * np.diag(GW) + 2 * beta * u ** 2 * (1 - beta * G1)
    second = (-beta * (u ** 2 - beta * Gu2) + 2 * beta * u * (u - beta * Gu)
              + beta * u ** 2 * (1 - beta * G1))
    lhs = float(beta * T.inner(u - beta * Gu, u))
    h1 = 0.5 * float(np.sum(first * T.m))
    h2 = 0.5 * float(np.sum(second * T.m))
    scale = max(1.0, abs(lhs), 0.5 * float(np.sum(np.abs(first) * T.m)))
    fscale = max(1.0, float(np.max(np.abs(first))))
    return FBetaCheck(lhs, h1, h2, float(np.max(np.abs(first - second))) / fscale,
                      float(first.min()) / fscale, abs(lhs - h1) / scale)
