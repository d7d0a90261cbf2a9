"""Weights on R^n and their quasi-analyticity.

A weight is a bounded non-negative function.  Every weight here exposes
``log_at(X)``; radial ones additionally expose ``log_radial(L)``, the log of
the weight as a function of ``L = log ||x||``, which keeps the iterated
logarithm families exact far beyond the range of binary64.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import optimize

from .cubature import log_cubature
from .errors import CriterionError, UnboundedError
from .expr import Expression, parse_expression
from .quad import FiniteVerdict, INFINITE, TailProfile, classify_tail
from .series import CONVERGENT, DIVERGENT, classify_series
from .signedlog import SignedLog

__all__ = [
    "Weight", "RadialRho", "RepeatedLog", "ExpDecay", "CompactSupport", "Tensor",
    "AffineImage", "ExprWeight", "RadialExtension", "QAVerdict",
    "QUASI_ANALYTIC", "NOT_QUASI_ANALYTIC", "INCONCLUSIVE",
    "weight_at", "log_weight", "sup_norm_sequence", "classify_quasianalytic",
    "radial_extension", "log_negativity_integral", "rho_divergence", "parse_rho",
    "neglog_convex", "RhoIntegral", "definition_partial_sums", "weight_bound",
]

QUASI_ANALYTIC, NOT_QUASI_ANALYTIC, INCONCLUSIVE = "QUASI_ANALYTIC", "NOT_QUASI_ANALYTIC", "INCONCLUSIVE"
ALIASES_1D = {"s": 1, "t": 1, "x": 1}
T_MAX = 700.0          # largest log-radius at which a rho expression is evaluated
NEG_TOL = 1e-2         # classification tolerance for slowly converging log integrals
_L_GRID_STEP = math.log(10.0) / 64.0


def parse_rho(text: str) -> Expression:
    """Parse a one-variable expression written in ``s``, ``t``, ``x`` or ``x1``."""
    return parse_expression(text, 1, ALIASES_1D)


# ---------------------------------------------------------------------------
# rho integrals  F(t) = ∫_{log R}^{t} rho(e^u) du  =  ∫_R^{e^t} rho(s)/s ds

class RhoIntegral:
    """Panel Gauss-Legendre table for ``F`` on ``[log R, T_MAX]``."""

    def __init__(self, rho: Expression, R: float, h: float = 0.25, nodes: int = 16):
        if R <= 0:
            raise CriterionError("R must be positive")
        self.rho = rho
        self.t0 = math.log(R)
        self.h = h
        self.x, self.w = np.polynomial.legendre.leggauss(nodes)
        n_panels = max(int(math.ceil((T_MAX - self.t0) / h)), 1)
        self.edges = self.t0 + h * np.arange(n_panels + 1)
        self._validate()
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        T = mids[:, None] + 0.5 * h * self.x[None, :]
        vals = self.rho_at(T.ravel()).reshape(T.shape)
        panel = 0.5 * h * vals @ self.w
        self.F_edges = np.concatenate([[0.0], np.cumsum(panel)])

    def rho_at(self, t):
        with np.errstate(over="ignore"):
            s = np.exp(np.asarray(t, dtype=float))
        return self.rho.evaluate(s.reshape(-1, 1), on_nan="raise")

    def _validate(self):
        t = np.linspace(self.t0, T_MAX, 4001)[1:]
        v = self.rho_at(t)
        if np.any(v < 0):
            raise CriterionError(f"rho {self.rho.text!r} is negative on (R, inf)")
        fin = np.isfinite(v)
        d = np.diff(v[fin])
        if np.any(d < -1e-10 * np.maximum(np.abs(v[fin][:-1]), 1.0)):
            raise CriterionError(f"rho {self.rho.text!r} is not non-decreasing on (R, inf)")

    def __call__(self, t):
        """``F(t)``; 0 below ``log R`` and +inf beyond ``T_MAX``."""
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.zeros_like(flat)
        over = flat > T_MAX
        inside = (flat > self.t0) & ~over
        if inside.any():
            ti = flat[inside]
            k = np.minimum(((ti - self.t0) // self.h).astype(int), self.edges.size - 2)
            a = self.edges[k]
            half = 0.5 * (ti - a)
            nodes = a[:, None] + half[:, None] * (1.0 + self.x[None, :])
            vals = self.rho_at(nodes.ravel()).reshape(nodes.shape)
            out[inside] = self.F_edges[k] + half * (vals @ self.w)
        out[over] = np.inf
        return out.reshape(t.shape)


def _doubling_bounds(start, limit=None, shells=12):
    T = max(start, 0.0) + 1.0
    b = [start] + [T * 2.0 ** k for k in range(shells)]
    if limit is not None:
        b = [x for x in b if x <= limit]
    return b


def _log_profile(logg, bounds):
    """Tail profile of a 1-D log-form integrand over consecutive intervals."""
    incs, errs = [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        r = log_cubature(logg, [a], [b], [0.5 * (a + b)], [0.5 * (b - a)], tol=1e-10)
        incs.append(SignedLog(r.sign, r.log))
        errs.append(r.rel_err)
    return TailProfile.from_increments(incs, bounds[1:], errs)


# ---------------------------------------------------------------------------
# weights

class Weight:
    dim: int = 1
    radial = False

    def log_at(self, X):
        raise NotImplementedError

    def neglog_along(self, x, y, s):
        """``(sign, log|-log w(x + e^s y)|)`` for arrays of ``s``."""
        s = np.minimum(np.asarray(s, dtype=float), 690.0)
        P = np.asarray(x, float)[None, :] + np.exp(s)[:, None] * np.asarray(y, float)[None, :]
        lw = self.log_at(P)
        v = -lw
        with np.errstate(divide="ignore"):
            return np.sign(v), np.log(np.abs(v))

    def neglog_horizon(self):
        return 690.0


class _Radial(Weight):
    radial = True

    def log_radial(self, L):
        raise NotImplementedError

    def log_at(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.dim) if self.dim > 1 else X.reshape(-1, 1)
        r = np.linalg.norm(X, axis=1)
        with np.errstate(divide="ignore"):
            return self.log_radial(np.log(r))

    def neglog_radial(self, L):
        v = -self.log_radial(L)
        with np.errstate(divide="ignore"):
            return np.sign(v), np.log(np.abs(v))

    def neglog_along(self, x, y, s):
        s = np.asarray(s, dtype=float)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        with np.errstate(over="ignore"):
            d = y[None, :] + np.exp(-s)[:, None] * x[None, :]
        L = s + np.log(np.linalg.norm(d, axis=1))
        return self.neglog_radial(L)

    def neglog_horizon(self):
        return math.inf


@dataclass(frozen=True)
class RadialRho(_Radial):
    """``w(x) = C exp(-∫_R^{||x||} rho(s)/s ds)`` outside the ball of radius R, C inside."""

    R: float
    rho: Expression
    C: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if isinstance(self.rho, str):
            object.__setattr__(self, "rho", parse_rho(self.rho))
        if self.R <= 0 or self.C <= 0:
            raise CriterionError("R and C must be positive")

    @cached_property
    def F(self) -> RhoIntegral:
        return RhoIntegral(self.rho, self.R)

    def log_radial(self, L):
        return math.log(self.C) - self.F(L)

    def neglog_horizon(self):
        return T_MAX


def _iter_log(v, times):
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(times):
            v = np.log(v)
    return v


def _neglog_from_exponent(E, lc):
    """``(sign, log|exp(E) - lc|)`` without overflow for large ``E``."""
    E = np.asarray(E, dtype=float)
    if lc == 0.0:
        return np.ones_like(E), E
    with np.errstate(over="ignore"):
        v = np.exp(E) - lc
    big = E > 700
    with np.errstate(divide="ignore"):
        return np.where(big, 1.0, np.sign(v)), np.where(big, E, np.log(np.abs(v)))


_LOG_TOWER = [None, 1.0, math.e, math.exp(math.e), math.exp(math.exp(math.e))]


@dataclass(frozen=True)
class RepeatedLog(_Radial):
    """``w(x) = C exp(-||x||^2 / Π_j log_j^{p_j}(a_j ||x||))`` for ``||x|| >= R_eff``.

    Below ``R_eff`` the weight is held constant at its value on the sphere of
    radius ``R_eff``, the smallest radius at least ``R`` where every
    ``log_j(a_j r)`` with ``p_j != 0`` is at least 1.
    """

    a: tuple
    p: tuple
    R: float = 0.0
    C: float = 1.0
    dim: int = 1

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        p = tuple(float(v) for v in self.p)
        if len(a) < len(p):
            a = a + (1.0,) * (len(p) - len(a))
        if not p:
            raise ValueError("need at least one exponent")
        if any(v <= 0 for v in a):
            raise ValueError("a_j must be positive")
        if len(p) > len(_LOG_TOWER):
            raise ValueError("at most five repeated-logarithm levels are supported")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)

    @property
    def j0(self) -> int:
        for j, pj in enumerate(self.p):
            if pj != 1.0:
                return j
        return len(self.p)

    @property
    def p_j0(self) -> float:
        return self.p[self.j0] if self.j0 < len(self.p) else 0.0

    @cached_property
    def L_eff(self) -> float:
        L = math.log(self.R) if self.R > 0 else -math.inf
        for j in range(1, len(self.p)):
            if self.p[j] != 0:
                L = max(L, _LOG_TOWER[j] - math.log(self.a[j]))
        return L if L > -math.inf else -30.0

    @property
    def R_eff(self) -> float:
        return math.exp(self.L_eff)

    def log_exponent(self, L):
        """``log(||x||^2 / Π log_j^{p_j}(a_j ||x||))`` as a function of ``L = log ||x||``."""
        L = np.maximum(np.asarray(L, dtype=float), self.L_eff)
        E = 2.0 * L
        for j, (aj, pj) in enumerate(zip(self.a, self.p)):
            if pj != 0:
                E = E - pj * _iter_log(math.log(aj) + L, j)
        return E

    def log_radial(self, L):
        with np.errstate(over="ignore"):
            return math.log(self.C) - np.exp(self.log_exponent(L))

    def neglog_radial(self, L):
        return _neglog_from_exponent(self.log_exponent(L), math.log(self.C))

    def integrand_log(self, L):
        """``log`` of the reciprocal ``1/w`` with ``C = 1``: ``exp(log_exponent(L))``."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_exponent(L))


@dataclass(frozen=True)
class ExpDecay(_Radial):
    """``C exp(-eps ||x||)``: the repeated-log case ``p = (1, 0)``, ``a_0 = 1/eps``."""

    eps: float
    C: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    def log_radial(self, L):
        with np.errstate(over="ignore"):
            return math.log(self.C) - self.eps * np.exp(np.asarray(L, dtype=float))

    def neglog_radial(self, L):
        return _neglog_from_exponent(math.log(self.eps) + np.asarray(L, dtype=float), math.log(self.C))

    def as_repeated_log(self):
        return RepeatedLog((1.0 / self.eps, 1.0), (1.0, 0.0), C=self.C, dim=self.dim)


@dataclass(frozen=True)
class CompactSupport(_Radial):
    """Indicator of the closed ball of the given radius."""

    radius: float
    dim: int = 1

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def log_radial(self, L):
        L = np.asarray(L, dtype=float)
        return np.where(L <= math.log(self.radius), 0.0, -np.inf)


@dataclass(frozen=True)
class RadialExtension(_Radial):
    """``w'(x) = w(||x||)`` for a one-dimensional weight ``w``."""

    inner: Weight
    dim: int = 2

    def __post_init__(self):
        if self.inner.dim != 1:
            raise ValueError("radial extension needs a one-dimensional weight")

    def log_radial(self, L):
        with np.errstate(over="ignore"):
            r = np.exp(np.asarray(L, dtype=float))
        return self.inner.log_at(r.reshape(-1, 1)).reshape(np.shape(L))


@dataclass(frozen=True)
class ExprWeight(Weight):
    expr: Expression
    dim: int = 1

    def __post_init__(self):
        if isinstance(self.expr, str):
            aliases = ALIASES_1D if self.dim == 1 else None
            object.__setattr__(self, "expr", parse_expression(self.expr, self.dim, aliases))
        if self.expr.dimension != self.dim:
            raise ValueError("expression dimension differs from weight dimension")

    def log_at(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.dim) if self.dim > 1 else X.reshape(-1, 1)
        s, l = self.expr.evaluate_log(X, on_nan="raise")
        if np.any(s < 0):
            raise ValueError(f"weight {self.expr.text!r} is negative")
        return np.where(s > 0, l, -np.inf)


@dataclass(frozen=True)
class Tensor(Weight):
    """``w(x) = Π_j w_j(x_j)`` for one-dimensional factors."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors or any(f.dim != 1 for f in self.factors):
            raise ValueError("tensor factors must be one-dimensional")

    @property
    def dim(self):
        return len(self.factors)

    def log_at(self, X):
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        return sum(f.log_at(X[:, [j]]) for j, f in enumerate(self.factors))


@dataclass(frozen=True)
class AffineImage(Weight):
    """``w(x) = inner(A_0^{-1}(x - b))`` for ``A(x) = A_0 x + b``.

    If ``inner`` is quasi-analytic with respect to ``{u_j}``, ``w`` is
    quasi-analytic with respect to ``{v_j}`` where ``A_0^t v_j = u_j``.
    """

    matrix: tuple
    offset: tuple
    inner: Weight

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        n = self.inner.dim
        if A.shape != (n, n):
            raise ValueError("matrix shape does not match the inner weight")
        if abs(np.linalg.det(A)) < 1e-12:
            raise ValueError("affine map is not invertible")
        b = np.zeros(n) if self.offset is None else np.asarray(self.offset, dtype=float)
        object.__setattr__(self, "matrix", tuple(map(tuple, A)))
        object.__setattr__(self, "offset", tuple(b))

    @property
    def dim(self):
        return self.inner.dim

    @property
    def A0(self):
        return np.array(self.matrix)

    def log_at(self, X):
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        Y = (X - np.array(self.offset)) @ np.linalg.inv(self.A0).T
        return self.inner.log_at(Y)

    def transport(self, U):
        """Rows ``u_j`` of a basis for ``inner`` -> rows ``v_j`` with ``A_0^t v_j = u_j``."""
        return np.linalg.solve(self.A0.T, np.asarray(U, dtype=float).T).T


def log_weight(w: Weight, X):
    return w.log_at(X)


def weight_at(w: Weight, x) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(np.exp(w.log_at(x)[0]))


def radial_extension(w1d: Weight, n: int) -> Weight:
    if w1d.dim != 1:
        raise ValueError("radial extension needs a one-dimensional weight")
    if isinstance(w1d, _Radial) and not isinstance(w1d, RadialExtension):
        return dataclasses.replace(w1d, dim=n)
    return RadialExtension(w1d, n)


# ---------------------------------------------------------------------------
# sup norms  ||(v, x)^m w(x)||_inf  in log form

def _maximize_L(fun, lo=-30.0, hi=60.0):
    """Max of a unimodal function of ``L`` on a log grid, then golden refinement."""
    for _ in range(30):
        L = np.arange(lo, hi + _L_GRID_STEP, _L_GRID_STEP)
        v = fun(L)
        if np.all(v == -np.inf):
            return -math.inf
        k = int(np.argmax(v))
        if k == L.size - 1 and v[k] > -np.inf:
            if hi > 2e5:
                raise UnboundedError("sup-norm grows without bound: weight decays too slowly")
            hi = 2.0 * hi + 10.0
            continue
        if k == 0 and lo > -700:
            lo = 2.0 * lo - 10.0
            continue
        break
    a, b = L[max(k - 1, 0)], L[min(k + 1, L.size - 1)]
    best = float(v[k])
    if b > a:
        res = optimize.minimize_scalar(lambda t: -float(fun(np.array([t]))[0]), bounds=(a, b),
                                       method="bounded", options={"xatol": 1e-12})
        if res.success and -res.fun > best:
            best = float(-res.fun)
    return best


def _directions(n):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = np.linspace(0, 2 * np.pi, 721)[:-1]
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    k = 2000
    i = np.arange(k) + 0.5
    ph = np.arccos(1 - 2 * i / k)
    th = np.pi * (1 + 5 ** 0.5) * i
    return np.stack([np.cos(th) * np.sin(ph), np.sin(th) * np.sin(ph), np.cos(ph)], axis=1)


def _maximize_nd(obj, n):
    """Numerical sup of ``obj`` over R^n (directions x log-radii, then Nelder-Mead)."""
    D = _directions(n)
    lo, hi = -20.0, 40.0
    for _ in range(12):
        L = np.arange(lo, hi + 0.1, 0.1)
        P = (np.exp(L)[:, None, None] * D[None, :, :]).reshape(-1, n)
        v = obj(P)
        k = int(np.argmax(v))
        li = k // D.shape[0]
        if li == L.size - 1 and v[k] > -np.inf:
            if hi > 650:
                raise UnboundedError("sup-norm grows without bound: weight decays too slowly")
            hi = min(2 * hi, 700.0)
            continue
        break
    if v[k] == -np.inf:
        return -math.inf
    x0 = P[k]
    res = optimize.minimize(lambda x: -float(obj(x.reshape(1, -1))[0]), x0, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
    return max(float(v[k]), float(-res.fun) if np.isfinite(res.fun) else -math.inf)


def _mlog(m, z):
    with np.errstate(divide="ignore"):
        return m * np.log(np.abs(z)) if m else np.zeros_like(z)


def _sup_log(w: Weight, v, m: int, c: float = 0.0) -> float:
    """``log sup_x |(v, x) + c|^m w(x)``."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if isinstance(w, AffineImage):
        u = w.A0.T @ v
        return _sup_log(w.inner, u, m, c + float(v @ np.array(w.offset)))
    if isinstance(w, _Radial):
        nv = float(np.linalg.norm(v))
        if isinstance(w, CompactSupport):
            return float(_mlog(m, nv * w.radius + abs(c))) if m else 0.0
        if isinstance(w, ExpDecay) and c == 0.0 and m > 0:
            return m * math.log(nv) + m * (math.log(m / w.eps) - 1.0) + math.log(w.C)
        if m > 0 and nv == 0 and c == 0:
            return -math.inf

        def fun(L):
            with np.errstate(over="ignore"):
                z = nv * np.exp(L) + abs(c)
            return _mlog(m, z) + w.log_radial(L)

        best = _maximize_L(fun)
        if c != 0 or m == 0:
            best = max(best, float(_mlog(m, abs(c))) + float(w.log_radial(np.array([-np.inf]))[0]))
        return best
    if isinstance(w, Tensor):
        nz = np.nonzero(v)[0]
        if nz.size == 1 and c == 0.0:
            j = int(nz[0])
            total = m * math.log(abs(v[j])) + _sup_log(w.factors[j], [1.0], m)
            for i, f in enumerate(w.factors):
                if i != j:
                    total += _sup_log(f, [1.0], 0)
            return total
        if m == 0:
            return sum(_sup_log(f, [1.0], 0) for f in w.factors)
    return _maximize_nd(lambda X: _mlog(m, X @ v + c) + w.log_at(X), w.dim)


def sup_norm_sequence(w: Weight, v, m: int) -> SignedLog:
    """``||(v, x)^m w(x)||_inf`` as a SignedLog."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return SignedLog.from_log(_sup_log(w, v, m))


def weight_bound(w: Weight) -> float:
    """``sup w``."""
    return math.exp(_sup_log(w, np.zeros(w.dim), 0))


# ---------------------------------------------------------------------------
# tests on the real line

def rho_divergence(w_or_rho, R=None, shells=12, tol=NEG_TOL) -> FiniteVerdict:
    """Finite/infinite verdict for ``∫_R^∞ rho(s)/s^2 ds`` (``= ∫ rho(e^t) e^{-t} dt``)."""
    if isinstance(w_or_rho, RadialRho):
        rho, R = w_or_rho.rho, w_or_rho.R
    else:
        rho = parse_rho(w_or_rho) if isinstance(w_or_rho, str) else w_or_rho
    RhoIntegral(rho, R)  # validates rho

    def logg(U):
        t = U[:, 0]
        s, l = rho.evaluate_log(np.exp(t).reshape(-1, 1), on_nan="raise")
        return s, l - t

    bounds = _doubling_bounds(math.log(R), T_MAX, shells)
    if len(bounds) < 5:
        raise CriterionError(f"R = {R} leaves too few shells below the evaluation horizon")
    profile = _log_profile(logg, bounds)
    verdict = classify_tail(profile, tol=tol)
    verdict.evidence["profile"] = profile
    return verdict


def log_negativity_integral(w: Weight, x=None, y=None, R: float = 1.0, shells=12,
                            tol=NEG_TOL) -> FiniteVerdict:
    """Verdict on ``∫_R^∞ log w(x + t y) / (1 + t^2) dt``.

    INFINITE means the integral is ``-∞`` (as for every quasi-analytic
    weight); FINITE is evidence against quasi-analyticity.
    """
    n = w.dim
    x = np.zeros(n) if x is None else np.asarray(x, dtype=float)
    y = np.eye(n)[0] if y is None else np.asarray(y, dtype=float)
    if not np.any(y):
        raise ValueError("direction y must be non-zero")
    if R <= 0:
        raise ValueError("R must be positive")
    if isinstance(w, CompactSupport):
        return FiniteVerdict(INFINITE, None, math.nan,
                             {"reason": "log w = -inf on a set of positive measure"})

    def logg(U):
        s = U[:, 0]
        sg, l = w.neglog_along(x, y, s)
        # t = e^s, dt/(1+t^2) = e^s/(1+e^{2s}) ds; the integrand itself is log w = -(-log w)
        return -sg, l + s - np.logaddexp(0.0, 2.0 * s)

    bounds = _doubling_bounds(math.log(R), w.neglog_horizon(), shells)
    if len(bounds) < 5:
        raise ValueError("too few shells below the evaluation horizon")
    profile = _log_profile(logg, bounds)
    verdict = classify_tail(profile, tol=tol)
    verdict.evidence["profile"] = profile
    return verdict


def neglog_convex(w: _Radial, L_lo=None, L_hi=60.0, n=2001) -> bool:
    """Cross-check: is ``s -> -log w(e^s)`` convex on a grid beyond ``R_eff``?"""
    if L_lo is None:
        L_lo = getattr(w, "L_eff", 0.0)
    s = np.linspace(L_lo, L_hi, n)
    sg, l = w.neglog_radial(s)
    v = sg * np.exp(np.minimum(l - l.max(), 0.0))
    d2 = v[2:] - 2 * v[1:-1] + v[:-2]
    return bool(np.all(d2 >= -1e-10 * np.max(np.abs(v))))


# ---------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class QAVerdict:
    outcome: str
    characterization: str
    basis: tuple | None = None      # None = all bases (when QUASI_ANALYTIC)
    evidence: dict = field(default_factory=dict)

    @property
    def all_bases(self) -> bool:
        return self.outcome == QUASI_ANALYTIC and self.basis is None

    def covers(self, vectors) -> bool:
        """QUASI_ANALYTIC with respect to ``vectors`` (rows, up to scaling and order)?"""
        if self.outcome != QUASI_ANALYTIC:
            return False
        if self.basis is None:
            return True
        return _same_basis(np.array(self.basis), np.asarray(vectors, dtype=float))


def _same_basis(B1, B2):
    if B1.shape != B2.shape:
        return False
    a = B1 / np.linalg.norm(B1, axis=1, keepdims=True)
    b = B2 / np.linalg.norm(B2, axis=1, keepdims=True)
    used = set()
    for row in a:
        hit = [j for j in range(len(b)) if j not in used and
               (np.allclose(row, b[j], atol=1e-9) or np.allclose(row, -b[j], atol=1e-9))]
        if not hit:
            return False
        used.add(hit[0])
    return True


def _standard(n):
    return tuple(map(tuple, np.eye(n)))


def classify_quasianalytic(w: Weight, max_m: int = 40, basis=None) -> QAVerdict:
    """Decide quasi-analyticity using the most specific characterization available."""
    if isinstance(w, RepeatedLog):
        return _classify_repeated_log(w)
    if isinstance(w, ExpDecay):
        v = _classify_repeated_log(w.as_repeated_log())
        return QAVerdict(v.outcome, "exp_decay", None, {"routed_as": "repeated_log p=(1, 0)", **v.evidence})
    if isinstance(w, CompactSupport):
        return QAVerdict(QUASI_ANALYTIC, "compact_support", None,
                         {"note": "sup-norms are at most radius^m"})
    if isinstance(w, RadialRho):
        return _classify_radial_rho(w)
    if isinstance(w, RadialExtension):
        inner = classify_quasianalytic(w.inner, max_m)
        if inner.outcome == QUASI_ANALYTIC:
            return QAVerdict(QUASI_ANALYTIC, "radial_extension", None, {"inner": inner})
        return QAVerdict(inner.outcome, "radial_extension", inner.basis, {"inner": inner})
    if isinstance(w, Tensor):
        return _classify_tensor(w, max_m)
    if isinstance(w, AffineImage):
        inner = classify_quasianalytic(w.inner, max_m)
        if inner.basis is None:
            return QAVerdict(inner.outcome, "affine_image", None, {"inner": inner})
        V = w.transport(np.array(inner.basis))
        return QAVerdict(inner.outcome, "affine_image", tuple(map(tuple, V)), {"inner": inner})
    return definition_partial_sums(w, max_m, basis)


def _classify_repeated_log(w: RepeatedLog) -> QAVerdict:
    ev = {"j0": w.j0, "p_j0": w.p_j0, "R_eff": w.R_eff}
    if w.p_j0 < 1:
        return QAVerdict(QUASI_ANALYTIC, "repeated_log", None, ev)
    return QAVerdict(NOT_QUASI_ANALYTIC, "negative_criterion", None, ev)


def _classify_radial_rho(w: RadialRho) -> QAVerdict:
    div = rho_divergence(w)
    ev = {"rho_integral": div}
    if div.outcome == INFINITE:
        return QAVerdict(QUASI_ANALYTIC, "radial_rho", None, ev)
    if div.outcome == "FINITE":
        neg = log_negativity_integral(w)
        ev["log_negativity"] = neg
        if neg.outcome == "FINITE":
            return QAVerdict(NOT_QUASI_ANALYTIC, "negative_criterion", None, ev)
    return QAVerdict(INCONCLUSIVE, "radial_rho", None, ev)


def _classify_tensor(w: Tensor, max_m) -> QAVerdict:
    parts = [classify_quasianalytic(f, max_m) for f in w.factors]
    B = _standard(w.dim)
    ev = {"factors": parts}
    if all(p.outcome == QUASI_ANALYTIC for p in parts):
        return QAVerdict(QUASI_ANALYTIC, "tensor_product", B, ev)
    if any(p.outcome == NOT_QUASI_ANALYTIC for p in parts):
        return QAVerdict(NOT_QUASI_ANALYTIC, "tensor_product", B, ev)
    return QAVerdict(INCONCLUSIVE, "tensor_product", B, ev)


def definition_partial_sums(w: Weight, max_m: int = 40, basis=None) -> QAVerdict:
    """Partial sums of ``Σ_m ||(v_j, x)^m w||_inf^{-1/m}`` per basis vector."""
    B = np.eye(w.dim) if basis is None else np.asarray(basis, dtype=float)
    per = []
    for v in B:
        logs = []
        for m in range(1, max_m + 1):
            try:
                logs.append(-_sup_log(w, v, m) / m)
            except UnboundedError:
                logs.append(-math.inf)
        per.append(classify_series(log_terms=np.array(logs)))
    outs = {p.outcome for p in per}
    Bt = tuple(map(tuple, B))
    ev = {"series": per}
    if outs == {DIVERGENT}:
        return QAVerdict(QUASI_ANALYTIC, "definition_partial_sums", Bt, ev)
    if CONVERGENT in outs:
        return QAVerdict(NOT_QUASI_ANALYTIC, "definition_partial_sums", Bt, ev)
    return QAVerdict(INCONCLUSIVE, "definition_partial_sums", Bt, ev)
