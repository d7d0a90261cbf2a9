"""L2 approximation experiments: orthonormal polynomials from moments and trigonometric spans."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import NonConvergedError, SingularGramError, UnsupportedOperation
from .expr import Expression
from .measures import (
    Discrete, Exponential1D, Gamma1D, GaussianProduct, LogNormal1D, Measure, PerturbedLogNormal,
)
from .moments import MomentTable, directional_moments
from .quad import LogFn, integrate

__all__ = [
    "Gram", "OrthoPolyBasis", "ProjectionResult", "TrigResult", "gram_matrix", "orthonormalize",
    "poly_projection_error", "char_function", "trig_projection_error", "orthonormality_defect",
    "series_csv", "basis_csv", "PIVOT_THRESHOLD", "EIG_FLOOR",
]

PIVOT_THRESHOLD = 1e-12          # relative pivot floor when moments carry float rounding
EXACT_PIVOT_THRESHOLD = 1e-30    # the same floor for moments known to working precision
EIG_FLOOR = 1e-12
BESSEL_SWITCH = 1e-4             # below this relative residual the error is recomputed directly
MP_DPS = 60


def _exact_moments(spec, K):
    """Moments ``s(0..K)`` as mpmath numbers when a closed form exists, else None."""
    with mpmath.workdps(MP_DPS):
        if isinstance(spec, GaussianProduct) and spec.dim == 1:
            mu, sd = mpmath.mpf(spec.mean[0]), mpmath.mpf(spec.sd[0])
            out = []
            for k in range(K + 1):
                out.append(mpmath.fsum(mpmath.binomial(k, 2 * j) * mu ** (k - 2 * j) * sd ** (2 * j)
                                       * mpmath.fac2(2 * j - 1) for j in range(k // 2 + 1)))
            return out
        if isinstance(spec, Gamma1D):
            a, th = mpmath.mpf(spec.shape), mpmath.mpf(spec.scale)
            return [mpmath.rf(a, k) * th ** k for k in range(K + 1)]
        if isinstance(spec, Exponential1D):
            lam = mpmath.mpf(spec.rate)
            return [mpmath.factorial(k) / lam ** k for k in range(K + 1)]
        if isinstance(spec, LogNormal1D):
            mu, sg = mpmath.mpf(spec.mu), mpmath.mpf(spec.sigma)
            return [mpmath.exp(k * mu + k * k * sg * sg / 2) for k in range(K + 1)]
        if isinstance(spec, PerturbedLogNormal):
            return [mpmath.exp(mpmath.mpf(k * k) / 2) for k in range(K + 1)]
        if isinstance(spec, Discrete) and spec.dim == 1:
            pts = [mpmath.mpf(p) for p in spec.points[:, 0]]
            ms = [mpmath.mpf(m) for m in spec.masses]
            return [mpmath.fsum(m * p ** k for p, m in zip(pts, ms)) for k in range(K + 1)]
    return None


@dataclass(frozen=True)
class Gram:
    """Hankel matrix ``H_ij = s(i + j)`` stored as ``D H D`` with ``D = diag(exp(log_d))``.

    ``D`` equilibrates the diagonal to 1, which keeps lognormal-type moment
    growth (``s(2k) = e^{2k^2}``) representable and well scaled.  ``exact``
    holds the same matrix in high precision when closed-form moments exist.
    """

    scaled: np.ndarray
    log_d: np.ndarray
    fingerprint: str = ""
    exact: object = field(default=None, repr=False, compare=False)

    @property
    def N(self):
        return self.scaled.shape[0] - 1

    @property
    def matrix(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            d = np.exp(-self.log_d)
        return self.scaled * np.outer(d, d)

    def high_precision(self):
        if self.exact is not None:
            return self.exact
        with mpmath.workdps(MP_DPS):
            d = [mpmath.exp(-mpmath.mpf(v)) for v in self.log_d]
            n = self.N + 1
            return mpmath.matrix([[mpmath.mpf(self.scaled[i, j]) * d[i] * d[j] for j in range(n)]
                                  for i in range(n)])


def gram_matrix(source, N: int, tol: float = 1e-12) -> Gram:
    """Gram matrix of ``1, x, ..., x^N`` from a 1-D moment table or a measure."""
    exact = None
    if isinstance(source, Measure):
        if source.dim != 1:
            raise UnsupportedOperation("Gram matrices are built for one-dimensional measures")
        fp = source.fingerprint()
        mom = _exact_moments(source, 2 * N)
        if mom is not None:
            with mpmath.workdps(MP_DPS):
                exact = mpmath.matrix([[mom[i + j] for j in range(N + 1)] for i in range(N + 1)])
        source = directional_moments(source, None, max(2 * N, 1), tol)
    else:
        fp = ""
    if not isinstance(source, MomentTable):
        raise TypeError("expected a MomentTable or a Measure")
    if source.n != 1:
        raise UnsupportedOperation("Gram matrices are built for one-dimensional tables")
    col = source.s[0]
    if len(col) < 2 * N + 1:
        raise ValueError(f"table horizon {len(col) - 1} is below 2N = {2 * N}")
    missing = [k for k in range(2 * N + 1) if not col[k].ok]
    if missing:
        raise ValueError(f"moments of degree {missing} are missing")
    sign = np.array([col[k].value.sign for k in range(2 * N + 1)], dtype=float)
    logs = np.array([col[k].value.log for k in range(2 * N + 1)], dtype=float)
    diag = logs[0::2]
    log_d = np.where(np.isfinite(diag), -0.5 * diag, 0.0)
    i = np.arange(N + 1)
    K = i[:, None] + i[None, :]
    with np.errstate(invalid="ignore"):
        expo = logs[K] + log_d[:, None] + log_d[None, :]
    scaled = np.where(sign[K] != 0, sign[K] * np.exp(np.where(sign[K] != 0, expo, 0.0)), 0.0)
    return Gram(scaled, log_d, fp, exact)


@dataclass(frozen=True)
class OrthoPolyBasis:
    """Orthonormal polynomials ``P_0..P_K`` of a measure.

    ``coeffs[k, i]`` is the coefficient of ``x^i`` in ``P_k``.  Values are
    computed from the three-term recurrence
    ``x P_k = b[k+1] P_{k+1} + a[k] P_k + b[k] P_{k-1}``, ``P_0 = p0``, which
    stays accurate where the monomial expansion cancels catastrophically.
    """

    coeffs: np.ndarray
    a: np.ndarray
    b: np.ndarray
    p0: float
    requested: int
    condition: float
    exact: bool = False
    fingerprint: str = ""

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def truncated(self) -> bool:
        return self.degree < self.requested

    def log_values(self, x):
        """``(sign, log|P_k(x_i)|)`` arrays of shape ``(len(x), degree + 1)``."""
        x = np.asarray(x, dtype=float).ravel()
        K = self.degree + 1
        V = np.empty((x.size, K))
        scale = np.zeros((x.size, K))
        prev = np.zeros(x.size)
        cur = np.full(x.size, self.p0)
        acc = np.zeros(x.size)
        V[:, 0], scale[:, 0] = cur, acc
        for k in range(K - 1):
            nxt = ((x - self.a[k]) * cur - self.b[k] * prev) / self.b[k + 1]
            prev, cur = cur, nxt
            big = np.abs(cur) > 1e100
            if np.any(big):
                f = np.where(big, 1e-100, 1.0)
                prev, cur = prev * f, cur * f
                acc = acc + np.where(big, 100 * math.log(10.0), 0.0)
            V[:, k + 1], scale[:, k + 1] = cur, acc
        with np.errstate(divide="ignore"):
            return np.sign(V), np.log(np.abs(V)) + scale

    def __call__(self, x):
        """Matrix of values ``P_k(x_i)`` with shape ``(len(x), degree + 1)``."""
        s, l = self.log_values(x)
        with np.errstate(over="ignore"):
            return s * np.exp(l)


def orthonormalize(G, threshold: float | None = None, strict: bool = False) -> OrthoPolyBasis:
    """Cholesky factorization ``H = R^T R`` of the Gram matrix with pivot truncation.

    The factorization runs in high precision.  A relative pivot
    ``r_kk^2 / H_kk`` below ``threshold`` ends the basis at degree ``k - 1``;
    with ``strict`` it raises :class:`SingularGramError`.
    """
    if not isinstance(G, Gram):
        A = np.asarray(G, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("Gram matrix must be square")
        G = Gram(A, np.zeros(A.shape[0]))
    if not np.allclose(G.scaled, G.scaled.T, rtol=1e-10, atol=1e-12):
        raise ValueError("Gram matrix is not symmetric")
    if threshold is None:
        threshold = EXACT_PIVOT_THRESHOLD if G.exact is not None else PIVOT_THRESHOLD
    n = G.N + 1
    with mpmath.workdps(MP_DPS):
        H = G.high_precision()
        if not H[0, 0] > 0:
            raise SingularGramError("Gram matrix has a non-positive leading entry")
        R = mpmath.zeros(n, n)
        K = n
        for k in range(n):
            piv = H[k, k] - mpmath.fsum(R[i, k] ** 2 for i in range(k))
            if H[k, k] <= 0 or piv <= threshold * H[k, k]:
                if strict:
                    raise SingularGramError(f"relative pivot below {threshold:g} at degree {k}")
                K = k
                break
            R[k, k] = mpmath.sqrt(piv)
            for j in range(k + 1, n):
                R[k, j] = (H[k, j] - mpmath.fsum(R[i, k] * R[i, j] for i in range(k))) / R[k, k]
        # rows of R^{-T} are the coefficient vectors of P_0..P_{K-1}
        # (back substitution; mpmath's general inverse rejects badly scaled triangles)
        Rinv = mpmath.zeros(K, K) if K else None
        for j in range(K):
            Rinv[j, j] = 1 / R[j, j]
            for i in range(j - 1, -1, -1):
                Rinv[i, j] = -mpmath.fsum(R[i, k] * Rinv[k, j] for k in range(i + 1, j + 1)) / R[i, i]
        coeffs = np.array([[float(Rinv[j, i]) for j in range(K)] for i in range(K)], dtype=float).reshape(K, K)
        a = np.zeros(max(K, 1))
        b = np.zeros(max(K, 1))
        for k in range(K - 1):
            a[k] = float(R[k, k + 1] / R[k, k] - (R[k - 1, k] / R[k - 1, k - 1] if k else 0))
            b[k + 1] = float(R[k + 1, k + 1] / R[k, k])
        p0 = float(1 / R[0, 0])
    cond = float(np.linalg.cond(G.scaled[:K, :K])) if K else math.inf
    return OrthoPolyBasis(coeffs, a, b, p0, n - 1, cond, G.exact is not None, G.fingerprint)


def _as_scalar_fn(f, dim):
    if isinstance(f, Expression):
        return lambda X: f.evaluate(X)
    if callable(f):
        def fn(X):
            return np.asarray(f(X[:, 0] if dim == 1 else X), dtype=float)
        return fn
    raise TypeError("f must be an Expression or a callable")


def _squared(fn):
    def g(X):
        with np.errstate(divide="ignore"):
            return np.ones(X.shape[0]), 2.0 * np.log(np.abs(fn(X)))
    return LogFn(g)


def _signed(fn):
    def g(X):
        v = fn(X)
        with np.errstate(divide="ignore"):
            return np.sign(v), np.log(np.abs(v))
    return LogFn(g)


def orthonormality_defect(basis: OrthoPolyBasis, spec: Measure, tol: float = 1e-10) -> float:
    """``max |<P_i, P_j> - δ_ij|`` with inner products recomputed by quadrature."""
    K = basis.degree + 1
    worst = 0.0
    for i in range(K):
        for j in range(i, K):
            def g(X, i=i, j=j):
                s, l = basis.log_values(X[:, 0])
                return s[:, i] * s[:, j], l[:, i] + l[:, j]
            val = integrate(LogFn(g), spec, tol).value
            worst = max(worst, abs(val - (1.0 if i == j else 0.0)))
    return worst


@dataclass(frozen=True)
class ProjectionResult:
    errors: np.ndarray          # e_0..e_K
    coefficients: np.ndarray    # <f, P_k>
    norm: float                 # ||f||
    basis: OrthoPolyBasis
    method: tuple = ()          # per degree: "bessel" or "direct"

    @property
    def relative(self):
        return self.errors / self.norm if self.norm > 0 else self.errors


def _combination(basis, x, c):
    """``(sign, log|Σ_k c_k P_k(x)|)``."""
    s, l = basis.log_values(x)
    top = np.max(np.where(np.isfinite(l), l, -np.inf), axis=1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    v = (s * np.exp(l - top)) @ c
    with np.errstate(divide="ignore"):
        return np.sign(v), np.log(np.abs(v)) + top[:, 0]


def poly_projection_error(f, spec: Measure, N: int, tol: float = 1e-10) -> ProjectionResult:
    """Distances ``e_k`` from ``f`` to polynomials of degree ``<= k`` in ``L2(spec)``."""
    if spec.dim != 1:
        raise UnsupportedOperation("polynomial projections are implemented for one-dimensional measures")
    fn = _as_scalar_fn(f, 1)
    norm2 = integrate(_squared(fn), spec, tol).value
    if not math.isfinite(norm2):
        raise ValueError("f is not square-integrable against the measure")
    basis = orthonormalize(gram_matrix(spec, N, tol))
    K = basis.degree + 1
    c = np.empty(K)
    for k in range(K):
        def g(X, k=k):
            fs, fl = _signed(fn)(X)
            s, l = basis.log_values(X[:, 0])
            return fs * s[:, k], fl + l[:, k]
        c[k] = integrate(LogFn(g), spec, tol).value
    norm = math.sqrt(norm2)
    errs, methods = [], []
    for k in range(K):
        e2 = norm2 - float(np.sum(c[: k + 1] ** 2))
        if e2 > BESSEL_SWITCH ** 2 * norm2:
            errs.append(math.sqrt(max(e2, 0.0)))
            methods.append("bessel")
            continue
        cc = np.where(np.arange(K) <= k, c, 0.0)

        def r(X, cc=cc):
            qs, ql = _combination(basis, X[:, 0], cc)
            top = np.maximum(ql, 0.0)
            v = fn(X) * np.exp(-top) - qs * np.exp(ql - top)
            with np.errstate(divide="ignore"):
                return np.ones(X.shape[0]), 2.0 * (np.log(np.abs(v)) + top)
        try:
            e2 = integrate(LogFn(r), spec, tol).value
        except NonConvergedError as exc:
            # a residual at rounding level cannot meet a relative tolerance; judge it against ||f||^2
            est = exc.estimate
            if est is None or est.err > tol * norm2:
                raise
            e2 = est.value
        errs.append(math.sqrt(max(e2, 0.0)))
        methods.append("direct")
    return ProjectionResult(np.array(errs), c, norm, basis, tuple(methods))


def char_function(spec: Measure, lam, tol: float = 1e-10) -> complex:
    """``∫ exp(i (λ, x)) dμ``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (spec.dim,):
        raise ValueError(f"λ must have length {spec.dim}")
    if isinstance(spec, GaussianProduct):
        return complex(spec.char_function(lam))
    if not np.any(lam):
        return complex(spec.total_mass())
    re = integrate(_signed(lambda X: np.cos(X @ lam)), spec, tol).value
    im = integrate(_signed(lambda X: np.sin(X @ lam)), spec, tol).value
    return complex(re, im)


@dataclass(frozen=True)
class TrigResult:
    error: float
    norm: float
    gram: np.ndarray
    coefficients: np.ndarray
    floor: float
    regularized: int            # number of eigenvalues lifted to the floor
    notes: tuple = field(default=())


def trig_projection_error(f, spec: Measure, S_grid, tol: float = 1e-10,
                          floor: float = EIG_FLOOR) -> TrigResult:
    """Least-squares distance from ``f`` to ``span{exp(i(λ, x)) : λ in S_grid}`` in ``L2(spec)``."""
    S = np.asarray(S_grid, dtype=float)
    if S.ndim == 1:
        S = S.reshape(-1, 1) if spec.dim == 1 else S.reshape(1, -1)
    if S.shape[0] == 0 or S.shape[1] != spec.dim:
        raise ValueError("S_grid must be a nonempty set of frequencies in R^n")
    fn = _as_scalar_fn(f, spec.dim)
    K = S.shape[0]
    cache: dict = {}

    def mu_hat(d):
        key = tuple(np.round(d, 14) + 0.0)
        if key not in cache:
            cache[key] = char_function(spec, d, tol)
        return cache[key]

    # G[j, k] = <e_k, e_j> = μ̂(λ_k - λ_j)
    G = np.empty((K, K), dtype=complex)
    for j in range(K):
        for k in range(K):
            G[j, k] = mu_hat(S[k] - S[j])
    b = np.empty(K, dtype=complex)
    for j in range(K):
        lam = S[j]
        re = integrate(_signed(lambda X: fn(X) * np.cos(X @ lam)), spec, tol).value
        im = integrate(_signed(lambda X: -fn(X) * np.sin(X @ lam)), spec, tol).value
        b[j] = complex(re, im)
    norm2 = integrate(_squared(fn), spec, tol).value
    G = 0.5 * (G + G.conj().T)
    ev, V = np.linalg.eigh(G)
    fl = floor * float(np.real(np.trace(G))) / K
    lifted = int(np.sum(ev < fl))
    ev = np.maximum(ev, fl)
    c = V @ ((V.conj().T @ b) / ev)
    e2 = norm2 - float(np.real(np.vdot(b, c)))
    notes = (f"{lifted} Gram eigenvalues raised to {fl:.3e}",) if lifted else ()
    return TrigResult(math.sqrt(max(e2, 0.0)), math.sqrt(norm2), G, c, fl, lifted, notes)


def series_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def basis_csv(basis: OrthoPolyBasis) -> str:
    C = basis.coeffs
    header = ["degree"] + [f"c{i}" for i in range(C.shape[1])]
    return series_csv(header, [[k] + list(C[k]) for k in range(C.shape[0])])
