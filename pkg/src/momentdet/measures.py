"""Measures on R^n with enough structure to integrate against them.

Every continuous measure exposes a log-density and a *chart*: a map from a
box in parameter space ``u`` to ``x`` with known log-Jacobian.  Half-line
families use ``x = exp(u)`` so that moments like ``E[X^60]`` of a
lognormal become Gaussian-shaped bumps in ``u``.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .errors import NegativeMassError, SupportError, UnsupportedOperation
from .expr import Expression
from .signedlog import SignedLog, signed_logsumexp

__all__ = [
    "Chart", "Cone", "SupportDescriptor", "MarginalFlags",
    "Measure", "GaussianProduct", "LogNormal1D", "Gamma1D", "Exponential1D",
    "ProductOf1D", "DensityExpr", "Discrete", "PerturbedLogNormal",
    "Pushforward", "Mixture",
    "density_at", "closed_form_moment", "moment_matched_family", "marginal_support",
    "standard_normal",
]

LOG_2PI = math.log(2.0 * math.pi)


def _as_points(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, dim) if dim > 1 else X.reshape(-1, 1)
    return X


# ---------------------------------------------------------------------------
# geometry

@dataclass(frozen=True)
class Cone:
    """Positive convex cone ``C = Σ R>=0 v_j``; ``vectors[j]`` is ``v_j``."""

    vectors: tuple

    def __post_init__(self):
        V = np.array(self.vectors, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValueError("cone needs n vectors in R^n")
        if abs(np.linalg.det(V)) < 1e-12:
            raise ValueError("cone basis is not invertible")
        object.__setattr__(self, "vectors", tuple(tuple(float(c) for c in v) for v in V))

    @classmethod
    def standard(cls, n):
        return cls(tuple(tuple(float(i == j) for j in range(n)) for i in range(n)))

    @property
    def dim(self):
        return len(self.vectors)

    @property
    def matrix(self):
        """Columns are the generators ``v_j``."""
        return np.array(self.vectors, dtype=float).T

    @property
    def dual(self):
        """Rows are the dual vectors ``v_j'`` with ``(v_i', v_j) = δ_ij``."""
        return np.linalg.inv(self.matrix)

    def coords(self, X):
        """Cone coordinates ``y`` with ``x = Σ y_j v_j``."""
        return np.asarray(X, dtype=float) @ self.dual.T

    def contains(self, X, atol=1e-12):
        return np.all(self.coords(X) >= -atol, axis=-1)

    def same_as(self, other):
        if other is None or other.dim != self.dim:
            return False
        a = self.matrix / np.linalg.norm(self.matrix, axis=0)
        b = other.matrix / np.linalg.norm(other.matrix, axis=0)
        used = set()
        for i in range(self.dim):
            hit = [j for j in range(self.dim)
                   if j not in used and np.allclose(a[:, i], b[:, j], atol=1e-10)]
            if not hit:
                return False
            used.add(hit[0])
        return True

    def is_standard(self):
        return np.allclose(self.matrix, np.eye(self.dim))


@dataclass(frozen=True)
class SupportDescriptor:
    """Where a measure lives.

    ``variant`` is one of ``all_space``, ``cone``, ``box``, ``halfline``,
    ``predicate``.  The per-direction flags are True/False or None (unknown).
    """

    variant: str = "all_space"
    cone: Cone | None = None
    bounds: tuple | None = None
    predicate: Expression | None = None
    contains_origin: tuple | None = None
    discrete_unbounded: tuple | None = None

    def __post_init__(self):
        if self.variant not in ("all_space", "cone", "box", "halfline", "predicate"):
            raise ValueError(f"unknown support variant {self.variant!r}")
        if self.variant == "cone" and self.cone is None:
            raise ValueError("cone support needs a basis")
        if self.variant == "box" and self.bounds is None:
            raise ValueError("box support needs bounds")
        if self.variant == "predicate" and self.predicate is None:
            raise ValueError("predicate support needs an expression")

    def as_cone(self, dim):
        if self.variant == "cone":
            return self.cone
        if self.variant == "halfline" and dim == 1:
            return Cone.standard(1)
        return None


@dataclass(frozen=True)
class MarginalFlags:
    contains_origin: bool | None
    discrete_unbounded: bool | None

    def allows_upgrade(self):
        """True when the marginal support is known to avoid {0 and discrete unbounded}."""
        return self.contains_origin is False or self.discrete_unbounded is False

    def unknown(self):
        return self.contains_origin is None and self.discrete_unbounded is None


@dataclass(frozen=True)
class Chart:
    """``x = linear @ T(u)`` with ``T`` acting per axis ('id' or 'log')."""

    kinds: tuple
    lo: tuple
    hi: tuple
    center: tuple
    scale: tuple
    linear: tuple | None = None

    @property
    def dim(self):
        return len(self.kinds)

    def to_x(self, U):
        U = np.asarray(U, dtype=float)
        X = np.empty_like(U)
        logjac = np.zeros(U.shape[0])
        for i, k in enumerate(self.kinds):
            if k == "log":
                with np.errstate(over="ignore"):
                    X[:, i] = np.exp(U[:, i])
                logjac += U[:, i]
            else:
                X[:, i] = U[:, i]
        if self.linear is not None:
            V = np.array(self.linear, dtype=float)
            X = X @ V.T
            logjac += math.log(abs(np.linalg.det(V)))
        return X, logjac

    def axis_interval(self, i, a, b):
        """Map an x-interval on axis ``i`` to u (identity/log axes, no linear part)."""
        if self.kinds[i] == "log":
            if b <= 0:
                return None
            a = max(a, 0.0)
            ua = -math.inf if a == 0 else math.log(a)
            return max(ua, self.lo[i]), min(math.log(b) if math.isfinite(b) else math.inf, self.hi[i])
        return max(a, self.lo[i]), min(b, self.hi[i])


def _id_axis(center=0.0, scale=1.0, lo=-math.inf, hi=math.inf):
    return ("id", lo, hi, center, scale)


def _log_axis(center=0.0, scale=1.0):
    return ("log", -math.inf, math.inf, center, scale)


def _chart(axes, linear=None):
    kinds, lo, hi, c, s = zip(*axes)
    return Chart(tuple(kinds), tuple(lo), tuple(hi), tuple(c), tuple(s), linear)


# ---------------------------------------------------------------------------
# measures

class Measure:
    """Base class.  Subclasses are frozen dataclasses."""

    dim: int = 1

    def logpdf(self, X):
        raise UnsupportedOperation(f"{type(self).__name__} has no Lebesgue density")

    def chart(self) -> Chart:
        raise UnsupportedOperation(f"{type(self).__name__} has no chart")

    def support(self) -> SupportDescriptor:
        return SupportDescriptor("all_space")

    def closed_form_moment(self, j: int, m: int):
        return None

    def sample(self, rng, size):
        """Return ``(X, logw)``; ``logw`` is None for exact draws."""
        raise UnsupportedOperation(f"cannot sample {type(self).__name__}")

    def total_mass(self) -> float:
        return 1.0

    def is_continuous(self):
        return True

    def breakpoints(self):
        """Per-axis u-locations where the chart density has kinks."""
        return None

    def marginal(self, j: int):
        """The j-th coordinate marginal when the measure is a product, else None."""
        return self if self.dim == 1 else None

    def fingerprint(self) -> str:
        return hashlib.sha1(repr(self).encode()).hexdigest()[:16]

    def supported_in(self, cone: Cone) -> bool:
        c = self.support().as_cone(self.dim)
        return c is not None and c.same_as(cone)


def _gauss_raw_moment(mu, sigma, m):
    """E[X^m] for X ~ N(mu, sigma^2) as a SignedLog."""
    if m == 0:
        return SignedLog.one()
    signs, logs = [], []
    for k in range(0, m // 2 + 1):
        # C(m, 2k) mu^(m-2k) sigma^(2k) (2k-1)!!
        p = m - 2 * k
        if p > 0 and mu == 0:
            continue
        lc = gammaln(m + 1) - gammaln(2 * k + 1) - gammaln(p + 1)
        ldf = gammaln(2 * k + 1) - k * math.log(2) - gammaln(k + 1)  # (2k-1)!!
        lmu = p * math.log(abs(mu)) if p > 0 else 0.0
        s = (-1) ** p if mu < 0 else 1
        signs.append(s)
        logs.append(lc + lmu + 2 * k * math.log(sigma) + ldf)
    return signed_logsumexp(signs, logs)


@dataclass(frozen=True)
class GaussianProduct(Measure):
    mean: tuple
    sd: tuple

    def __post_init__(self):
        mean = tuple(float(v) for v in np.atleast_1d(self.mean))
        sd = tuple(float(v) for v in np.atleast_1d(self.sd))
        if len(mean) != len(sd):
            raise ValueError("mean and sd lengths differ")
        if any(s <= 0 for s in sd):
            raise ValueError("standard deviations must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)

    @property
    def dim(self):
        return len(self.mean)

    def logpdf(self, X):
        X = _as_points(X, self.dim)
        mu, sd = np.array(self.mean), np.array(self.sd)
        z = (X - mu) / sd
        return -0.5 * np.sum(z * z, axis=1) - np.sum(np.log(sd)) - 0.5 * self.dim * LOG_2PI

    def chart(self):
        return _chart([_id_axis(m, s) for m, s in zip(self.mean, self.sd)])

    def closed_form_moment(self, j, m):
        return _gauss_raw_moment(self.mean[j], self.sd[j], m)

    def sample(self, rng, size):
        return rng.normal(self.mean, self.sd, size=(size, self.dim)), None

    def marginal(self, j):
        return GaussianProduct((self.mean[j],), (self.sd[j],))

    def char_function(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        mu, sd = np.array(self.mean), np.array(self.sd)
        return complex(np.exp(1j * np.dot(lam, mu) - 0.5 * np.sum((sd * lam) ** 2)))


def standard_normal(n=1):
    return GaussianProduct((0.0,) * n, (1.0,) * n)


class _HalfLine1D(Measure):
    dim = 1

    def support(self):
        return SupportDescriptor("halfline", contains_origin=(True,), discrete_unbounded=(False,))


@dataclass(frozen=True)
class LogNormal1D(_HalfLine1D):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def logpdf(self, X):
        x = _as_points(X, 1)[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(np.where(x > 0, x, 1.0))
            out = -lx - 0.5 * ((lx - self.mu) / self.sigma) ** 2 - math.log(self.sigma) - 0.5 * LOG_2PI
        return np.where(x > 0, out, -np.inf)

    def chart(self):
        return _chart([_log_axis(self.mu, self.sigma)])

    def closed_form_moment(self, j, m):
        return SignedLog(1, m * self.mu + 0.5 * (m * self.sigma) ** 2)

    def sample(self, rng, size):
        return rng.lognormal(self.mu, self.sigma, size=(size, 1)), None


@dataclass(frozen=True)
class Gamma1D(_HalfLine1D):
    shape: float
    scale: float = 1.0

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("gamma shape and scale must be positive")

    def logpdf(self, X):
        x = _as_points(X, 1)[:, 0]
        k, th = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = np.where(x > 0, x, 1.0)
            out = (k - 1) * np.log(xs) - xs / th - gammaln(k) - k * math.log(th)
        return np.where(x > 0, out, -np.inf)

    def chart(self):
        return _chart([_log_axis(math.log(self.shape * self.scale), 1.0 / math.sqrt(self.shape))])

    def closed_form_moment(self, j, m):
        return SignedLog(1, m * math.log(self.scale) + gammaln(self.shape + m) - gammaln(self.shape))

    def sample(self, rng, size):
        return rng.gamma(self.shape, self.scale, size=(size, 1)), None


@dataclass(frozen=True)
class Exponential1D(_HalfLine1D):
    rate: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")

    def logpdf(self, X):
        x = _as_points(X, 1)[:, 0]
        return np.where(x >= 0, math.log(self.rate) - self.rate * x, -np.inf)

    def chart(self):
        return _chart([_log_axis(-math.log(self.rate), 1.0)])

    def closed_form_moment(self, j, m):
        return SignedLog(1, gammaln(m + 1) - m * math.log(self.rate))

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size=(size, 1)), None


@dataclass(frozen=True)
class PerturbedLogNormal(_HalfLine1D):
    """Density ``f(x) (1 + theta sin(2 pi log x))`` with ``f`` the LogNormal(0, 1) density.

    Every member has the moments ``exp(m^2 / 2)`` of the unperturbed lognormal.
    """

    theta: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [-1, 1]; the density would go negative")

    def logpdf(self, X):
        x = _as_points(X, 1)[:, 0]
        base = LogNormal1D().logpdf(x.reshape(-1, 1))
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(np.where(x > 0, x, 1.0))
            factor = 1.0 + self.theta * np.sin(2.0 * math.pi * lx)
            lf = np.where(factor > 0, np.log(np.where(factor > 0, factor, 1.0)), -np.inf)
        return np.where(x > 0, base + lf, -np.inf)

    def chart(self):
        return _chart([_log_axis(0.0, 1.0)])

    def sample(self, rng, size):
        out = np.empty(0)
        while out.size < size:
            z = rng.standard_normal(2 * size + 16)
            keep = rng.random(z.size) * 2.0 < 1.0 + self.theta * np.sin(2.0 * math.pi * z)
            out = np.concatenate([out, np.exp(z[keep])])
        return out[:size].reshape(-1, 1), None


@dataclass(frozen=True)
class ProductOf1D(Measure):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors or any(f.dim != 1 for f in self.factors):
            raise ValueError("product factors must be one-dimensional measures")
        if not all(f.is_continuous() for f in self.factors):
            raise ValueError("product factors must be continuous")

    @property
    def dim(self):
        return len(self.factors)

    def logpdf(self, X):
        X = _as_points(X, self.dim)
        return sum(f.logpdf(X[:, [i]]) for i, f in enumerate(self.factors))

    def chart(self):
        axes = []
        for f in self.factors:
            c = f.chart()
            axes.append((c.kinds[0], c.lo[0], c.hi[0], c.center[0], c.scale[0]))
        return _chart(axes)

    def support(self):
        sup = [f.support() for f in self.factors]
        if all(s.variant == "all_space" for s in sup):
            return SupportDescriptor("all_space")
        if all(s.variant == "halfline" for s in sup):
            return SupportDescriptor(
                "cone", cone=Cone.standard(self.dim),
                contains_origin=tuple(s.contains_origin[0] for s in sup),
                discrete_unbounded=(False,) * self.dim,
            )
        bounds = []
        for s in sup:
            if s.variant == "all_space":
                bounds.append((-math.inf, math.inf))
            elif s.variant == "halfline":
                bounds.append((0.0, math.inf))
            elif s.variant == "box":
                bounds.append(tuple(s.bounds[0]))
            else:
                return SupportDescriptor("all_space")
        return SupportDescriptor("box", bounds=tuple(bounds))

    def closed_form_moment(self, j, m):
        return self.factors[j].closed_form_moment(0, m)

    def sample(self, rng, size):
        cols, logw = [], np.zeros(size)
        weighted = False
        for f in self.factors:
            x, lw = f.sample(rng, size)
            cols.append(x[:, 0])
            if lw is not None:
                logw = logw + lw
                weighted = True
        return np.stack(cols, axis=1), (logw if weighted else None)

    def marginal(self, j):
        return self.factors[j]


@dataclass(frozen=True)
class DensityExpr(Measure):
    """Density given by an expression; normalized automatically when no constant is given."""

    expr: Expression
    support_desc: SupportDescriptor = field(default_factory=SupportDescriptor)
    normalization: float | None = None

    @property
    def dim(self):
        return self.expr.dimension

    def _raw_log(self, X):
        s, l = self.expr.evaluate_log(X, on_nan="raise")
        if np.any(s < 0):
            # tolerate round-off negatives only
            vals = s * np.exp(np.minimum(l, 700))
            if np.any(vals < -1e-12 * max(1.0, float(np.max(np.abs(vals))))):
                raise NegativeMassError(f"density {self.expr.text!r} is negative")
        l = np.where(s > 0, l, -np.inf)
        return self._restrict(X, l)

    def _restrict(self, X, l):
        sd = self.support_desc
        if sd.variant == "halfline":
            l = np.where(X[:, 0] >= 0, l, -np.inf)
        elif sd.variant == "cone":
            l = np.where(sd.cone.contains(X), l, -np.inf)
        elif sd.variant == "box":
            inside = np.ones(X.shape[0], dtype=bool)
            for i, (a, b) in enumerate(sd.bounds):
                inside &= (X[:, i] >= a) & (X[:, i] <= b)
            l = np.where(inside, l, -np.inf)
        elif sd.variant == "predicate":
            l = np.where(sd.predicate.evaluate(X, on_nan="ignore") > 0, l, -np.inf)
        return l

    @cached_property
    def log_normalizer(self):
        if self.normalization is not None:
            if self.normalization <= 0:
                raise ValueError("normalization constant must be positive")
            return math.log(self.normalization)
        from .cubature import log_cubature
        ch = self.chart()

        def g(U):
            X, lj = ch.to_x(U)
            l = self._raw_log(X) + lj
            return (l > -np.inf).astype(float), l

        res = log_cubature(g, ch.lo, ch.hi, ch.center, ch.scale, tol=1e-12)
        if res.sign <= 0:
            raise NegativeMassError(f"density {self.expr.text!r} has no positive mass")
        return res.log

    @property
    def normalization_used(self):
        return math.exp(self.log_normalizer)

    def logpdf(self, X):
        X = _as_points(X, self.dim)
        return self._raw_log(X) - self.log_normalizer

    def chart(self):
        sd, n = self.support_desc, self.dim
        if sd.variant == "halfline":
            axes = [_log_axis()] + [_id_axis() for _ in range(n - 1)]
            return _chart(axes)
        if sd.variant == "cone":
            return _chart([_log_axis() for _ in range(n)], linear=tuple(map(tuple, sd.cone.matrix)))
        if sd.variant == "box":
            return _chart([_id_axis(0.5 * (a + b) if math.isfinite(a + b) else 0.0, 1.0, a, b)
                           for a, b in sd.bounds])
        return _chart([_id_axis() for _ in range(n)])

    def support(self):
        sd = self.support_desc
        if sd.contains_origin is None and sd.variant == "cone":
            return SupportDescriptor("cone", cone=sd.cone, contains_origin=(True,) * self.dim,
                                     discrete_unbounded=(False,) * self.dim)
        if sd.contains_origin is None and sd.variant == "halfline":
            return SupportDescriptor("halfline", contains_origin=(True,), discrete_unbounded=(False,))
        return sd

    def sample(self, rng, size):
        ch = self.chart()
        df = 4.0
        c = np.array(ch.center)
        s = 4.0 * np.array(ch.scale)
        U = c + s * rng.standard_t(df, size=(size, self.dim))
        lo, hi = np.array(ch.lo), np.array(ch.hi)
        U = np.clip(U, np.nextafter(lo, hi), np.nextafter(hi, lo))
        z = (U - c) / s
        logq = np.sum(
            gammaln((df + 1) / 2) - gammaln(df / 2) - 0.5 * math.log(df * math.pi) - np.log(s)
            - (df + 1) / 2 * np.log1p(z * z / df), axis=1)
        X, lj = ch.to_x(U)
        return X, self.logpdf(X) + lj - logq


@dataclass(frozen=True)
class Discrete(Measure):
    """Finitely many atoms ``(point, mass)``.

    ``truncated`` marks a finite truncation of an unbounded discrete set; the
    structural flag ``discrete_unbounded`` then reports True.
    """

    atoms: tuple
    truncated: bool = False

    def __post_init__(self):
        atoms = []
        for p, w in self.atoms:
            p = tuple(float(v) for v in np.atleast_1d(p))
            w = float(w)
            if not w > 0:
                raise ValueError("atom masses must be strictly positive")
            atoms.append((p, w))
        if not atoms:
            raise ValueError("a discrete measure needs at least one atom")
        dims = {len(p) for p, _ in atoms}
        if len(dims) != 1:
            raise ValueError("atoms have mixed dimensions")
        if len({p for p, _ in atoms}) != len(atoms):
            raise ValueError("atoms must be distinct")
        object.__setattr__(self, "atoms", tuple(atoms))

    @property
    def dim(self):
        return len(self.atoms[0][0])

    @property
    def points(self):
        return np.array([p for p, _ in self.atoms], dtype=float)

    @property
    def masses(self):
        return np.array([w for _, w in self.atoms], dtype=float)

    def total_mass(self):
        return float(self.masses.sum())

    def is_continuous(self):
        return False

    def support(self):
        P = self.points
        if np.all(P >= 0):
            return SupportDescriptor(
                "cone", cone=Cone.standard(self.dim),
                contains_origin=tuple(bool(np.any(np.abs(P[:, j]) <= 1e-12)) for j in range(self.dim)),
                discrete_unbounded=(self.truncated,) * self.dim,
            )
        return SupportDescriptor("all_space")

    def supported_in(self, cone):
        return bool(np.all(cone.contains(self.points)))

    def closed_form_moment(self, j, m):
        x = self.points[:, j]
        with np.errstate(divide="ignore"):
            logs = m * np.log(np.abs(x)) if m else np.zeros_like(x)
        signs = np.where(x < 0, (-1.0) ** m, np.where(x == 0, 0.0 if m else 1.0, 1.0))
        return signed_logsumexp(signs, logs, self.masses)

    def sample(self, rng, size):
        p = self.masses / self.masses.sum()
        idx = rng.choice(len(self.atoms), size=size, p=p)
        return self.points[idx], None


@dataclass(frozen=True)
class Pushforward(Measure):
    """Image of ``inner`` under ``phi_sqrt`` (cone square-root map) or a sign flip.

    ``phi_sqrt``: ``x = Σ y_j v_j  ->  Σ sqrt(y_j) v_j`` on the cone.
    ``sign_flip``: ``x = Σ y_j v_j  ->  Σ signs_j y_j v_j``.
    """

    inner: Measure
    kind: str
    cone: Cone
    signs: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("phi_sqrt", "sign_flip"):
            raise ValueError(f"unknown map {self.kind!r}")
        if self.kind == "sign_flip":
            if self.signs is None or len(self.signs) != self.cone.dim:
                raise ValueError("sign_flip needs one sign per basis vector")
            object.__setattr__(self, "signs", tuple(float(np.sign(s)) for s in self.signs))

    @property
    def dim(self):
        return self.inner.dim

    def map(self, X):
        X = _as_points(X, self.dim)
        Y = self.cone.coords(X)
        if self.kind == "phi_sqrt":
            inside = np.all(Y >= -1e-12, axis=1)
            Z = np.sqrt(np.clip(Y, 0.0, None)) @ self.cone.matrix.T
            return np.where(inside[:, None], Z, X)
        return (Y * np.array(self.signs)) @ self.cone.matrix.T

    def total_mass(self):
        return self.inner.total_mass()

    def is_continuous(self):
        return self.inner.is_continuous()

    def support(self):
        if self.kind == "phi_sqrt":
            return self.inner.support()
        return SupportDescriptor("all_space")

    def supported_in(self, cone):
        return self.kind == "phi_sqrt" and self.inner.supported_in(cone)

    def sample(self, rng, size):
        X, lw = self.inner.sample(rng, size)
        return self.map(X), lw


@dataclass(frozen=True)
class Mixture(Measure):
    components: tuple  # ((weight, measure), ...)

    def __post_init__(self):
        comps = tuple((float(w), m) for w, m in self.components)
        if not comps or any(w <= 0 for w, _ in comps):
            raise ValueError("mixture weights must be positive")
        if len({m.dim for _, m in comps}) != 1:
            raise ValueError("mixture components have mixed dimensions")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return self.components[0][1].dim

    def total_mass(self):
        return sum(w * m.total_mass() for w, m in self.components)

    def is_continuous(self):
        return all(m.is_continuous() for _, m in self.components)

    def support(self):
        return SupportDescriptor("all_space")

    def supported_in(self, cone):
        return all(m.supported_in(cone) for _, m in self.components)

    def sample(self, rng, size):
        w = np.array([w * m.total_mass() for w, m in self.components])
        idx = rng.choice(len(w), size=size, p=w / w.sum())
        X = np.empty((size, self.dim))
        logw = np.zeros(size)
        weighted = False
        for k, (_, m) in enumerate(self.components):
            sel = idx == k
            if sel.any():
                x, lw = m.sample(rng, int(sel.sum()))
                X[sel] = x
                if lw is not None:
                    logw[sel] = lw
                    weighted = True
        return X, (logw if weighted else None)


# ---------------------------------------------------------------------------
# operations

def density_at(spec: Measure, x) -> float:
    """Lebesgue density of ``spec`` at ``x`` (0 outside the support)."""
    if isinstance(spec, (Discrete, Pushforward, Mixture)):
        raise UnsupportedOperation(f"{type(spec).__name__} measures have no Lebesgue density here")
    X = np.asarray(x, dtype=float).reshape(1, spec.dim)
    return float(np.exp(spec.logpdf(X)[0]))


def closed_form_moment(spec: Measure, j: int, m: int):
    """Exact ``E[x_j^m]`` in the standard basis, or None when no closed form exists."""
    if m < 0:
        raise ValueError("moment order must be non-negative")
    return spec.closed_form_moment(j, m)


def moment_matched_family(theta: float) -> PerturbedLogNormal:
    """Member ``theta`` of the classical family sharing all LogNormal(0, 1) moments."""
    if abs(theta) > 1:
        raise ValueError(f"|theta| = {abs(theta)} > 1: density would be negative")
    return PerturbedLogNormal(float(theta))


def marginal_support(spec: Measure, cone: Cone, j: int) -> MarginalFlags:
    """Best-effort flags for the support of the j-th cone marginal."""
    if isinstance(spec, Discrete):
        p = spec.points @ cone.dual[j]
        return MarginalFlags(bool(np.any(np.abs(p) <= 1e-12)), bool(spec.truncated))
    if isinstance(spec, Pushforward) and spec.kind == "phi_sqrt":
        return marginal_support(spec.inner, cone, j)
    if isinstance(spec, (Pushforward, Mixture)):
        return MarginalFlags(None, None)
    sd = spec.support()
    if sd.variant == "predicate":
        return MarginalFlags(None, None)
    c = sd.as_cone(spec.dim)
    if c is None or not c.same_as(cone):
        return MarginalFlags(None, False)
    origin = None if sd.contains_origin is None else sd.contains_origin[_cone_index(c, cone, j)]
    return MarginalFlags(origin, False)


def _cone_index(own, cone, j):
    a = own.matrix / np.linalg.norm(own.matrix, axis=0)
    v = cone.matrix[:, j] / np.linalg.norm(cone.matrix[:, j])
    for i in range(own.dim):
        if np.allclose(a[:, i], v, atol=1e-10):
            return i
    return j


def sign_group(n):
    """All 2^n sign vectors."""
    return list(itertools.product((1.0, -1.0), repeat=n))
