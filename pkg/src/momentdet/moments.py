"""Directional, absolute and mixed moments in signed-log form."""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MomentDetError, NonConvergedError
from .measures import Discrete, GaussianProduct, Measure, ProductOf1D
from .quad import LogFn, integrate
from .quad import _MC
from .signedlog import SignedLog

__all__ = [
    "MomentEntry", "MomentTable", "directional_moments", "absolute_moment", "mixed_moment",
    "lambda_sequence", "build_table", "holder_monotone", "generalized_holder", "dominance",
    "clear_cache", "multi_indices",
]

_CACHE: dict = {}


def clear_cache():
    _CACHE.clear()


@dataclass(frozen=True)
class MomentEntry:
    value: SignedLog | None
    provenance: str          # closed_form | exact | quadrature | monte_carlo | error
    err: float = 0.0         # relative error bound on the value
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.value is not None and self.provenance != "error"

    @property
    def log(self) -> float:
        return self.value.log if self.value is not None else math.nan


def _entry_from(result):
    return MomentEntry(result.sl, result.method, result.rel_err_value)


def _compute(key, fn):
    if key is not None and key in _CACHE:
        return _CACHE[key]
    try:
        e = fn()
    except NonConvergedError as exc:
        est = exc.estimate
        e = MomentEntry(est.sl if est is not None else None, "error",
                        est.rel_err_value if est is not None else math.inf, str(exc))
    if key is not None:
        _CACHE[key] = e
    return e


def _dir_fn(v, m):
    v = np.asarray(v, dtype=float)

    def fn(X):
        z = X @ v
        s = np.sign(z) ** m if m else np.ones_like(z)
        with np.errstate(divide="ignore"):
            l = m * np.log(np.abs(z)) if m else np.zeros_like(z)
        return s, l

    return LogFn(fn, f"(v,x)^{m}")


def _abs_fn(alpha):
    alpha = np.asarray(alpha, dtype=float)

    def fn(X):
        with np.errstate(divide="ignore", invalid="ignore"):
            l = np.where(alpha > 0, alpha * np.log(np.abs(X)), 0.0).sum(axis=1)
        return np.ones(X.shape[0]), l

    return LogFn(fn, f"|x|^{tuple(alpha)}")


def _is_axis(v):
    nz = np.nonzero(v)[0]
    return int(nz[0]) if nz.size == 1 else None


def _directional_entry(spec, v, m, tol, closed_forms, method):
    v = np.asarray(v, dtype=float)
    j = _is_axis(v)
    if m == 0:
        return MomentEntry(SignedLog.from_float(spec.total_mass()), "exact")
    if j is not None:
        scale = SignedLog.from_float(v[j]) ** m
        if closed_forms:
            cf = spec.closed_form_moment(j, m)
            if cf is not None:
                return MomentEntry(cf * scale, "closed_form")
        marg = spec.marginal(j) if spec.dim > 1 else None
        if marg is not None:
            r = integrate(_dir_fn([1.0], m), marg, tol, method=method)
            return MomentEntry(r.sl * scale, r.method, r.rel_err_value)
    r = integrate(_dir_fn(v, m), spec, tol, method=method)
    return _entry_from(r)


def _key(spec, *parts):
    mc = tuple(sorted(_MC.get().items())) if spec.dim > 3 else ()
    return (spec.fingerprint(), repr(spec), mc) + parts


def _dirs(spec, basis):
    if basis is None:
        return np.eye(spec.dim)
    B = np.asarray(basis, dtype=float)
    if B.shape != (spec.dim, spec.dim):
        raise ValueError("basis must be n vectors in R^n")
    if abs(np.linalg.det(B)) < 1e-12:
        raise ValueError("basis is singular")
    return B


@dataclass
class MomentTable:
    """Moments of one measure; rows of ``directions`` are the vectors ``v_j``."""

    directions: np.ndarray
    M: int
    s: list = field(default_factory=list)          # s[j][m] -> MomentEntry
    t: dict = field(default_factory=dict)          # (j, s) -> MomentEntry
    mixed: dict = field(default_factory=dict)      # alpha tuple -> MomentEntry
    lam: list = field(default_factory=list)        # lambda(m) -> MomentEntry
    total_mass: float = 1.0

    @property
    def n(self):
        return self.directions.shape[0]

    def s_log(self, j):
        return np.array([e.log for e in self.s[j]])

    def rows(self):
        for j, col in enumerate(self.s):
            for m, e in enumerate(col):
                yield ("s", str(j), str(m), e)
        for (j, sv), e in sorted(self.t.items()):
            yield ("t", str(j), repr(float(sv)), e)
        for alpha, e in sorted(self.mixed.items()):
            yield ("mixed", "(" + " ".join(str(a) for a in alpha) + ")", "", e)
        for m, e in enumerate(self.lam):
            yield ("lambda", "", str(m), e)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "j_or_alpha", "m_or_s", "sign", "log_value", "provenance", "err"])
        for kind, ja, ms, e in self.rows():
            sign = e.value.sign if e.value is not None else ""
            lv = repr(float(e.value.log)) if e.value is not None else ""
            w.writerow([kind, ja, ms, sign, lv, e.provenance, repr(float(e.err))])
        return buf.getvalue()


def directional_moments(spec: Measure, basis=None, M: int = 30, tol: float = 1e-10,
                        closed_forms: bool = True, method: str = "auto", use_cache: bool = True) -> MomentTable:
    """``s_j(m) = ∫ (v_j, x)^m dμ`` for ``m = 0..M`` and each row ``v_j`` of ``basis``."""
    if M < 1:
        raise ValueError("M must be at least 1")
    B = _dirs(spec, basis)
    table = MomentTable(B, M, total_mass=spec.total_mass())
    for v in B:
        col = []
        for m in range(M + 1):
            key = _key(spec, "s", tuple(np.round(v, 15)), m, tol, closed_forms) if use_cache else None
            col.append(_compute(key, lambda v=v, m=m: _directional_entry(spec, v, m, tol, closed_forms, method)))
        table.s.append(col)
    return table


def absolute_moment(spec: Measure, j: int, s: float, tol: float = 1e-10, use_cache: bool = True) -> MomentEntry:
    """``t_j(s) = ∫ |x_j|^s dμ``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    alpha = [0.0] * spec.dim
    alpha[j] = float(s)
    return _mixed_entry(spec, tuple(alpha), tol, use_cache)


def mixed_moment(spec: Measure, alpha, tol: float = 1e-10, use_cache: bool = True) -> MomentEntry:
    """``t(α) = ∫ Π_j |x_j|^{α_j} dμ``."""
    alpha = tuple(float(a) for a in alpha)
    if len(alpha) != spec.dim or any(a < 0 for a in alpha):
        raise ValueError("alpha must be a non-negative multi-index of length n")
    return _mixed_entry(spec, alpha, tol, use_cache)


def _mixed_entry(spec, alpha, tol, use_cache):
    key = _key(spec, "abs", alpha, tol) if use_cache else None

    def fn():
        if not any(alpha):
            return MomentEntry(SignedLog.from_float(spec.total_mass()), "exact")
        if isinstance(spec, (GaussianProduct, ProductOf1D)) and spec.dim > 1:
            total, err, prov = SignedLog.one(), 0.0, "quadrature"
            for j, a in enumerate(alpha):
                if a == 0:
                    continue
                e = _mixed_entry(spec.marginal(j), (a,), tol, use_cache)
                if not e.ok:
                    return e
                total = total * e.value
                err += e.err
            return MomentEntry(total, prov, err)
        if isinstance(spec, Discrete):
            return _entry_from(integrate(_abs_fn(alpha), spec, tol))
        a = alpha[0] if spec.dim == 1 else None
        if a is not None and float(a).is_integer() and int(a) % 2 == 0:
            cf = spec.closed_form_moment(0, int(a))
            if cf is not None:
                return MomentEntry(cf, "closed_form")
        return _entry_from(integrate(_abs_fn(alpha), spec, tol))

    return _compute(key, fn)


def lambda_sequence(spec: Measure, M: int = 30, tol: float = 1e-10, table: MomentTable | None = None) -> list:
    """``λ(m) = Σ_j s_j(m)`` in the standard basis."""
    if table is None or not np.allclose(table.directions, np.eye(spec.dim)):
        table = directional_moments(spec, None, M, tol)
    out = []
    for m in range(M + 1):
        entries = [table.s[j][m] for j in range(spec.dim)]
        if not all(e.ok for e in entries):
            bad = next(e for e in entries if not e.ok)
            out.append(MomentEntry(None, "error", math.inf, bad.message))
            continue
        total = SignedLog.zero()
        abs_total = SignedLog.zero()
        err_abs = SignedLog.zero()
        for e in entries:
            total = total + e.value
            abs_total = abs_total + abs(e.value)
            if e.err > 0 and e.value.sign:
                err_abs = err_abs + SignedLog(1, e.value.log + math.log(e.err))
        rel = 0.0
        if err_abs.sign and total.sign:
            rel = math.exp(err_abs.log - total.log)
        prov = "closed_form" if all(e.provenance == "closed_form" for e in entries) else "quadrature"
        out.append(MomentEntry(total, prov, rel))
    return out


def multi_indices(n, A):
    """All ``α`` in N^n with ``1 <= |α| <= A``."""
    out = []
    for alpha in itertools.product(range(A + 1), repeat=n):
        if 1 <= sum(alpha) <= A:
            out.append(alpha)
    return out


def build_table(spec: Measure, basis=None, M: int = 30, t_grid=None, A: int = 4,
                tol: float = 1e-10, closed_forms: bool = True, method: str = "auto") -> MomentTable:
    """Full table: ``s_j``, ``t_j`` on ``t_grid``, mixed ``t(α)`` with ``|α| <= A`` and ``λ``."""
    table = directional_moments(spec, basis, M, tol, closed_forms, method)
    if t_grid is None:
        t_grid = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0]
    for j in range(spec.dim):
        for sv in t_grid:
            table.t[(j, float(sv))] = absolute_moment(spec, j, sv, tol)
    for alpha in multi_indices(spec.dim, A):
        table.mixed[alpha] = mixed_moment(spec, alpha, tol)
    table.lam = lambda_sequence(spec, M, tol, table if basis is None else None)
    return table


# ---------------------------------------------------------------------------
# Hölder structure, checked in log space with error bars

def _slack(*errs):
    return sum(math.log1p(e) if e < 1 else math.inf for e in errs) + 1e-12


def holder_monotone(spec: Measure, j: int, s_values, tol: float = 1e-10):
    """``t_j(s1)^{1/s1} <= t_j(s2)^{1/s2}`` for all ``1 <= s1 <= s2`` in ``s_values``.

    Returns ``(holds, worst)`` where ``worst`` is the largest violation in log
    units beyond the error bars (negative when the inequality holds).
    """
    s_values = sorted(float(s) for s in s_values if s >= 1)
    entries = {s: absolute_moment(spec, j, s, tol) for s in s_values}
    worst = -math.inf
    for s1, s2 in itertools.combinations(s_values, 2):
        e1, e2 = entries[s1], entries[s2]
        if not (e1.ok and e2.ok):
            raise MomentDetError(f"moment t_{j}({s1}) or t_{j}({s2}) did not converge")
        gap = e1.value.log / s1 - e2.value.log / s2 - (_slack(e1.err) / s1 + _slack(e2.err) / s2)
        worst = max(worst, gap)
    return worst <= 0, worst


def generalized_holder(spec: Measure, alpha, tol: float = 1e-10):
    """``t(α) <= Π_j t_j(n α_j)^{1/n}``; returns ``(holds, violation)``."""
    n = spec.dim
    lhs = mixed_moment(spec, alpha, tol)
    rhs_log, slack = 0.0, _slack(lhs.err)
    for j, a in enumerate(alpha):
        e = absolute_moment(spec, j, n * a, tol)
        if not e.ok:
            raise MomentDetError(f"moment t_{j}({n * a}) did not converge")
        rhs_log += e.value.log / n
        slack += _slack(e.err) / n
    gap = lhs.value.log - rhs_log - slack
    return gap <= 0, gap


def dominance(table: MomentTable):
    """``s_j(2m) <= λ(2m)`` for all entries (standard-basis tables)."""
    worst = -math.inf
    for m in range(0, table.M + 1, 2):
        lam = table.lam[m]
        for j in range(table.n):
            e = table.s[j][m]
            if e.ok and lam.ok and e.value.sign > 0:
                worst = max(worst, e.value.log - lam.value.log - _slack(e.err, lam.err))
    return worst <= 0, worst
