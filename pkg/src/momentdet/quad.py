"""Integration against measures, tail profiles, and finite/infinite classification."""
from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass, field

import numpy as np

from .cubature import log_cubature
from .errors import NonConvergedError, UnsupportedOperation
from .expr import Expression
from .measures import Discrete, Measure, Mixture, Pushforward
from .signedlog import SignedLog, signed_logsumexp

__all__ = [
    "LogFn", "IntegralResult", "TailProfile", "FiniteVerdict",
    "integrate", "monte_carlo", "tail_profile", "classify_tail", "l1_distance",
    "default_schedule", "as_log_integrand", "monte_carlo_options", "FINITE", "INFINITE", "INCONCLUSIVE",
]

FINITE, INFINITE, INCONCLUSIVE = "FINITE", "INFINITE", "INCONCLUSIVE"
DELTA = 0.05
CLASSIFY_TOL = 1e-3
TAIL_ACCEPT = 1e-6      # largest shell error tolerated after refinement gives up

# settings for the Monte Carlo fallback taken by method="auto" when n > 3
_MC = contextvars.ContextVar("momentdet_mc", default={"allowed": True, "n_samples": 1_000_000, "seed": 0})


@contextlib.contextmanager
def monte_carlo_options(allowed: bool = True, n_samples: int = 1_000_000, seed: int = 0):
    """Configure the Monte Carlo fallback used by ``integrate(method="auto")`` inside the block."""
    token = _MC.set({"allowed": bool(allowed), "n_samples": int(n_samples), "seed": int(seed)})
    try:
        yield
    finally:
        _MC.reset(token)


class LogFn:
    """Integrand given directly in log form: ``fn(X) -> (sign, log|f|)``."""

    def __init__(self, fn, label="<log integrand>"):
        self.fn = fn
        self.label = label

    def __call__(self, X):
        return self.fn(X)

    def __repr__(self):
        return f"LogFn({self.label})"


def as_log_integrand(f):
    if f is None:
        return LogFn(lambda X: (np.ones(X.shape[0]), np.zeros(X.shape[0])), "1")
    if isinstance(f, LogFn):
        return f
    if isinstance(f, Expression):
        return LogFn(lambda X: f.evaluate_log(X, on_nan="raise"), f.text)
    if callable(f):
        def fn(X):
            v = np.asarray(f(X), dtype=float)
            v = np.broadcast_to(v, (X.shape[0],))
            with np.errstate(divide="ignore"):
                return np.sign(v), np.log(np.abs(v))
        return LogFn(fn, getattr(f, "__name__", "callable"))
    if isinstance(f, (int, float)):
        c = float(f)
        return LogFn(lambda X: (np.full(X.shape[0], np.sign(c)),
                                np.full(X.shape[0], math.log(abs(c)) if c else -np.inf)), repr(c))
    raise TypeError(f"cannot integrate {f!r}")


@dataclass(frozen=True)
class IntegralResult:
    sl: SignedLog
    rel_err: float          # error relative to the integral of |f|
    log_abs: float          # log of the integral of |f|
    method: str             # exact | quadrature | monte_carlo | closed_form
    n_eval: int = 0

    @property
    def value(self) -> float:
        return float(self.sl)

    @property
    def err(self) -> float:
        if self.rel_err == 0 or self.log_abs == -math.inf:
            return 0.0
        v = self.log_abs + math.log(self.rel_err)
        return math.inf if v > 709.78 else math.exp(v)

    @property
    def log_err(self) -> float:
        if self.rel_err <= 0 or self.log_abs == -math.inf:
            return -math.inf
        return self.log_abs + math.log(self.rel_err)

    @property
    def rel_err_value(self) -> float:
        """Error relative to the value itself."""
        if self.sl.sign == 0:
            return 0.0 if self.rel_err == 0 else math.inf
        return self.rel_err * math.exp(min(self.log_abs - self.sl.log, 700.0))

    def __add__(self, other):
        sl = self.sl + other.sl
        la = np.logaddexp(self.log_abs, other.log_abs)
        le = np.logaddexp(self.log_err, other.log_err)
        rel = 0.0 if la == -math.inf or le == -math.inf else math.exp(le - la)
        return IntegralResult(sl, rel, float(la), self.method, self.n_eval + other.n_eval)

    def scaled(self, log_c):
        return IntegralResult(self.sl * SignedLog(1, log_c), self.rel_err, self.log_abs + log_c,
                              self.method, self.n_eval)


def _zero_result(method="exact"):
    return IntegralResult(SignedLog.zero(), 0.0, -math.inf, method, 0)


# ---------------------------------------------------------------------------
# regions: None (everything) or a radial shell lo < ||x|| <= hi

def _in_shell(X, shell):
    if shell is None:
        return np.ones(X.shape[0], dtype=bool)
    r = np.linalg.norm(X, axis=1)
    a, b = shell
    return (r > a) & (r <= b) if a > 0 else (r <= b)


def _discrete(f, spec: Discrete, shell):
    X = spec.points
    keep = _in_shell(X, shell)
    if not keep.any():
        return _zero_result()
    s, l = f(X[keep])
    s, l = np.asarray(s, float), np.asarray(l, float)
    sl = signed_logsumexp(s, l, spec.masses[keep])
    la = signed_logsumexp(np.abs(s), l, spec.masses[keep])
    return IntegralResult(sl, 0.0, la.log, "exact", int(keep.sum()))


def _interval_1d(chart, a, b):
    """u-interval of the chart whose image is {x : a < x <= b} (1-D)."""
    c = 1.0 if chart.linear is None else float(np.array(chart.linear)[0, 0])
    a, b = (a / c, b / c) if c > 0 else (b / c, a / c)
    if chart.kinds[0] == "log":
        if b <= 0:
            return None
        ua = -math.inf if a <= 0 else math.log(a)
        ub = math.log(b) if math.isfinite(b) else math.inf
    else:
        ua, ub = a, b
    ua, ub = max(ua, chart.lo[0]), min(ub, chart.hi[0])
    return (ua, ub) if ub > ua else None


def _chart_integral(f, spec, tol, u_lo, u_hi, breakpoints=None):
    ch = spec.chart()

    def g(U):
        X, lj = ch.to_x(U)
        lp = spec.logpdf(X)
        ok = lp > -np.inf
        s = np.zeros(X.shape[0])
        l = np.full(X.shape[0], -np.inf)
        if ok.any():
            fs, fl = f(X[ok])
            s[ok] = fs
            l[ok] = np.where(np.asarray(fs) != 0, fl + lp[ok] + lj[ok], -np.inf)
        return s, l

    if breakpoints is None:
        # |x|^s and |(v, x)|^s have a kink where a coordinate vanishes
        breakpoints = [[0.0] if k == "id" else [] for k in ch.kinds]
    return log_cubature(g, u_lo, u_hi, ch.center, ch.scale, tol=tol, breakpoints=breakpoints)


def _sector(spec, d):
    """Angular parameter box for polar coordinates covering the support."""
    sd = spec.support()
    cone = sd.as_cone(spec.dim) if hasattr(sd, "as_cone") else None
    if d == 2:
        if cone is not None:
            V = cone.matrix
            t = sorted(math.atan2(V[1, j], V[0, j]) for j in range(2))
            if t[1] - t[0] > math.pi:
                t = [t[1], t[0] + 2 * math.pi]
            return [t[0]], [t[1]]
        return [-math.pi], [math.pi]
    if cone is not None and cone.is_standard():
        return [0.0, 0.0], [0.5 * math.pi, 0.5 * math.pi]
    return [-math.pi, 0.0], [math.pi, math.pi]


def _polar_integral(f, spec, tol, a, b):
    """Integral over a < ||x|| <= b in polar coordinates (log radius when a > 0)."""
    d = spec.dim
    alo, ahi = _sector(spec, d)
    log_r = a > 0

    def g(U):
        rr = U[:, 0]
        if log_r:
            r = np.exp(rr)
            lj = d * rr
        else:
            r = rr
            with np.errstate(divide="ignore"):
                lj = (d - 1) * np.log(r)
        if d == 2:
            th = U[:, 1]
            X = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        else:
            th, ph = U[:, 1], U[:, 2]
            sp = np.sin(ph)
            X = np.stack([r * sp * np.cos(th), r * sp * np.sin(th), r * np.cos(ph)], axis=1)
            with np.errstate(divide="ignore"):
                lj = lj + np.log(np.abs(sp))
        lp = spec.logpdf(X)
        ok = lp > -np.inf
        s = np.zeros(X.shape[0])
        l = np.full(X.shape[0], -np.inf)
        if ok.any():
            fs, fl = f(X[ok])
            s[ok] = fs
            l[ok] = np.where(np.asarray(fs) != 0, fl + lp[ok] + lj[ok], -np.inf)
        return s, l

    if log_r:
        rlo, rhi = math.log(a), (math.log(b) if math.isfinite(b) else math.inf)
    else:
        rlo, rhi = 0.0, b
    lo = [rlo] + list(alo)
    hi = [rhi] + list(ahi)
    center = [0.5 * (rlo + min(rhi, rlo + 4.0))] + [0.5 * (x + y) for x, y in zip(alo, ahi)]
    scale = [1.0] + [0.5 * (y - x) for x, y in zip(alo, ahi)]
    return log_cubature(g, lo, hi, center, scale, tol=tol)


def _wrap(res, tol, what):
    out = IntegralResult(SignedLog(res.sign, res.log), res.rel_err, res.log_abs, "quadrature", res.n_eval)
    if not res.converged and res.rel_err > max(tol, 1e-14) * 10:
        raise NonConvergedError(f"{what}: relative error {res.rel_err:.2e} exceeds tolerance {tol:.1e}",
                                estimate=out)
    return out


def integrate(f, spec: Measure, tol: float = 1e-10, *, shell=None, method="auto",
              n_samples=None, seed=None) -> IntegralResult:
    """Estimate ``∫ f dμ`` (optionally over ``shell = (a, b)``: ``a < ||x|| <= b``).

    ``f`` may be an :class:`Expression`, a vectorized callable, a :class:`LogFn`
    or None (meaning 1).  ``method`` is ``auto``, ``deterministic`` or ``mc``;
    ``auto`` samples only when ``n > 3`` and :func:`monte_carlo_options`
    allows it.  Unset ``n_samples``/``seed`` come from those options.
    """
    f = as_log_integrand(f)
    opts = _MC.get()
    n_samples = opts["n_samples"] if n_samples is None else n_samples
    seed = opts["seed"] if seed is None else seed
    if method == "auto" and spec.dim > 3 and not opts["allowed"]:
        raise UnsupportedOperation("n > 3 needs Monte Carlo, which deterministic mode disables")
    if method == "mc" or (method == "auto" and spec.dim > 3):
        if shell is not None:
            inner = f
            f = LogFn(lambda X: _masked(inner, X, _in_shell(X, shell)), f.label)
        return monte_carlo(f, spec, n_samples=n_samples, seed=seed)
    if spec.dim > 3:
        raise UnsupportedOperation("deterministic quadrature supports n <= 3; use Monte Carlo")

    if isinstance(spec, Discrete):
        return _discrete(f, spec, shell)
    if isinstance(spec, Mixture):
        total = None
        for w, m in spec.components:
            r = integrate(f, m, tol, shell=shell, method=method).scaled(math.log(w))
            total = r if total is None else total + r
        return total
    if isinstance(spec, Pushforward):
        inner_f = f
        if shell is None:
            g = LogFn(lambda X: inner_f(spec.map(X)), f.label)
        else:
            def g_fn(X):
                Y = spec.map(X)
                return _masked(inner_f, Y, _in_shell(Y, shell))
            g = LogFn(g_fn, f.label)
        return integrate(g, spec.inner, tol, method=method)

    ch = spec.chart()
    if shell is None:
        res = _chart_integral(f, spec, tol, ch.lo, ch.hi)
        return _wrap(res, tol, "integral")
    a, b = shell
    if spec.dim == 1:
        total = None
        for xa, xb in ((a, b), (-b, -a)) if a > 0 else ((-b, b),):
            iv = _interval_1d(ch, xa, xb)
            if iv is None:
                continue
            r = _wrap(_chart_integral(f, spec, tol, [iv[0]], [iv[1]]), tol, "shell integral")
            total = r if total is None else total + r
        return total if total is not None else _zero_result("quadrature")
    return _wrap(_polar_integral(f, spec, tol, a, b), tol, "shell integral")


def _masked(f, X, keep):
    s = np.zeros(X.shape[0])
    l = np.full(X.shape[0], -np.inf)
    if keep.any():
        fs, fl = f(X[keep])
        s[keep], l[keep] = fs, fl
    return s, l


def monte_carlo(f, spec: Measure, n_samples=1_000_000, seed=0, chunk=200_000) -> IntegralResult:
    """Plain or importance-weighted Monte Carlo with a counter-based (Philox) generator."""
    f = as_log_integrand(f)
    n_samples = int(n_samples)
    mass = spec.total_mass()
    sums, sq = [], []
    shift = None
    done = 0
    block = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        # chunk streams are 2^128 draws apart, so they never overlap
        rng = np.random.Generator(np.random.Philox(key=seed).jumped(block))
        X, logw = spec.sample(rng, size)
        s, l = f(X)
        s = np.asarray(s, float)
        l = np.asarray(l, float)
        if logw is not None:
            l = l + logw
        l = np.where(s != 0, l, -np.inf)
        if shift is None:
            finite = l[np.isfinite(l)]
            shift = float(finite.max()) if finite.size else 0.0
        v = s * np.exp(np.minimum(l - shift, 700.0))
        sums.append(v.sum())
        sq.append((v * v).sum())
        done += size
        block += 1
    mean = float(np.sum(sums)) / n_samples
    var = max(float(np.sum(sq)) / n_samples - mean * mean, 0.0)
    se = math.sqrt(var / n_samples)
    lm = math.log(mass)
    sl = SignedLog.from_float(mean) * SignedLog(1, shift + lm)
    la = shift + lm + (math.log(abs(mean)) if mean else -math.inf)
    rel = se / abs(mean) if mean else (0.0 if se == 0 else math.inf)
    if mean == 0 and se > 0:
        la = shift + lm + math.log(se)
        rel = 1.0
    return IntegralResult(sl, rel, la, "monte_carlo", n_samples)


# ---------------------------------------------------------------------------
# tail profiles

def default_schedule(r0=2.0, shells=12):
    return tuple(float(r0) * 2.0 ** k for k in range(shells + 1))


@dataclass(frozen=True)
class TailProfile:
    """``increments[0] = I(R_0)``; ``increments[k] = I(R_k) - I(R_{k-1})``."""

    radii: tuple
    increments: tuple           # SignedLog
    errors: tuple = ()          # relative error per increment
    partial: tuple = field(default=())

    @classmethod
    def from_increments(cls, increments, radii=None, errors=None):
        inc = tuple(x if isinstance(x, SignedLog) else SignedLog.from_float(x) for x in increments)
        radii = tuple(radii) if radii is not None else tuple(float(k) for k in range(len(inc)))
        part, acc = [], SignedLog.zero()
        for x in inc:
            acc = acc + x
            part.append(acc)
        return cls(radii, inc, tuple(errors) if errors is not None else (0.0,) * len(inc), tuple(part))

    def __post_init__(self):
        if len(self.radii) != len(self.increments):
            raise ValueError("one increment per radius")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly increasing")

    def partial_floats(self):
        return [float(p) for p in self.partial]


def tail_profile(f, spec: Measure, schedule=None, tol=1e-10, check_sign=True, seed=0) -> TailProfile:
    """Partial integrals of ``f`` over the balls ``||x|| <= R_k``."""
    schedule = tuple(schedule) if schedule is not None else default_schedule()
    f = as_log_integrand(f)
    if check_sign:
        _check_nonnegative(f, spec, seed)
    incs, errs = [], []
    prev = 0.0
    for R in schedule:
        try:
            r = integrate(f, spec, tol, shell=(prev, R), method="deterministic")
        except NonConvergedError as exc:
            # finiteness is decided at CLASSIFY_TOL; a much smaller miss is harmless
            if exc.estimate is None or not exc.estimate.rel_err <= TAIL_ACCEPT:
                raise
            r = exc.estimate
        incs.append(r.sl)
        errs.append(r.rel_err)
        prev = R
    return TailProfile.from_increments(incs, schedule, errs)


def _check_nonnegative(f, spec, seed):
    rng = np.random.Generator(np.random.Philox(key=seed + 7919))
    try:
        X, _ = spec.sample(rng, 512)
    except UnsupportedOperation:
        return
    s, _ = f(X)
    if np.any(np.asarray(s) < 0):
        raise ValueError("tail profiles need a nonnegative integrand")


@dataclass(frozen=True)
class FiniteVerdict:
    outcome: str
    value: SignedLog | None = None
    err: float = math.nan          # relative error bound on ``value``
    evidence: dict = field(default_factory=dict)

    @property
    def is_finite(self):
        return self.outcome == FINITE


def classify_tail(profile: TailProfile, tol=CLASSIFY_TOL, floor_log=-math.inf, delta=DELTA) -> FiniteVerdict:
    """Decide FINITE / INFINITE / INCONCLUSIVE from the last three increments."""
    inc = profile.increments
    if len(inc) < 4:
        raise ValueError("classification needs at least four shells")
    last = [abs(x) for x in inc[-3:]]
    logs = [x.log for x in last]
    total = abs(profile.partial[-1]) if profile.partial else SignedLog.zero()
    ev = {"last_increments_log": logs, "delta": delta, "tol": tol}

    if all(x.sign == 0 for x in last):
        ev.update(ratio=0.0, remainder_log=-math.inf)
        return FiniteVerdict(FINITE, profile.partial[-1], 0.0, ev)

    # equal increments (a logarithmically divergent tail) must count as nondecreasing
    if logs[1] >= logs[0] - 1e-9 and logs[2] >= logs[1] - 1e-9:
        ev["ratio"] = _ratio(logs)
        return FiniteVerdict(INFINITE, None, math.nan, ev)

    q = _ratio(logs)
    ev["ratio"] = q
    if q > 1.0 - delta:
        return FiniteVerdict(INCONCLUSIVE, None, math.nan, ev)
    rem_log = logs[-1] + math.log(q) - math.log1p(-q) if q > 0 else -math.inf
    ev["remainder_log"] = rem_log
    value = profile.partial[-1]
    bound = max(math.log(tol) + total.log if total.sign else -math.inf, floor_log)
    if rem_log <= bound:
        err = math.exp(rem_log - total.log) if total.sign and rem_log > -math.inf else 0.0
        est = value + SignedLog(1 if value.sign >= 0 else -1, rem_log) if rem_log > -math.inf else value
        return FiniteVerdict(FINITE, est, err, ev)
    return FiniteVerdict(INCONCLUSIVE, None, math.nan, ev)


def _ratio(logs):
    """Geometric-mean ratio of the last three increment magnitudes."""
    a, _, c = logs
    if c == -math.inf:
        return 0.0
    if a == -math.inf:
        return math.inf
    return math.exp(min((c - a) / 2.0, 700.0))


def l1_distance(a: Measure, b: Measure, tol=1e-10) -> float:
    """``∫ |p_a - p_b| dx`` for two continuous measures, integrated in ``a``'s chart."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    ch = a.chart()

    def g(U):
        X, lj = ch.to_x(U)
        la, lb = a.logpdf(X), b.logpdf(X)
        hi = np.maximum(la, lb)
        lo = np.minimum(la, lb)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(hi > -np.inf, hi + np.log1p(-np.exp(np.where(hi > -np.inf, lo - hi, 0.0))), -np.inf)
        d = np.where(lo == hi, -np.inf, d)
        return (d > -np.inf).astype(float), d + lj

    res = log_cubature(g, ch.lo, ch.hi, ch.center, ch.scale, tol=tol,
                       breakpoints=[list(np.arange(-12.0, 12.5, 0.5))] * a.dim if a.dim == 1 else None)
    return res.value
