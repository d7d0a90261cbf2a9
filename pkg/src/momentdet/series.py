"""Finite-horizon divergence test for positive series.

A series ``Σ a_m`` with ``a_m ~ C m^{-β}`` diverges iff ``β <= 1``.  The
exponent is fitted by least squares of ``-log a_m`` against ``log m`` over the
top half of the horizon, and a band of half-width ``delta`` around 1 is
reported as INCONCLUSIVE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

__all__ = ["SeriesClassification", "classify_series", "DIVERGENT", "CONVERGENT", "INCONCLUSIVE", "DELTA"]

DIVERGENT, CONVERGENT, INCONCLUSIVE = "DIVERGENT", "CONVERGENT", "INCONCLUSIVE"
DELTA = 0.05
MIN_TERMS = 8


@dataclass(frozen=True)
class SeriesClassification:
    outcome: str
    beta: float
    beta_stderr: float
    partial_sums: tuple
    horizon: int
    reason: str
    window: tuple = ()
    delta: float = DELTA
    log_terms: tuple = field(default=(), repr=False)

    @property
    def beta_band(self):
        return (self.beta - 2 * self.beta_stderr, self.beta + 2 * self.beta_stderr)


def _partial_sums(log_terms):
    with np.errstate(over="ignore"):
        t = np.exp(np.minimum(log_terms, 710.0))
    return tuple(float(v) for v in np.cumsum(t))


def classify_series(terms=None, *, log_terms=None, delta=DELTA, m_start=1) -> SeriesClassification:
    """Classify ``Σ terms`` as DIVERGENT / CONVERGENT / INCONCLUSIVE.

    ``terms[k]`` is the term of index ``m = m_start + k``; pass ``log_terms``
    instead when the terms span many orders of magnitude.
    """
    if log_terms is None:
        terms = np.asarray(terms, dtype=float)
        if np.any(terms < 0) or np.any(np.isnan(terms)):
            raise ValueError("series terms must be non-negative")
        with np.errstate(divide="ignore"):
            log_terms = np.log(terms)
    log_terms = np.asarray(log_terms, dtype=float)
    M = log_terms.size
    if M < MIN_TERMS:
        raise ValueError(f"need at least {MIN_TERMS} terms, got {M}")
    ms = np.arange(m_start, m_start + M, dtype=float)
    lo = M // 2
    window = (int(ms[lo]), int(ms[-1]))
    ps = _partial_sums(log_terms)
    common = dict(partial_sums=ps, horizon=int(ms[-1]), window=window, delta=delta,
                  log_terms=tuple(float(v) for v in log_terms))

    if np.any(log_terms == np.inf):
        return SeriesClassification(DIVERGENT, math.nan, math.nan, reason="infinite_term", **common)
    y = -log_terms[lo:]
    x = np.log(ms[lo:])
    if np.any(y == np.inf):
        return SeriesClassification(CONVERGENT, math.inf, 0.0, reason="vanishing_terms", **common)

    fit = stats.linregress(x, y)
    beta, se = float(fit.slope), float(fit.stderr)
    if y[-1] <= y[0] + 1e-12:
        return SeriesClassification(DIVERGENT, beta, se, reason="bounded_below", **common)
    if beta <= 1.0 - delta:
        return SeriesClassification(DIVERGENT, beta, se, reason="growth_fit", **common)
    if beta >= 1.0 + delta:
        if _limit_slope(x, y) < 1.0 + delta:
            return SeriesClassification(INCONCLUSIVE, beta, se, reason="log_corrected_boundary", **common)
        return SeriesClassification(CONVERGENT, beta, se, reason="growth_fit", **common)
    return SeriesClassification(INCONCLUSIVE, beta, se, reason="delta_band", **common)


def _limit_slope(x, y):
    """Extrapolate the local slope ``dy/dx`` to ``1/x -> 0``.

    Terms like ``1/(m (log m)^q)`` have local exponent ``1 + q/log m``: above 1
    at every finite horizon, yet the series diverges for ``q <= 1``.  Such a
    drift extrapolates to 1 and is reported as INCONCLUSIVE.
    """
    if x.size < 4:
        return math.inf
    slope = np.gradient(y, x)
    fit = stats.linregress(1.0 / x, slope)
    return float(fit.intercept) if fit.slope > 0 else float(slope[-1])
