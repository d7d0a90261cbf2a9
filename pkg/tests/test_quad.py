import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint, stats

from momentdet.measures import Discrete, GaussianProduct, Gamma1D, standard_normal
from momentdet.quad import (
    FINITE, INCONCLUSIVE, INFINITE, LogFn, TailProfile, classify_tail, default_schedule, integrate,
    monte_carlo, tail_profile,
)


def test_normalization_and_variance():
    one = integrate(lambda X: np.ones(len(X)), standard_normal(1), 1e-10)
    assert abs(one.value - 1.0) < 1e-10
    var = integrate(lambda X: X[:, 0] ** 2, standard_normal(1), 1e-10)
    assert abs(var.value - 1.0) < 1e-8


def test_discrete_is_exact():
    d = Discrete((((0.0,), 0.3), ((1.0,), 0.7)))
    r = integrate(lambda X: np.ones(len(X)), d)
    assert r.value == 1.0 and r.method == "exact"


@pytest.mark.parametrize("n", [2, 3])
def test_multidimensional_gaussian(n):
    spec = GaussianProduct((0.0,) * n, (1.0,) * n)
    r = integrate(lambda X: np.exp(-np.sum(X ** 2, axis=1)), spec, 1e-8)
    assert r.value == pytest.approx(3.0 ** (-n / 2), rel=1e-7)


def test_against_scipy_quad():
    f = lambda x: np.cos(x) * np.exp(-abs(x - 1))
    ref, _ = sint.quad(lambda x: f(x) * stats.gamma.pdf(x, 2.5), 0, 200, epsabs=0, epsrel=1e-13, limit=400)
    r = integrate(lambda X: f(X[:, 0]), Gamma1D(2.5, 1.0), 1e-11)
    assert r.value == pytest.approx(ref, rel=1e-9)


def test_tail_profile_shrinking_increments():
    prof = tail_profile(lambda X: np.exp(np.abs(X[:, 0])), standard_normal(1), (2.0, 4.0, 8.0, 16.0, 32.0, 64.0))
    inc = [float(x) for x in prof.increments]
    assert all(b < a for a, b in zip(inc[1:], inc[2:]))
    assert classify_tail(prof).outcome == FINITE
    assert float(classify_tail(prof).value) == pytest.approx(2 * math.exp(0.5) * stats.norm.cdf(1), rel=1e-6)


def test_tail_profile_growing_increments():
    g = LogFn(lambda X: (np.ones(len(X)), 0.75 * X[:, 0] ** 2))
    prof = tail_profile(g, standard_normal(1), default_schedule(2.0, 6))
    inc = [x.log for x in prof.increments]
    assert all(b > a for a, b in zip(inc[1:], inc[2:]))
    assert classify_tail(prof).outcome == INFINITE


def test_zero_integrand_profile():
    prof = tail_profile(lambda X: np.zeros(len(X)), standard_normal(1), default_schedule(2.0, 5))
    assert all(x.is_zero() for x in prof.increments)
    assert classify_tail(prof).outcome == FINITE


@pytest.mark.parametrize("incs,outcome", [
    ((1, 0.1, 0.01, 0.001), FINITE),
    ((1, 2, 4, 8), INFINITE),
    ((1, 0.9, 0.95, 0.9), INCONCLUSIVE),
])
def test_classify_tail_examples(incs, outcome):
    v = classify_tail(TailProfile.from_increments(incs))
    assert v.outcome == outcome
    if outcome == FINITE:
        assert float(v.value) == pytest.approx(1.111, rel=1e-3)


def test_default_schedule():
    s = default_schedule(2.0, 12)
    assert len(s) == 13 and s[0] == 2.0 and s[-1] == 2.0 * 2 ** 12
    assert all(b > a for a, b in zip(s, s[1:]))


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 4), st.floats(0.1, 2.0))
def test_linearity(a, b, k, w):
    spec = standard_normal(1)
    f = lambda X: X[:, 0] ** k
    g = lambda X: np.cos(w * X[:, 0])
    rf, rg = integrate(f, spec, 1e-10), integrate(g, spec, 1e-10)
    rh = integrate(lambda X: a * f(X) + b * g(X), spec, 1e-10)
    bound = abs(a) * rf.err + abs(b) * rg.err + rh.err + 1e-12 * (abs(a) * abs(rf.value) + abs(b) * abs(rg.value))
    assert abs(rh.value - a * rf.value - b * rg.value) <= bound + 1e-13


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 3.0))
def test_monotone_profiles(c):
    g = LogFn(lambda X: (np.ones(len(X)), c * np.abs(X[:, 0])))
    prof = tail_profile(g, standard_normal(1), default_schedule(1.0, 8))
    assert all(x.sign >= 0 for x in prof.increments)
    partial = prof.partial_floats()
    assert all(b >= a * (1 - 1e-12) for a, b in zip(partial, partial[1:]))


@pytest.mark.parametrize("spec,f", [
    (standard_normal(1), lambda X: np.cos(X[:, 0])),
    (standard_normal(2), lambda X: X[:, 0] ** 2 * np.exp(-np.abs(X[:, 1]))),
])
def test_monte_carlo_agrees_with_quadrature(spec, f):
    q = integrate(f, spec, 1e-10)
    mc = monte_carlo(f, spec, 200_000, seed=7)
    assert abs(mc.value - q.value) <= 4 * mc.err
    again = monte_carlo(f, spec, 200_000, seed=7)
    assert again.value == mc.value


def test_monte_carlo_error_bars_are_calibrated():
    spec = GaussianProduct((0.0,) * 4, (1.0,) * 4)
    f = lambda X: (X[:, 0] + X[:, 1]) ** 2
    z = []
    for seed in range(12):
        r = monte_carlo(f, spec, 400_000, seed=seed)
        z.append((r.value - 2.0) / r.err)
    assert max(abs(v) for v in z) < 4.5
    assert 0.4 < np.std(z) < 1.8


def test_monte_carlo_options():
    from momentdet.errors import UnsupportedOperation
    from momentdet.quad import monte_carlo_options
    spec = GaussianProduct((0.0,) * 4, (1.0,) * 4)
    f = lambda X: X[:, 0] ** 2
    with monte_carlo_options(True, 50_000, 11):
        a = integrate(f, spec)
    assert a.method == "monte_carlo" and a.n_eval == 50_000
    with monte_carlo_options(True, 50_000, 11):
        assert integrate(f, spec).value == a.value
    with monte_carlo_options(False):
        with pytest.raises(UnsupportedOperation):
            integrate(f, spec)
