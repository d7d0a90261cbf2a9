import math

import numpy as np
import pytest

from momentdet.criteria import (
    CRITERION_NOT_MET, INCONCLUSIVE, SUFFICIENT_C_DETERMINATE, SUFFICIENT_DETERMINATE, CriterionSpec,
    DeterminacyVerdict, Link, carleman_partial_sums, extended_carleman_check, integral_criterion,
    phi_pushforward, shohat_tamarkin_check, strengthen_to_determinate, symmetrize, verify_moment_relation,
)
from momentdet.errors import CriterionError, SupportError
from momentdet.measures import (
    Cone, DensityExpr, Discrete, Exponential1D, Gamma1D, GaussianProduct, LogNormal1D, ProductOf1D,
    SupportDescriptor, standard_normal,
)
from momentdet.expr import parse_expression
from momentdet.moments import absolute_moment, directional_moments
from momentdet.quad import integrate
from momentdet.series import CONVERGENT, DIVERGENT, classify_series
from momentdet.signedlog import SignedLog
from momentdet.weights import ExpDecay, QUASI_ANALYTIC, RadialRho, RepeatedLog, classify_quasianalytic

HALF = Cone.standard(1)
GOLDEN = [standard_normal(1), standard_normal(2), LogNormal1D(0, 1), Gamma1D(2.0, 1.0), Exponential1D(1.0),
          ProductOf1D((Gamma1D(2.0, 1.0), standard_normal(1)))]


# --- Carleman series ---------------------------------------------------------

def test_gaussian_terms():
    tab = directional_moments(standard_normal(1), M=8)
    s = carleman_partial_sums(tab.s[0], 4)
    assert s.terms[0] == pytest.approx(1.0)
    assert s.terms[1] == pytest.approx(3 ** -0.25)


def test_lognormal_geometric_terms():
    tab = directional_moments(LogNormal1D(0, 1), M=60)
    s = carleman_partial_sums(tab.s[0], 30)
    assert np.allclose(s.terms, np.exp(-np.arange(1, 31)), rtol=1e-12)
    assert s.partial_sums[-1] == pytest.approx(1 / (math.e - 1), abs=1e-12)


def test_unit_moments_and_zero_moments():
    s = carleman_partial_sums([1.0] * 21, 10)
    assert s.partial_sums[-1] == pytest.approx(10.0)
    z = carleman_partial_sums([1.0, 0.0, 0.0, 0.0, 0.0], 2)
    assert np.all(np.isinf(z.terms))
    with pytest.raises(ValueError):
        carleman_partial_sums([1.0, 0.0, 1.0], 5)


def test_extended_carleman_gaussian():
    v = extended_carleman_check(standard_normal(2), M=30)
    assert v.outcome == SUFFICIENT_DETERMINATE and v.density
    for link in v.evidence:
        assert 0.4 <= link.data["series"].beta <= 0.6


def test_extended_carleman_lognormal():
    v = extended_carleman_check(LogNormal1D(0, 1), M=30)
    assert v.outcome == CRITERION_NOT_MET and not v.density
    assert v.evidence[0].data["series"].outcome == CONVERGENT


def test_extended_carleman_stieltjes_exponential():
    v = extended_carleman_check(Exponential1D(1.0), M=30, mode="stieltjes", cone=HALF)
    assert v.outcome == SUFFICIENT_C_DETERMINATE and not v.density
    assert 0.4 <= v.evidence[0].data["series"].beta <= 0.6


def test_stieltjes_mode_needs_support_in_cone():
    with pytest.raises(SupportError):
        extended_carleman_check(standard_normal(1), M=10, mode="stieltjes", cone=HALF)
    with pytest.raises(ValueError):
        extended_carleman_check(standard_normal(1), M=4)


def test_shohat_tamarkin():
    assert shohat_tamarkin_check(standard_normal(2), 30).outcome == SUFFICIENT_DETERMINATE
    assert shohat_tamarkin_check(LogNormal1D(0, 1), 30).outcome == CRITERION_NOT_MET


@pytest.mark.parametrize("spec", GOLDEN)
def test_soundness_ordering(spec):
    st = shohat_tamarkin_check(spec, 20)
    ec = extended_carleman_check(spec, M=20)
    if st.outcome == SUFFICIENT_DETERMINATE:
        assert ec.outcome == SUFFICIENT_DETERMINATE


@pytest.mark.parametrize("spec", GOLDEN)
def test_verdicts_stable_in_horizon(spec):
    seen = {extended_carleman_check(spec, M=M).outcome for M in (10, 15, 20, 30)}
    assert not {SUFFICIENT_DETERMINATE, CRITERION_NOT_MET} <= seen


@pytest.mark.parametrize("spec,cone", [
    (Exponential1D(1.0), HALF),
    (Gamma1D(0.5, 2.0), HALF),
    (LogNormal1D(0, 1), HALF),
    (ProductOf1D((Gamma1D(2.0, 1.0), Gamma1D(2.0, 1.0))), Cone.standard(2)),
])
def test_stieltjes_reduction(spec, cone):
    direct = extended_carleman_check(spec, M=16, mode="stieltjes", cone=cone)
    image = symmetrize(phi_pushforward(spec, cone), cone)
    via = extended_carleman_check(image, cone.dual, M=16)
    expected = {SUFFICIENT_C_DETERMINATE: SUFFICIENT_DETERMINATE}.get(direct.outcome, direct.outcome)
    assert via.outcome == expected


@pytest.mark.parametrize("spec", [standard_normal(1), Exponential1D(1.0), LogNormal1D(0, 1), Gamma1D(3.0, 0.5)])
def test_stride_invariance_of_divergence(spec):
    # a(m) = t(m)^(-1/m) is non-increasing; sums over a(km) diverge together for every stride k
    t = [absolute_moment(spec, 0, float(m)).value.log for m in range(1, 91)]
    a = [-t[m - 1] / m for m in range(1, 91)]
    assert all(y <= x + 1e-9 for x, y in zip(a, a[1:]))
    outcomes = {classify_series(log_terms=np.array(a[k - 1::k][:30])).outcome for k in (1, 2, 3)}
    # strides may leave the harmonic boundary undecided but never contradict each other
    assert not {DIVERGENT, CONVERGENT} <= outcomes
    if not isinstance(spec, Exponential1D):
        assert len(outcomes) == 1


# --- integral criteria -------------------------------------------------------

def test_radial_rho_on_normal():
    v = integral_criterion(standard_normal(1), CriterionSpec("radial_rho", rho=((1.0, "s"),)))
    assert v.outcome == SUFFICIENT_DETERMINATE and v.density
    assert [l.name for l in v.evidence] == ["weight", "tail"]


def test_repeated_log_on_lognormal():
    crit = CriterionSpec("repeated_log", a=(1.0, 1.0), p=(1.0, 1.0, 0.0))
    assert integral_criterion(LogNormal1D(0, 1), crit).outcome == CRITERION_NOT_MET


def test_repeated_log_requires_quasi_analytic_exponents():
    crit = CriterionSpec("repeated_log", a=(1.0, 1.0), p=(1.0, 2.0))
    with pytest.raises(CriterionError):
        integral_criterion(standard_normal(1), crit)


def test_stieltjes_radial_on_exponential():
    crit = CriterionSpec("stieltjes_radial", weight=ExpDecay(1.0), cone=HALF)
    v = integral_criterion(Exponential1D(1.0), crit)
    assert v.outcome == SUFFICIENT_C_DETERMINATE and not v.density
    up = strengthen_to_determinate(v, Exponential1D(1.0), HALF)
    assert up.outcome == SUFFICIENT_DETERMINATE and not up.density
    assert up.evidence[-1].name == "support"


def test_tensor_affine_on_shifted_gaussian():
    spec = GaussianProduct((1.0, -1.0), (1.0, 2.0))
    crit = CriterionSpec("tensor_affine", rho=((1.0, "s"), (1.0, "s")),
                         matrix=((1.0, 0.5), (0.0, 1.0)), offset=(0.5, 0.0))
    assert integral_criterion(spec, crit).outcome == SUFFICIENT_DETERMINATE


def test_weight_criterion_fails_on_heavy_tail():
    # exp(|x|) is not integrable against exp(-|x|^(1/2))-type tails of the lognormal
    crit = CriterionSpec("weight_reciprocal", weight=ExpDecay(1.0))
    assert integral_criterion(LogNormal1D(0, 1), crit).outcome == CRITERION_NOT_MET


@pytest.mark.parametrize("spec", [standard_normal(1), Gamma1D(2.0, 1.0), Exponential1D(2.0)])
@pytest.mark.parametrize("w", [ExpDecay(1.0), RepeatedLog((2.0, 3.0), (1.0, 1.0, 0.0)), RadialRho(1.0, "s")])
def test_weight_to_carleman_consistency(spec, w):
    v = integral_criterion(spec, CriterionSpec("weight_reciprocal", weight=w))
    if v.outcome == SUFFICIENT_DETERMINATE and classify_quasianalytic(w).outcome == QUASI_ANALYTIC:
        assert extended_carleman_check(spec, M=20).outcome != CRITERION_NOT_MET


def test_verdict_invariants():
    with pytest.raises(ValueError):
        DeterminacyVerdict(SUFFICIENT_DETERMINATE, "x", False, (Link("a", DIVERGENT, False, {}),))
    with pytest.raises(ValueError):
        DeterminacyVerdict(SUFFICIENT_C_DETERMINATE, "x", True, ())


# --- cone machinery ----------------------------------------------------------

def test_phi_pushforward():
    img = phi_pushforward(Exponential1D(1.0), HALF)
    assert integrate(lambda X: X[:, 0] ** 2, img).value == pytest.approx(1.0, rel=1e-9)
    assert integrate(None, img).value == pytest.approx(1.0, rel=1e-9)
    atom = phi_pushforward(Discrete((((4.0,), 1.0),)), HALF)
    assert atom.points[0][0] == pytest.approx(2.0)


def test_symmetrize():
    sym = symmetrize(Discrete((((1.0,), 1.0),)), HALF)
    assert sorted(p[0] for p in sym.points) == [-1.0, 1.0]
    assert np.allclose(sym.masses, 0.5)
    s2 = symmetrize(phi_pushforward(Gamma1D(2.0, 1.0), HALF), HALF)
    assert integrate(None, s2).value == pytest.approx(1.0, rel=1e-9)
    for m in (1, 3, 5):
        assert abs(integrate(lambda X, m=m: X[:, 0] ** m, s2).value) < 1e-12


def test_moment_relation_examples():
    ok, res, lhs, rhs = verify_moment_relation(Exponential1D(1.0), HALF, (2,))
    assert ok and lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)
    ok, res, lhs, rhs = verify_moment_relation(Exponential1D(1.0), HALF, (1,))
    assert ok and abs(lhs) < 1e-8
    g = ProductOf1D((Gamma1D(2.0, 1.0), Gamma1D(2.0, 1.0)))
    ok, res, lhs, rhs = verify_moment_relation(g, Cone.standard(2), (2, 2))
    assert ok and lhs == pytest.approx(4.0, rel=1e-8)


def test_moment_relation_in_a_skew_cone():
    cone = Cone(((1.0, 0.0), (1.0, 1.0)))
    from momentdet.measures import Pushforward
    inner = ProductOf1D((Exponential1D(1.0), Gamma1D(2.0, 1.0)))
    # push the standard quadrant onto the skew cone by x -> V x
    skew = DensityExpr(parse_expression("exp(-(x1 - x2)) * x2 * exp(-x2)", 2),
                       SupportDescriptor("cone", cone=cone), 1.0)
    for e in ((2, 0), (0, 2), (2, 2), (4, 2), (1, 2)):
        ok, res, lhs, rhs = verify_moment_relation(skew, cone, e)
        assert ok, (e, res)


def test_strengthening_rules():
    cdet = DeterminacyVerdict(SUFFICIENT_C_DETERMINATE, "x", False, (Link("a", DIVERGENT, True, {}),))
    atoms = tuple(((float(k * k),), 2.0 ** -k) for k in range(0, 15))
    unbounded = Discrete(atoms, truncated=True)
    assert strengthen_to_determinate(cdet, unbounded, HALF).outcome == SUFFICIENT_C_DETERMINATE
    pred = DensityExpr(parse_expression("exp(-x1)", 1),
                       SupportDescriptor("predicate", predicate=parse_expression("sin(x1)", 1)))
    kept = strengthen_to_determinate(cdet, pred, HALF)
    assert kept.outcome == SUFFICIENT_C_DETERMINATE and kept.notes
    assert strengthen_to_determinate(cdet, Exponential1D(1.0), HALF).outcome == SUFFICIENT_DETERMINATE
    not_met = DeterminacyVerdict(CRITERION_NOT_MET, "x")
    assert strengthen_to_determinate(not_met, Exponential1D(1.0), HALF).outcome == CRITERION_NOT_MET
