import math

import numpy as np
import pytest
from scipy import integrate as sint, stats

from momentdet.errors import NegativeMassError, SupportError
from momentdet.expr import parse_expression
from momentdet.measures import (
    Cone, DensityExpr, Discrete, Exponential1D, Gamma1D, GaussianProduct, LogNormal1D, Mixture,
    ProductOf1D, Pushforward, SupportDescriptor, closed_form_moment, density_at, marginal_support,
    moment_matched_family, standard_normal,
)
from momentdet.quad import LogFn, integrate, l1_distance


def test_density_examples():
    assert density_at(standard_normal(1), [0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert density_at(LogNormal1D(0, 1), [0.0]) == 0.0
    assert density_at(LogNormal1D(0, 1), [-1.0]) == 0.0
    x = math.exp(0.25)
    assert density_at(moment_matched_family(1.0), [x]) == pytest.approx(2 * stats.lognorm.pdf(x, 1.0))


@pytest.mark.parametrize("spec,x", [
    (Gamma1D(2.5, 1.5), 3.1),
    (Exponential1D(2.0), 0.7),
    (LogNormal1D(0.3, 0.8), 1.9),
    (GaussianProduct((1.0, -2.0), (0.5, 2.0)), (1.2, 0.0)),
])
def test_density_against_scipy(spec, x):
    oracle = {
        Gamma1D: lambda: stats.gamma.pdf(x, 2.5, scale=1.5),
        Exponential1D: lambda: stats.expon.pdf(x, scale=0.5),
        LogNormal1D: lambda: stats.lognorm.pdf(x, 0.8, scale=math.exp(0.3)),
        GaussianProduct: lambda: stats.norm.pdf(1.2, 1.0, 0.5) * stats.norm.pdf(0.0, -2.0, 2.0),
    }[type(spec)]()
    assert density_at(spec, np.atleast_1d(x)) == pytest.approx(oracle, rel=1e-12)


def test_closed_form_moments():
    assert float(closed_form_moment(standard_normal(1), 0, 6)) == pytest.approx(15.0, rel=1e-14)
    assert closed_form_moment(standard_normal(1), 0, 3).is_zero()
    assert float(closed_form_moment(LogNormal1D(0, 1), 0, 2)) == pytest.approx(math.e ** 2)
    assert float(closed_form_moment(Gamma1D(2.0, 1.0), 0, 3)) == pytest.approx(24.0)


def test_closed_form_against_quadrature():
    q = integrate(lambda X: X[:, 0] ** 6, standard_normal(1), 1e-12)
    assert abs(q.value - 15.0) / 15.0 < 1e-10
    ref, _ = sint.quad(lambda u: math.exp(2 * u) * stats.norm.pdf(u), -40, 40, epsabs=0, epsrel=1e-13)
    assert ref == pytest.approx(math.e ** 2, rel=1e-10)


@pytest.mark.parametrize("spec", [
    standard_normal(1), standard_normal(2), LogNormal1D(0, 1), Gamma1D(2.0, 1.0), Exponential1D(3.0),
    moment_matched_family(0.5), ProductOf1D((Gamma1D(2.0, 1.0), standard_normal(1))),
    DensityExpr(parse_expression("exp(-abs(x1))", 1), SupportDescriptor("all_space")),
])
def test_normalization(spec):
    assert integrate(lambda X: np.ones(len(X)), spec, 1e-10).value == pytest.approx(1.0, abs=1e-6)


def test_density_expr_normalizes_automatically():
    spec = DensityExpr(parse_expression("exp(-x1^2)", 1), SupportDescriptor("all_space"))
    assert spec.normalization_used == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert density_at(spec, [0.0]) == pytest.approx(1 / math.sqrt(math.pi))


def test_theta_zero_is_lognormal():
    m = moment_matched_family(0.0)
    x = np.linspace(0.1, 5.0, 7)
    assert np.allclose([density_at(m, [v]) for v in x], stats.lognorm.pdf(x, 1.0), rtol=1e-13)


@pytest.mark.parametrize("theta", [-1.0, -0.5, 0.5, 1.0])
def test_moment_matched_family_shares_moments(theta):
    m = moment_matched_family(theta)
    for k in range(13):
        power = LogFn(lambda X, k=k: (np.ones(len(X)), k * np.log(X[:, 0])))
        q = integrate(power, m, 1e-12)
        assert abs(q.value - math.exp(k * k / 2)) / math.exp(k * k / 2) < 1e-6


def test_moment_matched_family_is_visibly_different():
    assert l1_distance(moment_matched_family(1.0), moment_matched_family(-1.0)) > 0.1


def test_exponential_sqrt_pushforward_moments():
    push = Pushforward(Exponential1D(1.0), "phi_sqrt", Cone.standard(1))
    for m in range(9):
        q = integrate(lambda X, m=m: X[:, 0] ** m, push, 1e-12)
        assert q.value == pytest.approx(math.gamma(m / 2 + 1), rel=1e-8)


def test_discrete_atoms():
    d = Discrete((((0.0,), 0.3), ((1.0,), 0.7)))
    assert integrate(lambda X: np.ones(len(X)), d).value == 1.0
    with pytest.raises((ValueError, NegativeMassError)):
        Discrete((((0.0,), -0.3),))
    with pytest.raises(ValueError):
        Discrete((((1.0,), 0.5), ((1.0,), 0.5)))


def test_mixture_mass_and_moments():
    mix = Mixture(((0.5, standard_normal(1)), (0.5, Discrete((((2.0,), 1.0),)))))
    assert mix.total_mass() == pytest.approx(1.0)
    q = integrate(lambda X: X[:, 0] ** 2, mix, 1e-12)
    assert q.value == pytest.approx(0.5 * 1 + 0.5 * 4)


def test_marginal_support_flags():
    flags = marginal_support(Gamma1D(2.0, 1.0), Cone.standard(1), 0)
    assert flags.contains_origin is True and flags.discrete_unbounded is False
    atoms = tuple(((float(k * k),), 2.0 ** -k) for k in range(1, 12))
    assert marginal_support(Discrete(atoms, truncated=True), Cone.standard(1), 0).discrete_unbounded is True
    pred = DensityExpr(parse_expression("exp(-x1)", 1),
                       SupportDescriptor("predicate", predicate=parse_expression("sin(x1)", 1)))
    assert marginal_support(pred, Cone.standard(1), 0).unknown()


def test_cone_support_checks():
    assert Exponential1D(1.0).supported_in(Cone.standard(1))
    assert not standard_normal(1).supported_in(Cone.standard(1))
    c = Cone(((1.0, 1.0), (0.0, 1.0)))
    assert np.allclose(c.dual @ c.matrix, np.eye(2))


def test_sampling_matches_moments():
    rng = np.random.default_rng(0)
    x, logw = Gamma1D(2.0, 1.0).sample(rng, 200_000)
    assert logw is None
    assert x.mean() == pytest.approx(2.0, rel=1e-2)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_raw_overflow_is_reported():
    with pytest.raises(OverflowError):
        integrate(lambda X: X[:, 0] ** 12, LogNormal1D(0, 1), 1e-12)
