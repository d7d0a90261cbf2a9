import math

import numpy as np
import pytest
from numpy.polynomial import hermite_e
from scipy import integrate as sint, stats
from scipy.special import factorial

from momentdet.density import (
    char_function, gram_matrix, orthonormality_defect, orthonormalize, poly_projection_error,
    trig_projection_error,
)
from momentdet.errors import SingularGramError
from momentdet.measures import Discrete, Exponential1D, Gamma1D, GaussianProduct, LogNormal1D, standard_normal
from momentdet.moments import build_table

NORMAL = standard_normal(1)


def test_gram_of_standard_normal():
    G = gram_matrix(NORMAL, 2)
    assert np.allclose(G.matrix, [[1, 0, 1], [0, 1, 0], [1, 0, 3]])
    from_table = gram_matrix(build_table(NORMAL, M=4), 2)
    assert np.allclose(from_table.matrix, G.matrix, rtol=1e-12)


def test_gram_of_point_mass_is_singular():
    G = gram_matrix(Discrete((((0.0,), 1.0),)), 1)
    assert np.allclose(G.matrix, [[1, 0], [0, 0]])
    assert orthonormalize(G).degree == 0
    with pytest.raises(SingularGramError):
        orthonormalize(G, strict=True)


@pytest.mark.parametrize("spec", [NORMAL, Gamma1D(2.0, 1.0), LogNormal1D(0, 0.5), Exponential1D(3.0)])
def test_leading_gram_entry_is_mass(spec):
    assert gram_matrix(spec, 3).matrix[0, 0] == pytest.approx(1.0)


def test_hermite_basis():
    basis = orthonormalize(gram_matrix(NORMAL, 3))
    for k in range(4):
        he = np.zeros(k + 1)
        he[k] = 1.0
        expected = hermite_e.herme2poly(he) / math.sqrt(factorial(k))
        assert np.allclose(basis.coeffs[k, : k + 1], expected, atol=1e-12)
    x = np.linspace(-3, 3, 7)
    assert np.allclose(basis(x)[:, 3], (x ** 3 - 3 * x) / math.sqrt(6), atol=1e-12)


def test_identity_gram_gives_monomials():
    basis = orthonormalize(np.eye(4))
    assert np.allclose(basis.coeffs, np.eye(4))


@pytest.mark.parametrize("spec", [NORMAL, Gamma1D(2.0, 1.0), Exponential1D(1.0)])
def test_orthonormality_by_quadrature(spec):
    basis = orthonormalize(gram_matrix(spec, 15))
    assert basis.degree == 15
    assert orthonormality_defect(basis, spec) < 1e-8


def test_sin_under_normal():
    res = poly_projection_error(lambda x: np.sin(x), NORMAL, 15)
    assert res.errors[15] < 1e-6
    # the Hermite coefficients of sin: <sin, He_k/sqrt(k!)> = (-1)^((k-1)/2) e^{-1/2} / sqrt(k!) for odd k
    for k in (1, 3, 5):
        expected = (-1) ** ((k - 1) // 2) * math.exp(-0.5) / math.sqrt(math.factorial(k))
        assert res.coefficients[k] == pytest.approx(expected, abs=1e-10)
    assert res.norm == pytest.approx(math.sqrt((1 - math.exp(-2)) / 2), rel=1e-10)


def test_polynomial_targets_are_reproduced():
    for spec in (NORMAL, Gamma1D(2.0, 1.0)):
        res = poly_projection_error(lambda x: x ** 2, spec, 4)
        assert res.errors[2] < 1e-7 * res.norm


def test_lognormal_counterexample():
    res = poly_projection_error(lambda x: np.sin(2 * math.pi * np.log(x)), LogNormal1D(0, 1), 10)
    assert max(abs(c) for c in res.coefficients[:11]) < 1e-6
    assert res.norm == pytest.approx(math.sqrt((1 - math.exp(-8 * math.pi ** 2)) / 2), abs=1e-8)
    assert res.errors[10] / res.norm > 0.99


@pytest.mark.parametrize("spec,f", [
    (NORMAL, lambda x: np.cos(2 * x)),
    (Gamma1D(2.0, 1.0), lambda x: np.exp(-x)),
    (LogNormal1D(0, 1), lambda x: np.sin(2 * math.pi * np.log(x))),
])
def test_bessel_and_monotonicity(spec, f):
    res = poly_projection_error(f, spec, 8)
    e = np.asarray(res.errors)
    assert np.all(np.diff(e) <= 1e-10 * res.norm)
    assert np.sum(np.square(res.coefficients)) <= res.norm ** 2 * (1 + 1e-9)


def test_char_function():
    assert char_function(NORMAL, 0.0) == pytest.approx(1.0)
    assert char_function(NORMAL, 1.0) == pytest.approx(math.exp(-0.5))
    g = char_function(Gamma1D(2.0, 1.0), 1.0)
    assert g == pytest.approx((1 - 1j) ** -2)
    sym = GaussianProduct((0.0,), (2.0,))
    assert abs(char_function(sym, 0.7).imag) < 1e-14
    ref = sint.quad(lambda x: math.cos(1.3 * x) * stats.lognorm.pdf(x, 1.0), 0, np.inf, limit=500)[0]
    assert char_function(LogNormal1D(0, 1), 1.3).real == pytest.approx(ref, abs=1e-7)


def test_trig_member_of_span():
    assert trig_projection_error(lambda x: np.cos(0.5 * x), NORMAL, [-0.5, 0.0, 0.5]).error < 1e-7


def test_trig_refinement_for_sin():
    errs = []
    for k in range(1, 6):
        grid = np.linspace(-1, 1, 2 * k + 1)
        errs.append(trig_projection_error(lambda x: np.sin(2 * x), NORMAL, grid).error)
    assert all(b <= a + 1e-9 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.05


def test_trig_constants_only():
    f = lambda x: np.cos(x) + x
    res = trig_projection_error(f, NORMAL, [0.0])
    mean = math.exp(-0.5)
    var = (1 + math.exp(-2)) / 2 + 1 - mean ** 2 + 2 * 0     # E[(cos x + x)^2] - mean^2 ; E[x cos x] = 0
    assert res.error == pytest.approx(math.sqrt(var), rel=1e-8)
