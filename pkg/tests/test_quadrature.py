import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from jlflux import (
    PreconditionError,
    QuadratureError,
    WeightedMeasure,
    gauss_jacobi,
    inner_product,
    lemma1_gap,
    norm,
    weighted_integral,
)

GRID = [(n, a) for n in range(3, 11) for a in (-0.9, -0.5, -0.1)]


def test_beta_identity_example():
    m = WeightedMeasure.gauss_jacobi(3, -0.5)
    assert weighted_integral(lambda th: np.ones_like(th), m) == pytest.approx(2.0, rel=1e-14)


def test_a_zero_allowed_here():
    m = WeightedMeasure.gauss_jacobi(3, 0.0)
    assert m.total_mass == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("n, a", GRID)
def test_total_mass_against_mpmath(n, a):
    m = WeightedMeasure.gauss_jacobi(n, a)
    assert m.total_mass == pytest.approx(oracles.total_mass(n, a), rel=1e-12)
    assert np.all(m.weights > 0)


@pytest.mark.parametrize("n, a", [(3, -0.5), (6, -0.9), (10, 0.5)])
def test_sin_squared_raises_dimension(n, a):
    m = WeightedMeasure.gauss_jacobi(n, a)
    assert weighted_integral(lambda th: np.sin(th) ** 2, m) == pytest.approx(
        WeightedMeasure.gauss_jacobi(n + 2, a).total_mass, rel=1e-13)


def test_against_adaptive_quadrature():
    import mpmath as mp

    for n, a in [(3, -0.5), (7, -0.9), (5, 0.3)]:
        got = weighted_integral(lambda th: np.cos(th) ** 2 * np.exp(np.sin(th) ** 2),
                                WeightedMeasure.gauss_jacobi(n, a))
        ref = oracles.weighted_quad(lambda t: mp.cos(t) ** 2 * mp.exp(mp.sin(t) ** 2), n, a)
        assert got == pytest.approx(ref, rel=1e-12)


def test_double_exponential_rule_matches():
    for n, a in [(3, -0.5), (9, -0.9), (4, 0.7)]:
        assert WeightedMeasure.double_exponential(n, a).total_mass == pytest.approx(
            oracles.total_mass(n, a), rel=1e-12)


def test_polynomials_in_u_are_exact():
    # degree-40 polynomial in u = sin^2 with a 64-point rule
    x, w = gauss_jacobi(64, -0.25, 0.5)
    f = lambda u: u**40 - 3 * u**7 + 1
    m = WeightedMeasure.gauss_jacobi(4, 0.5)
    got = weighted_integral(lambda th: f(np.sin(th) ** 2), m)
    import mpmath as mp

    ref = oracles.weighted_quad(lambda t: f(mp.sin(t) ** 2), 4, 0.5)
    assert got == pytest.approx(ref, rel=1e-13)
    assert np.all(w > 0) and np.all(np.abs(x) < 1)


@pytest.mark.parametrize("n, a", GRID)
def test_lemma1_gap_negative(n, a):
    assert lemma1_gap(n, a) < 0


def test_lemma1_gap_vanishes_as_a_to_zero():
    gaps = [abs(lemma1_gap(3, -10.0**-k)) for k in (2, 4, 6)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-5


def test_lemma1_gap_precondition():
    with pytest.raises(PreconditionError):
        lemma1_gap(3, 0.5)


def test_non_finite_sample_names_node():
    m = WeightedMeasure.gauss_jacobi(3, -0.5, 16)
    bad = np.ones(16)
    bad[5] = np.nan
    with pytest.raises(QuadratureError) as info:
        weighted_integral(bad, m)
    assert "5" in str(info.value)


def test_inner_product_and_norm_contracts():
    m = WeightedMeasure.gauss_jacobi(5, -0.3)
    assert inner_product(lambda t: np.ones_like(t), lambda t: np.ones_like(t), m) == pytest.approx(m.total_mass)
    assert norm(lambda t: np.zeros_like(t), m) == 0.0
    assert norm(lambda t: np.cos(t), m) > 0


@given(st.integers(3, 12), st.floats(-0.95, 0.95), st.floats(-3, 3), st.floats(-3, 3))
def test_bilinearity(n, a, s, t):
    m = WeightedMeasure.gauss_jacobi(n, a, 32)
    f = np.cos(m.theta)
    g = np.sin(m.theta) ** 2
    h = np.exp(-m.theta)
    lhs = inner_product(s * f + t * g, h, m)
    rhs = s * inner_product(f, h, m) + t * inner_product(g, h, m)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    assert inner_product(f, g, m) == pytest.approx(inner_product(g, f, m), rel=1e-14)


@given(st.integers(3, 12), st.floats(-0.95, 0.95))
def test_order_doubling_for_smooth_integrand(n, a):
    f = lambda th: np.exp(np.sin(th) ** 2) * np.cos(3 * th) ** 2
    lo = weighted_integral(f, WeightedMeasure.gauss_jacobi(n, a, 64))
    hi = weighted_integral(f, WeightedMeasure.gauss_jacobi(n, a, 128))
    assert hi == pytest.approx(lo, rel=1e-12)
