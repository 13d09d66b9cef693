import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from jlflux import (
    AngularGrid,
    IntegratorOverflow,
    PreconditionError,
    ProblemParams,
    WeightedMeasure,
    derive,
    integrate_angular,
    singular_profile,
    weighted_integral,
)

CASES = [(3, -0.5, 7.0), (4, -0.5, 3.0), (5, -0.2, 3.0), (8, -0.9, 2.0), (12, -0.5, 4.0),
         (30, -0.5, 20.0), (4, 0.5, 5.0)]


def test_kappa_zero_is_constant():
    y = integrate_angular(0.0, 5, -0.3)
    assert np.allclose(y.values, 1.0, atol=1e-14)
    assert y.flux == 0.0 or abs(y.flux) < 1e-14
    assert y.boundary_value == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("n, a, kappa", [(3, -0.5, 2.0), (3, -0.9, 0.3), (7, 0.4, -30.0),
                                         (12, -0.9, 5.0), (5, -0.1, -400.0), (20, 0.8, 60.0)])
def test_boundary_data_against_hypergeometric(n, a, kappa):
    y = integrate_angular(kappa, n, a)
    yB, GB = oracles.boundary_data(n, a, kappa)
    # oscillatory profiles may cross zero near the boundary; compare to the amplitude
    amp = np.abs(y.values).max()
    assert abs(y.boundary_value - float(yB)) < 1e-8 * amp
    assert abs(y.flux - float(GB)) < 1e-8 * np.abs(y.flux_variable).max()
    for th in (0.3, 0.9, 1.4):
        assert y.evaluate(theta=np.array([th]))[0][0] == pytest.approx(
            oracles.profile_value(n, a, kappa, th), rel=1e-8, abs=1e-10)


def test_fourth_order_under_refinement():
    yB = float(oracles.boundary_data(7, 0.4, -30.0)[0])
    errs = [abs(integrate_angular(-30.0, 7, 0.4, AngularGrid(steps=s)).boundary_value - yB)
            for s in (128, 256, 512)]
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_regular_at_pole():
    y = integrate_angular(3.0, 6, -0.5)
    assert y.derivative[0] == 0.0
    _, dy, _ = y.evaluate(theta=np.array([1e-6]))
    assert abs(dy[0]) < 1e-5


@given(st.floats(-5.0, 5.0).filter(lambda v: abs(v) > 1e-3), st.floats(-50.0, 20.0))
def test_linear_in_initial_value(y0, kappa):
    y1 = integrate_angular(kappa, 5, -0.4)
    y2 = integrate_angular(kappa, 5, -0.4, y0=y0)
    # the 2x2 matching solve near pi/2 amplifies rounding when kappa ~ 0
    assert y2.boundary_value == pytest.approx(y0 * y1.boundary_value, rel=1e-11, abs=1e-300)
    assert y2.flux == pytest.approx(y0 * y1.flux, rel=1e-11, abs=1e-11 * abs(y0))
    assert np.allclose(y2.values, y0 * y1.values, rtol=1e-13, atol=1e-14 * abs(y0) * np.abs(y1.values).max())


def test_overflow_reports_reach():
    with pytest.raises(IntegratorOverflow) as info:
        integrate_angular(1e9, 3, -0.5)
    assert 0 < info.value.details["reach"] < np.pi / 2


@pytest.mark.parametrize("n, a, q", CASES)
def test_singular_profile_flux_identity(n, a, q):
    p = ProblemParams(n, a, q)
    c = derive(p)
    V = singular_profile(p, c)
    m = WeightedMeasure.double_exponential(n, a)
    VBq = V.boundary_value**q
    assert V.flux == pytest.approx(VBq, rel=1e-12)
    assert c.gamma * weighted_integral(V.sample(m)[0], m) == pytest.approx(VBq, rel=1e-8)
    assert V.boundary_value == pytest.approx(oracles.singular_boundary_value(n, a, q), rel=1e-9)


@pytest.mark.parametrize("n, a, q", CASES)
def test_singular_profile_positive_increasing(n, a, q):
    V = singular_profile(ProblemParams(n, a, q))
    assert np.all(V.values > 0)
    assert np.all(V.derivative[1:-1] > 0)
    # boundary samples accumulate at s = 0 where V is flat to rounding
    assert np.all(np.diff(V.values) > -1e-14 * V.boundary_value)


@pytest.mark.parametrize("n, a, q", CASES)
def test_boundary_value_bound(n, a, q):
    p = ProblemParams(n, a, q)
    c = derive(p)
    V = singular_profile(p, c)
    I = WeightedMeasure.gauss_jacobi(n, a).total_mass
    assert V.boundary_value ** (q - 1) <= c.gamma * I


def test_singular_profile_needs_q_sing():
    with pytest.raises(PreconditionError):
        singular_profile(ProblemParams(3, -0.9, 10.0))  # q_sing = 20


def test_csv_round_trip(tmp_path):
    V = singular_profile(ProblemParams(4, -0.5, 3.0))
    path = tmp_path / "V.csv"
    V.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theta", "value", "derivative", "flux_variable"]
    back = np.array([[float(x) for x in r] for r in rows[1:]])
    assert np.array_equal(back[:, 0], V.theta_grid)
    assert np.array_equal(back[:, 1], V.values)


def test_evaluate_by_s_matches_theta():
    y = integrate_angular(4.0, 5, -0.6)
    s = np.array([1e-8, 1e-3, 0.2, 1.0])
    a = y.evaluate(s=s)[0]
    b = y.evaluate(theta=np.pi / 2 - s)[0]
    assert np.allclose(a, b, rtol=1e-9)
    assert y.evaluate(s=np.array([0.0]))[0][0] == pytest.approx(y.boundary_value, rel=1e-14)
