import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from jlflux import (
    BracketError,
    PreconditionError,
    ProblemParams,
    WeightedMeasure,
    compute_Ca,
    derive,
    eigenpairs,
    gram_matrix,
    rayleigh_quotient,
    singular_profile,
)
from jlflux.spectrum import FunctionProfile, flux_mismatch


@pytest.mark.parametrize("n, a", [(3, -0.5), (4, -0.9), (7, -0.1), (10, -0.5), (5, 0.3)])
def test_trace_hardy_against_hypergeometric(n, a):
    assert compute_Ca(n, a) == pytest.approx(oracles.trace_hardy(n, a), rel=1e-9)


@pytest.mark.parametrize("n, a, beta", [(3, -0.5, 1.0), (6, -0.3, 4.0), (9, -0.9, -2.0)])
def test_eigenvalues_against_hypergeometric(n, a, beta):
    for p in eigenpairs(beta, n, a, 5):
        ref = oracles.robin_eigenvalue(beta, n, a, p.lam)
        assert p.lam == pytest.approx(ref, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("n, a, beta", [(3, -0.5, 1.0), (6, -0.3, 4.0), (10, -0.9, 0.0)])
def test_orthonormal_and_ordered(n, a, beta):
    m = WeightedMeasure.double_exponential(n, a)
    ep = eigenpairs(beta, n, a, 8, measure=m)
    assert np.max(np.abs(gram_matrix(ep, m) - np.eye(8))) < 1e-7
    lams = [p.lam for p in ep]
    assert np.all(np.diff(lams) > 0)
    for i, p in enumerate(ep):
        assert p.zero_count == i
        assert p.norm_residual < 1e-10
        assert p.boundary_value > 0


def test_mismatch_vanishes_at_eigenvalues():
    for p in eigenpairs(2.0, 5, -0.5, 4):
        F, _ = flux_mismatch(p.lam, 2.0, 5, -0.5)
        assert abs(F) < 1e-7


@pytest.mark.parametrize("n", [3, 5, 8])
@pytest.mark.parametrize("a", [-0.9, -0.5, -0.1])
def test_lambda1_at_trace_hardy_constant(n, a):
    lam = eigenpairs(compute_Ca(n, a), n, a, 1)[0].lam
    assert lam == pytest.approx(-0.25 * (n + a - 2) ** 2, rel=1e-8)


@pytest.mark.parametrize("n, a, q", [(3, -0.5, 7.0), (5, -0.2, 3.0), (8, -0.9, 2.0), (12, -0.5, 4.0)])
def test_singular_profile_is_first_eigenfunction(n, a, q):
    p = ProblemParams(n, a, q)
    c = derive(p)
    V = singular_profile(p, c)
    m = WeightedMeasure.double_exponential(n, a)
    e1 = eigenpairs(V.boundary_value ** (q - 1), n, a, 1, measure=m)[0]
    assert e1.lam == pytest.approx(-c.gamma, rel=1e-8)
    v = V.sample(m)[0]
    v = v / np.sqrt(m.weights @ (v * v))
    e = e1.profile.sample(m)[0]
    assert np.sqrt(m.weights @ (v - e) ** 2) < 1e-6


def test_rayleigh_quotient_at_eigenfunctions():
    m = WeightedMeasure.double_exponential(5, -0.5)
    for p in eigenpairs(2.0, 5, -0.5, 3, measure=m):
        assert rayleigh_quotient(p.profile, 2.0, m) == pytest.approx(p.lam, abs=1e-6 * max(1, abs(p.lam)))


def test_rayleigh_quotient_bounds_lambda1():
    m = WeightedMeasure.double_exponential(5, -0.5)
    lam1 = eigenpairs(2.0, 5, -0.5, 1, measure=m)[0].lam
    for k in (0.0, 0.5, 2.0):
        f = FunctionProfile(lambda th, k=k: 1 + k * np.sin(th) ** 2,
                            lambda th, k=k: 2 * k * np.sin(th) * np.cos(th), 1 + k)
        assert rayleigh_quotient(f, 2.0, m) >= lam1


@settings(max_examples=10)
@given(st.floats(-3.0, 3.0), st.floats(0.05, 2.0))
def test_lambda1_decreases_in_beta(beta, step):
    l1 = eigenpairs(beta, 4, -0.5, 1)[0].lam
    l2 = eigenpairs(beta + step, 4, -0.5, 1)[0].lam
    assert l2 < l1


@pytest.mark.parametrize("n, a, beta", [(3, -0.5, 1.0), (8, -0.2, 6.0)])
def test_growth_band(n, a, beta):
    ep = eigenpairs(beta, n, a, 20)
    r = [ep[i - 1].lam / i**2 for i in range(4, 21)]
    assert max(r) / min(r) < 3


def test_ceiling_reports_found_count():
    with pytest.raises(BracketError) as info:
        eigenpairs(1.0, 3, -0.5, 50, lambda_ceiling=500.0)
    assert 0 < info.value.details["found"] < 50


def test_rejects_bad_requests():
    with pytest.raises(PreconditionError):
        eigenpairs(1.0, 3, -0.5, 0)
    with pytest.raises(PreconditionError):
        eigenpairs(float("nan"), 3, -0.5, 1)
