import math

import numpy as np
import pytest

from jlflux import (
    JLClass,
    PreconditionError,
    ProblemParams,
    critical_exponent,
    derive,
    g_analysis,
    jl_classify,
    modal_roots,
)
from jlflux.classifier import G_quadratic, J_value, classify_J

SUPER = ProblemParams(12, -0.5, 3.9473684210526314)
CRIT_Q = 7.6404102183878422


def test_classify_J_tolerance():
    assert classify_J(1e-3) is JLClass.SUPERCRITICAL
    assert classify_J(-1e-3) is JLClass.SUBCRITICAL
    assert classify_J(1e-12) is JLClass.CRITICAL


def test_supercritical_instance():
    r = jl_classify(SUPER)
    assert r.jl_class is JLClass.SUPERCRITICAL
    assert r.rho1_plus == pytest.approx(-3.6312, abs=1e-3)
    assert r.rho1_minus < r.rho1_plus < 0
    assert r.K is None


def test_subcritical_instance():
    r = jl_classify(ProblemParams(3, -0.5, 10.0))
    assert r.jl_class is JLClass.SUBCRITICAL
    assert r.K == pytest.approx(0.5 * math.sqrt(-r.discriminant1), rel=1e-14)
    assert r.K == pytest.approx(0.73236, abs=1e-4)


def test_critical_exponent_n11():
    q = critical_exponent(11, -0.5, 5.0, 20.0, tol=1e-13)
    assert q == pytest.approx(CRIT_Q, rel=1e-9)  # J itself is accurate to ~1e-10
    r = jl_classify(ProblemParams(11, -0.5, CRIT_Q), tol=1e-8)
    assert r.jl_class is JLClass.CRITICAL
    assert abs(r.discriminant1) < 1e-6


SWEEP = [(3, -0.5, 7.0), (6, -0.5, 5.0), (11, -0.5, 2.0), (11, -0.5, 12.0), (12, -0.5, 3.9473684210526314),
         (30, -0.5, 20.0), (15, -0.2, 1.5), (20, -0.9, 1.3)]


@pytest.mark.parametrize("n, a, q", SWEEP)
def test_spectral_signs(n, a, q):
    p = ProblemParams(n, a, q)
    if q < derive(p).q_crit:
        pytest.skip("below q_crit")
    r = jl_classify(p)
    assert r.lambda1 < -r.gamma
    assert r.lambda2 > 0
    assert np.sign(r.discriminant1) == np.sign(r.J)
    assert r.rho2 > 0


def test_sweep_straddles_trichotomy():
    classes = {jl_classify(ProblemParams(n, a, q)).jl_class for n, a, q in SWEEP
               if q >= derive(ProblemParams(n, a, q)).q_crit}
    assert {JLClass.SUPERCRITICAL, JLClass.SUBCRITICAL} <= classes


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("a", [-0.9, -0.5, -0.1])
def test_low_dimensions_subcritical(n, a):
    qc = derive(ProblemParams(n, a, 2.0)).q_crit
    for f in (1.0, 2.2, 5.0):
        assert jl_classify(ProblemParams(n, a, f * qc)).jl_class is JLClass.SUBCRITICAL


def test_below_q_crit_is_rejected():
    with pytest.raises(PreconditionError):
        jl_classify(ProblemParams(12, -0.5, 1.2))


def test_J_value_matches_report():
    r = jl_classify(SUPER)
    assert J_value(SUPER) == pytest.approx(r.J, rel=1e-12)


def test_modal_roots():
    c = derive(ProblemParams(7, -0.3, 3.0))
    rm, rp = modal_roots(-c.gamma, c)
    assert abs(rp) < 1e-14 and rm == pytest.approx(-c.sigma, rel=1e-14)
    rm, rp = modal_roots(-c.gamma - c.sigma**2, c)
    assert isinstance(rp, complex) and rp.real == pytest.approx(-c.sigma / 2)
    for r in (rm, rp):
        assert abs(r * r + c.sigma * r - (c.gamma - c.gamma - c.sigma**2)) < 1e-12


@pytest.mark.parametrize("a", [-0.8, -0.4, -0.1])
def test_g_closed_forms(a):
    assert g_analysis(3, a).inf_value == pytest.approx(0.5 * (1 - a * a), rel=1e-14)
    assert g_analysis(4, a).inf_value == pytest.approx(0.5 * (2 + a) * (1 - a), rel=1e-14)


def test_g_is_concave_with_inf_at_an_end():
    for n in (3, 5, 9):
        for a in (-0.7, -0.2):
            g = g_analysis(n, a)
            lo, hi = g.tau_range
            taus = np.linspace(lo, hi, 201)
            assert g.inf_value == pytest.approx(min(G_quadratic(t, n, a) for t in taus), abs=1e-12)
            assert g.inf_location in (lo, hi)


def test_g_analysis_needs_negative_a():
    with pytest.raises(PreconditionError):
        g_analysis(4, 0.3)
