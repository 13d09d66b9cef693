"""Named invariant checks, grouped into suites by module.

Each check returns a :class:`Check` with the measured value and the
threshold it was compared against, so a failing run is self-explanatory.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.special import beta as beta_fn

from .angular import integrate_angular, singular_profile
from .classifier import JLClass, g_analysis, jl_classify, modal_roots
from .cylinder import (
    CylinderGrid,
    CylinderSetup,
    energy_trace,
    scale_physical,
    scaling_shift,
    solve_linearized,
    solve_nonlinear,
    to_cylinder,
    to_physical,
)
from .errors import JLFluxError
from .modal import ModalTrajectory, duhamel_solution, fit_decay, nonlinearity_g, ode_direct
from .params import ProblemParams, derive
from .quadrature import WeightedMeasure, lemma1_gap, weighted_integral
from .spectrum import compute_Ca, eigenpairs, gram_matrix, rayleigh_quotient

N_GRID = range(3, 11)
A_GRID = (-0.9, -0.5, -0.1)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    threshold: float
    error: str | None = None

    def as_dict(self) -> dict:
        return asdict(self)


SUITES: dict[str, list[tuple[str, Callable[[], tuple[float, float, bool]]]]] = {}


def _check(suite: str, name: str):
    def deco(fn):
        SUITES.setdefault(suite, []).append((name, fn))
        return fn

    return deco


def _max_rel(pairs) -> float:
    return max(abs(x - y) / max(abs(y), 1e-300) for x, y in pairs)


# -- params ----------------------------------------------------------------------
@_check("params", "sigma^2 + 4 gamma = (n+a-2)^2")
def _():
    errs = []
    for n in N_GRID:
        for a in A_GRID + (0.5,):
            for q in (1.5, 3.0, 7.0, 40.0):
                c = derive(ProblemParams(n, a, q))
                errs.append((c.sigma**2 + 4 * c.gamma, (n + a - 2) ** 2))
    v = _max_rel(errs)
    return v, 1e-12, v < 1e-12


@_check("params", "q = q_crit gives sigma = 0 and gamma = -h_na")
def _():
    worst = 0.0
    for n in N_GRID:
        for a in A_GRID:
            d = n + a - 2
            c = derive(ProblemParams(n, a, (n - a) / d))
            worst = max(worst, abs(c.sigma) / d, abs(c.gamma + c.h_na) / abs(c.h_na))
    return worst, 1e-12, worst < 1e-12


@_check("params", "rejected inputs name distinct rules")
def _():
    rules = set()
    for bad in [(2, -0.5, 3.0), (3.5, -0.5, 3.0), (3, 1.0, 3.0), (3, 0.0, 3.0), (3, -0.5, 1.0)]:
        try:
            derive(ProblemParams(*bad))
        except JLFluxError as exc:
            rules.add(exc.details.get("rule"))
    return float(len(rules)), 5.0, len(rules) == 5


# -- quadrature ------------------------------------------------------------------
@_check("quadrature", "total mass matches the Beta identity")
def _():
    errs = [(WeightedMeasure.gauss_jacobi(n, a).total_mass, 0.5 * beta_fn((n - 1) / 2, (a + 1) / 2))
            for n in N_GRID for a in A_GRID]
    v = _max_rel(errs)
    return v, 1e-10, v < 1e-10


@_check("quadrature", "sin^2 absorbs into the weight")
def _():
    errs = []
    for n in N_GRID:
        for a in A_GRID:
            m = WeightedMeasure.gauss_jacobi(n, a)
            errs.append((weighted_integral(lambda th: np.sin(th) ** 2, m),
                         0.5 * beta_fn((n + 1) / 2, (a + 1) / 2)))
    v = _max_rel(errs)
    return v, 1e-10, v < 1e-10


@_check("quadrature", "lemma1_gap is negative")
def _():
    v = max(lemma1_gap(n, a) for n in N_GRID for a in A_GRID)
    return v, 0.0, v < 0.0


@_check("quadrature", "doubling the order changes smooth integrals < 1e-12")
def _():
    # smooth in u = sin^2(theta), the variable the rule is built in
    f = lambda th: np.exp(np.sin(th) ** 2) * np.cos(3 * th) ** 2
    errs = []
    for n in (3, 6, 10):
        for a in A_GRID:
            errs.append((weighted_integral(f, WeightedMeasure.gauss_jacobi(n, a, 128)),
                         weighted_integral(f, WeightedMeasure.gauss_jacobi(n, a, 64))))
    v = _max_rel(errs)
    return v, 1e-12, v < 1e-12


# -- angular profile -------------------------------------------------------------
_PROFILE_CASES = [(3, -0.5, 7.0), (5, -0.2, 3.0), (8, -0.9, 2.0), (12, -0.5, 4.0), (4, 0.5, 5.0)]


@_check("angular_profile", "flux(V) = V_B^q = gamma int V dmu")
def _():
    worst = 0.0
    for n, a, q in _PROFILE_CASES:
        p = ProblemParams(n, a, q)
        c = derive(p)
        V = singular_profile(p, c)
        m = WeightedMeasure.double_exponential(n, a)
        vals = [V.flux, V.boundary_value**q, c.gamma * weighted_integral(V.sample(m)[0], m)]
        worst = max(worst, max(abs(x - vals[1]) / vals[1] for x in vals))
    return worst, 1e-8, worst < 1e-8


@_check("angular_profile", "V is positive and increasing")
def _():
    worst = math.inf
    for n, a, q in _PROFILE_CASES:
        V = singular_profile(ProblemParams(n, a, q))
        worst = min(worst, float(np.min(V.values)), float(np.min(V.derivative[1:-1])))
    return worst, 0.0, worst > 0.0


@_check("angular_profile", "V_B^(q-1) <= gamma I_{n,a}")
def _():
    worst = -math.inf
    for n, a, q in _PROFILE_CASES:
        p = ProblemParams(n, a, q)
        c = derive(p)
        V = singular_profile(p, c)
        I = WeightedMeasure.gauss_jacobi(n, a).total_mass
        worst = max(worst, V.boundary_value ** (q - 1) / (c.gamma * I) - 1.0)
    return worst, 0.0, worst <= 0.0


@_check("angular_profile", "linear in the initial value")
def _():
    y1 = integrate_angular(2.5, 6, -0.4)
    y2 = integrate_angular(2.5, 6, -0.4, y0=2.0)
    v = max(abs(y2.boundary_value - 2 * y1.boundary_value) / y1.boundary_value,
            abs(y2.flux - 2 * y1.flux) / y1.flux,
            float(np.max(np.abs(y2.values - 2 * y1.values))))
    return v, 1e-14, v < 1e-14


# -- spectrum --------------------------------------------------------------------
@_check("spectrum", "orthonormality of the first 8 eigenfunctions")
def _():
    worst = 0.0
    for n, a, b in [(3, -0.5, 1.0), (6, -0.3, 4.0)]:
        m = WeightedMeasure.double_exponential(n, a)
        G = gram_matrix(eigenpairs(b, n, a, 8, measure=m), m)
        worst = max(worst, float(np.max(np.abs(G - np.eye(8)))))
    return worst, 1e-7, worst < 1e-7


@_check("spectrum", "lambda_1 = h_na at beta = C_a")
def _():
    errs = []
    for n in (3, 5, 8):
        for a in A_GRID:
            lam = eigenpairs(compute_Ca(n, a), n, a, 1)[0].lam
            errs.append((lam, -0.25 * (n + a - 2) ** 2))
    v = _max_rel(errs)
    return v, 1e-8, v < 1e-8


@_check("spectrum", "lambda_1 = -gamma at beta = V_B^(q-1)")
def _():
    errs = []
    for n, a, q in _PROFILE_CASES[:4]:
        p = ProblemParams(n, a, q)
        c = derive(p)
        V = singular_profile(p, c)
        errs.append((eigenpairs(V.boundary_value ** (q - 1), n, a, 1)[0].lam, -c.gamma))
    v = _max_rel(errs)
    return v, 1e-8, v < 1e-8


@_check("spectrum", "C_a e_B = (n+a-2)^2/4 int e dmu")
def _():
    worst = 0.0
    for n in (3, 5, 8):
        for a in A_GRID:
            kappa = 0.25 * (n + a - 2) ** 2
            y = integrate_angular(kappa, n, a)
            m = WeightedMeasure.double_exponential(n, a)
            Ca = compute_Ca(n, a)
            rhs = kappa * weighted_integral(y.sample(m)[0], m)
            worst = max(worst, abs(Ca * y.boundary_value - rhs) / rhs)
    return worst, 1e-8, worst < 1e-8


@_check("spectrum", "eigenvalue ratios lambda_i/i^2 within a factor 3 (i = 4..20)")
def _():
    worst = 0.0
    for n, a, b in [(3, -0.5, 1.0), (8, -0.2, 6.0)]:
        ep = eigenpairs(b, n, a, 20)
        r = [ep[i - 1].lam / i**2 for i in range(4, 21)]
        worst = max(worst, max(r) / min(r))
    return worst, 3.0, worst < 3.0


@_check("spectrum", "lambda_1 decreases in beta")
def _():
    lams = [eigenpairs(b, 5, -0.5, 1)[0].lam for b in np.linspace(0.0, 6.0, 13)]
    v = float(np.max(np.diff(lams)))
    return v, 0.0, v < 0.0


@_check("spectrum", "Rayleigh quotient at e_1 equals lambda_1")
def _():
    m = WeightedMeasure.double_exponential(5, -0.5)
    e1 = eigenpairs(2.0, 5, -0.5, 1, measure=m)[0]
    v = abs(rayleigh_quotient(e1.profile, 2.0, m) - e1.lam)
    return v, 1e-6, v < 1e-6


# -- classifier ------------------------------------------------------------------
@_check("classifier", "sign of the first discriminant matches sign of J")
def _():
    bad = 0
    for n, a, q in [(3, -0.5, 7), (6, -0.5, 5), (11, -0.5, 2.0), (12, -0.5, 3.9473684210526314),
                    (30, -0.5, 20), (15, -0.2, 1.5)]:
        p = ProblemParams(n, a, q)
        if q < derive(p).q_crit:
            continue
        r = jl_classify(p)
        bad += int(np.sign(r.discriminant1) != np.sign(r.J))
    return float(bad), 0.0, bad == 0


@_check("classifier", "low dimensions are subcritical on [q_crit, 5 q_crit]")
def _():
    bad = 0
    for n in (3, 4, 5, 6):
        for a in A_GRID:
            qc = derive(ProblemParams(n, a, 2.0)).q_crit
            for f in (1.0, 1.7, 3.0, 5.0):
                r = jl_classify(ProblemParams(n, a, f * qc))
                bad += int(r.jl_class is not JLClass.SUBCRITICAL)
    return float(bad), 0.0, bad == 0


@_check("classifier", "G(tau) infimum closed forms")
def _():
    errs = []
    for a in (-0.8, -0.4, -0.1):
        errs.append((g_analysis(3, a).inf_value, 0.5 * (1 - a * a)))
        errs.append((g_analysis(4, a).inf_value, 0.5 * (2 + a) * (1 - a)))
    for a in (-0.2, -0.1):  # here the infimum sits at tau = 0
        errs.append((g_analysis(5, a).inf_value, 0.25 * (3 + a) * (1 - 5 * a)))
        errs.append((g_analysis(6, a).inf_value, 0.25 * (4 + a) * (-5 * a)))
    v = _max_rel(errs)
    return v, 1e-14, v < 1e-14


@_check("classifier", "roots of lambda = -gamma are {0, -sigma}")
def _():
    c = derive(ProblemParams(7, -0.3, 3.0))
    rm, rp = modal_roots(-c.gamma, c)
    v = max(abs(rp), abs(rm + c.sigma))
    return v, 1e-14, v < 1e-14


# -- modal -----------------------------------------------------------------------
@_check("modal", "Duhamel forms agree with direct integration")
def _():
    rng = np.random.default_rng(7)
    worst = 0.0
    for cls_, sigma_ in [(JLClass.SUPERCRITICAL, 3.0), (JLClass.CRITICAL, 2.0), (JLClass.SUBCRITICAL, 1.0)]:
        gamma_ = 1.5
        c = _FakeConstants(sigma_, gamma_)
        d = {"Supercritical": 0.5, "Critical": 0.0, "Subcritical": -0.8}[cls_.value]
        lam1 = (d - sigma_**2) / 4 - gamma_
        for _k in range(3):
            mu, z0, z1 = rng.uniform(0.3, 2.0), rng.normal(), rng.normal()
            f = lambda t, mu=mu: np.exp(-mu * t)
            a = duhamel_solution(1, lam1, z0, z1, f, 20.0, c, cls_).values
            b = ode_direct(1, lam1, z0, z1, f, 20.0, c).values
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst, 1e-7, worst < 1e-7


@_check("modal", "-g(w) > 0 for w != 0")
def _():
    w = np.concatenate([np.linspace(-2.0, -1e-6, 50), np.linspace(1e-6, 0.9, 50)])
    v = float(np.min(-nonlinearity_g(w, 1.0, 3.5)))
    return v, 0.0, v > 0.0


@_check("modal", "exact supercritical model is recovered by the fit")
def _():
    rep = _FakeReport(JLClass.SUPERCRITICAL, 3.0)
    t = np.linspace(0, 10, 501)
    fit = fit_decay(ModalTrajectory(t, 3 * np.exp(-0.7 * t), 1), rep)
    v = max(abs(fit.rate + 0.7), abs(fit.coefficients[0] - 3))
    return v, 1e-6, v < 1e-6


@dataclass(frozen=True)
class _FakeConstants:
    sigma: float
    gamma: float


@dataclass(frozen=True)
class _FakeReport:
    jl_class: JLClass
    sigma: float
    K: float | None = None


# -- cylinder --------------------------------------------------------------------
_SUPER = ProblemParams(12, -0.5, 3.9473684210526314)


@_check("cylinder", "stationary data stay stationary")
def _():
    g = CylinderGrid(right_bc="modal")
    f = solve_nonlinear(_SUPER, None, None, 1.0, 6.0, g)
    v = float(np.max(np.abs(f.values - f.V_h)))
    return v, 1e-10, v < 1e-10


@_check("cylinder", "ordered data stay between 0 and V")
def _():
    g = CylinderGrid(right_bc="modal")
    f = solve_nonlinear(_SUPER, None, None, 0.99, 6.0, g)
    v = float(np.max(f.values / f.V_h[None, :])) - 1.0
    ok = v <= 1e-8 and float(np.min(f.values)) > 0
    return v, 1e-8, ok


@_check("cylinder", "single discrete mode does not leak")
def _():
    g = CylinderGrid(right_bc="modal")
    st = CylinderSetup.build(_SUPER, None, g)
    f = solve_linearized(_SUPER, None, None, 1e-3 * st.modes.vectors[:, 1], 6.0, g, setup=st)
    Z = st.modes.project(f.values)
    v = float(np.max(np.abs(np.delete(Z, 1, axis=1)))) / 1e-3
    return v, 1e-6, v < 1e-6


@_check("cylinder", "energy identity residual is second order")
def _():
    res = []
    for nt, nth in [(200, 32), (400, 64)]:
        f = solve_nonlinear(_SUPER, None, None, 0.99, 6.0, CylinderGrid(nt=nt, ntheta=nth, right_bc="modal"))
        res.append(energy_trace(f).identity_residual_after(0.6))
    v = res[0] / res[1]
    return v, 3.0, v > 3.0


@_check("cylinder", "scaling map is a t-translation")
def _():
    f = solve_nonlinear(_SUPER, None, None, 0.99, 6.0, CylinderGrid(right_bc="modal"))
    b = 1.7
    t, v = to_cylinder(scale_physical(to_physical(f), b, _SUPER))
    err = max(float(np.max(np.abs(t - (f.t_grid - scaling_shift(b, _SUPER))))),
              float(np.max(np.abs(v - f.v))))
    return err, 1e-12, err < 1e-12


def run_suite(names=None) -> list[Check]:
    """Run the named suites (all when ``names`` is None) in a fixed order."""
    names = list(SUITES) if names in (None, "all", ["all"]) else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}; known: {', '.join(SUITES)}")
    out = []
    for suite in names:
        for name, fn in SUITES[suite]:
            try:
                value, thr, ok = fn()
                out.append(Check(suite, name, bool(ok), float(value), float(thr)))
            except JLFluxError as exc:
                out.append(Check(suite, name, False, math.nan, math.nan, f"{exc.code}: {exc}"))
    return out
