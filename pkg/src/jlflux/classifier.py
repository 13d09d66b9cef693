"""Joseph-Lundgren classification and expansion coefficients."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import asdict, dataclass

from .angular import AngularGrid, singular_profile
from .errors import ConsistencyError, PreconditionError
from .params import DerivedConstants, ProblemParams, check_n_a, derive
from .spectrum import compute_Ca, eigenpairs

DEFAULT_TOL = 1e-9


class JLClass(str, enum.Enum):
    SUPERCRITICAL = "Supercritical"
    CRITICAL = "Critical"
    SUBCRITICAL = "Subcritical"


@dataclass(frozen=True)
class JLReport:
    n: int
    a: float
    q: float
    C_a: float
    V_B: float
    J: float
    jl_class: JLClass
    lambda1: float
    lambda2: float
    discriminant1: float
    rho2: float
    rho1_plus: float | None = None
    rho1_minus: float | None = None
    rho1: float | None = None
    K: float | None = None
    sigma: float = math.nan
    gamma: float = math.nan
    tol: float = DEFAULT_TOL

    def as_dict(self) -> dict:
        d = asdict(self)
        d["jl_class"] = self.jl_class.value
        return d


@dataclass(frozen=True)
class GAnalysis:
    tau_range: tuple
    inf_value: float
    inf_location: float
    candidates: tuple

    def as_dict(self) -> dict:
        return asdict(self)


def modal_roots(lambda_i: float, constants: DerivedConstants):
    """Roots of ``rho^2 + sigma rho - (gamma + lambda_i) = 0``.

    Returns ``(rho_minus, rho_plus)``, real with ``rho_minus <= rho_plus`` when
    the discriminant is non-negative, else the complex pair
    ``-sigma/2 -+ iK``.
    """
    sigma, gamma = constants.sigma, constants.gamma
    disc = sigma * sigma + 4.0 * (gamma + lambda_i)
    if disc >= 0.0:
        r = math.sqrt(disc)
        return 0.5 * (-sigma - r), 0.5 * (-sigma + r)
    r = cmath.sqrt(disc)
    return 0.5 * (-sigma - r), 0.5 * (-sigma + r)


def classify_J(J: float, tol: float = DEFAULT_TOL) -> JLClass:
    if J > tol:
        return JLClass.SUPERCRITICAL
    if J < -tol:
        return JLClass.SUBCRITICAL
    return JLClass.CRITICAL


def jl_classify(
    params: ProblemParams,
    tol: float = DEFAULT_TOL,
    grid: AngularGrid | None = None,
    require_q_crit: bool = True,
) -> JLReport:
    constants = derive(params)
    n, a, q = int(params.n), float(params.a), float(params.q)
    if require_q_crit and not constants.q_at_least_crit:
        raise PreconditionError(
            f"jl_classify requires q >= q_crit = {constants.q_crit!r}, got q={q!r}"
        )
    V = singular_profile(params, constants, grid)
    C_a = compute_Ca(n, a, grid)
    V_B = V.boundary_value
    beta = q * V_B ** (q - 1.0)
    J = C_a - beta
    cls = classify_J(J, tol)
    e1, e2 = eigenpairs(beta, n, a, 2, grid)
    lam1, lam2 = e1.lam, e2.lam
    sigma, gamma = constants.sigma, constants.gamma
    disc1 = sigma * sigma + 4.0 * (gamma + lam1)
    # Discriminant and J vanish together; their ratio is bounded away from 0.
    disc_tol = 10.0 * tol * max(1.0, abs(disc1 / J) if J != 0 else 1.0) + 1e-9
    if (J > tol and disc1 < -disc_tol) or (J < -tol and disc1 > disc_tol):
        raise ConsistencyError(
            "sign of the first discriminant disagrees with sign of J",
            J=J,
            discriminant1=disc1,
        )
    disc2 = sigma * sigma + 4.0 * (gamma + lam2)
    if disc2 <= 0.0:
        raise ConsistencyError("second discriminant is not positive", discriminant2=disc2)
    rho2 = 0.5 * (sigma + math.sqrt(disc2))
    kw = {}
    if cls is JLClass.SUBCRITICAL:
        kw["K"] = 0.5 * math.sqrt(max(-disc1, 0.0))
    else:
        r = math.sqrt(max(disc1, 0.0))
        kw["rho1_plus"] = 0.5 * (-sigma + r)
        kw["rho1_minus"] = 0.5 * (-sigma - r)
        kw["rho1"] = abs(kw["rho1_plus"])
    return JLReport(
        n=n, a=a, q=q, C_a=C_a, V_B=V_B, J=J, jl_class=cls,
        lambda1=lam1, lambda2=lam2, discriminant1=disc1, rho2=rho2,
        sigma=sigma, gamma=gamma, tol=tol, **kw,
    )


def J_value(params: ProblemParams, grid: AngularGrid | None = None) -> float:
    """``C_a - q V_B^(q-1)`` without the spectral part of the report."""
    constants = derive(params)
    V = singular_profile(params, constants, grid)
    q = float(params.q)
    return compute_Ca(params.n, params.a, grid) - q * V.boundary_value ** (q - 1.0)


def critical_exponent(
    n: int, a: float, q_lo: float, q_hi: float, tol: float = 1e-12,
    grid: AngularGrid | None = None,
) -> float:
    """Bisection on ``J(q)`` between two exponents where it changes sign."""
    f = lambda q: J_value(ProblemParams(n, a, q), grid)
    f_lo, f_hi = f(q_lo), f(q_hi)
    if f_lo * f_hi > 0:
        raise PreconditionError("J does not change sign on the given q interval", J_lo=f_lo, J_hi=f_hi)
    while q_hi - q_lo > tol * max(1.0, q_hi):
        mid = 0.5 * (q_lo + q_hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            q_lo, f_lo = mid, f_mid
        else:
            q_hi = mid
    return 0.5 * (q_lo + q_hi)


def G_quadratic(tau: float, n: int, a: float) -> float:
    d = n + a - 2.0
    return (1.0 - a + tau) * (d - tau) - 0.25 * d * d


def g_analysis(n: int, a: float) -> GAnalysis:
    """Infimum of ``G(tau)`` over ``(0, (n+a-2)/2]``.

    G is a concave quadratic, so the infimum sits at an end of the interval;
    the vertex is evaluated as well for the record.
    """
    n, a = check_n_a(n, a)
    if not -1.0 < a < 0.0:
        raise PreconditionError(f"g_analysis requires a in (-1, 0), got a={a}")
    d = n + a - 2.0
    right = 0.5 * d
    vertex = 0.5 * (d - (1.0 - a))
    pts = [0.0, right]
    if 0.0 < vertex < right:
        pts.append(vertex)
    vals = [(G_quadratic(t, n, a), t) for t in pts]
    inf_value, loc = min(vals)
    return GAnalysis((0.0, right), inf_value, loc, tuple(vals))
