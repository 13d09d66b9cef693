"""Regular solutions of the weighted angular equation.

Solves ``(w y')' = kappa w y`` on ``(0, pi/2)`` with ``w = sin^(n-2) cos^a``,
``y(0) = y0`` and ``y'(0) = 0``, as the first-order system for ``(y, G)``
with ``G = w y'``.

Near theta = 0 a short power series in ``u = sin^2`` starts the solution.
Fourth-order Runge-Kutta then runs on a graded grid up to a matching
angle ``theta_m``.  On ``[theta_m, pi/2]`` the solution is represented
exactly by the two Frobenius solutions at the boundary singular point
(exponents 0 and (1-a)/2 in ``x = cos^2``).  This gives ``y_B`` and the
flux ``G(pi/2)`` without stepping into the ``cos^(-a)`` singularity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ConsistencyError, IntegratorOverflow, PreconditionError
from .params import DerivedConstants, ProblemParams, check_n_a, derive
from .quadrature import HALF_PI, WeightedMeasure

_SERIES_TOL = 1e-18


@dataclass(frozen=True)
class AngularGrid:
    """Step layout for the Runge-Kutta stage.

    ``steps`` steps are split between a geometric run from ``theta0`` to
    ``geometric_end`` and a uniform run up to the matching angle, which is
    where ``cos^2(theta) = min(cap_x, 4/|kappa|)``.
    """

    steps: int = 4096
    theta0: float = 1e-3
    geometric_fraction: float = 0.25
    geometric_end: float = 0.1
    cap_x: float = 0.25
    start_terms: int = 3
    boundary_samples: int = 48

    def __post_init__(self):
        if self.steps < 8:
            raise ValueError("steps must be >= 8")
        if not 0.0 < self.theta0 < self.geometric_end:
            raise ValueError("need 0 < theta0 < geometric_end")
        if not 0.0 < self.cap_x <= 0.5:
            raise ValueError("cap_x must lie in (0, 0.5]")


def _series_coefficients(r: float, den: float, S: float, kappa: float, x_max: float):
    """Coefficients of a Frobenius series at exponent ``r``.

    ``c_{k+1} = c_k ((k+r)^2 + (k+r) S + kappa/4) / ((k+1)(k+den))``, stopped
    once the terms at ``x_max`` are negligible.
    """
    coef = [1.0]
    total = 1.0
    k = 0
    while True:
        kr = k + r
        nxt = coef[-1] * (kr * kr + kr * S + 0.25 * kappa) / ((k + 1.0) * (k + den))
        coef.append(nxt)
        term = abs(nxt) * x_max ** (k + 1)
        total = max(total, term)
        k += 1
        if (term < _SERIES_TOL * total and k > 4) or nxt == 0.0 or k > 2000:
            break
    return np.array(coef)


def _polyval_with_derivative(coef: np.ndarray, x: np.ndarray):
    p = np.polynomial.polynomial
    return p.polyval(x, coef), p.polyval(x, p.polyder(coef))


@dataclass(frozen=True)
class _BoundaryCap:
    """``y = alpha phi1 + beta phi2`` near pi/2, ``x = cos^2 theta``."""

    n: int
    a: float
    c1: np.ndarray
    c2: np.ndarray
    alpha: float
    beta: float

    def basis(self, s: np.ndarray):
        """phi1, phi2 and their x-derivatives times ``x^((1+a)/2)``, at ``s = pi/2 - theta``."""
        x = np.sin(s) ** 2
        delta = 0.5 * (1.0 - self.a)
        p1, dp1 = _polyval_with_derivative(self.c1, x)
        p2s, dp2s = _polyval_with_derivative(self.c2, x)
        xd = x**delta
        phi2 = xd * p2s
        # x^((1+a)/2) * d/dx phi ; the phi2 part stays finite at x = 0
        wx = x ** (0.5 * (1.0 + self.a))
        d1 = wx * dp1
        d2 = delta * p2s + x * dp2s
        return p1, phi2, d1, d2, x

    def evaluate(self, s: np.ndarray):
        p1, phi2, d1, d2, x = self.basis(s)
        y = self.alpha * p1 + self.beta * phi2
        # G = -2 (1-x)^((n-1)/2) x^((1+a)/2) y_x
        G = -2.0 * (1.0 - x) ** (0.5 * (self.n - 1)) * (self.alpha * d1 + self.beta * d2)
        return y, G


def _weight(n: int, a: float, theta: np.ndarray, s: np.ndarray | None = None):
    if s is None:
        s = HALF_PI - theta
    return np.sin(theta) ** (n - 2) * np.sin(s) ** a


def _graded_grid(grid: AngularGrid, theta_m: float) -> np.ndarray:
    theta_g = min(grid.geometric_end, 0.5 * theta_m)
    n_geo = max(int(grid.steps * grid.geometric_fraction), 2)
    n_uni = max(grid.steps - n_geo, 2)
    g1 = np.geomspace(grid.theta0, theta_g, n_geo + 1)
    g2 = np.linspace(theta_g, theta_m, n_uni + 1)
    return np.concatenate([g1, g2[1:]])


def _start_values(n: int, a: float, kappa: float, theta: float, terms: int):
    S = 0.5 * (n + a - 2.0)
    c = 0.5 * (n - 1.0)
    u = math.sin(theta) ** 2
    y, dy, d, up = 0.0, 0.0, 1.0, 1.0
    for k in range(terms):
        y += d * up
        nxt = d * (k * k + k * S + 0.25 * kappa) / ((k + 1.0) * (k + c))
        dy += nxt * (k + 1.0) * up
        up *= u
        d = nxt
    y_theta = dy * 2.0 * math.sin(theta) * math.cos(theta)
    return y, y_theta


def _propagate(n: int, a: float, kappa: float, nodes: np.ndarray, y0: float, G0: float):
    """Classical RK4 for the linear system, via batched 2x2 step propagators."""
    h = np.diff(nodes)
    t0, t1 = nodes[:-1], nodes[1:]
    tm = t0 + 0.5 * h
    out = np.empty((nodes.size, 2))

    def mat(t):
        w = _weight(n, a, t)
        A = np.zeros((t.size, 2, 2))
        A[:, 0, 1] = 1.0 / w
        A[:, 1, 0] = kappa * w
        return A

    A1, A2, A3 = mat(t0), mat(tm), mat(t1)
    eye = np.eye(2)
    hh = h[:, None, None]
    K1 = A1
    K2 = A2 @ (eye + 0.5 * hh * K1)
    K3 = A2 @ (eye + 0.5 * hh * K2)
    K4 = A3 @ (eye + hh * K3)
    P = eye + hh / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
    p00, p01, p10, p11 = (P[:, i, j].tolist() for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
    y, G = float(y0), float(G0)  # python floats overflow to inf quietly
    ys, Gs = [y], [G]
    for j in range(h.size):
        y, G = p00[j] * y + p01[j] * G, p10[j] * y + p11[j] * G
        ys.append(y)
        Gs.append(G)
    out[:, 0] = ys
    out[:, 1] = Gs
    if not np.all(np.isfinite(out)):
        k = int(np.argmax(~np.isfinite(out).all(axis=1)))
        raise IntegratorOverflow(
            f"angular integration overflowed at theta={float(nodes[k])!r} (kappa={kappa!r})",
            reach=float(nodes[max(k - 1, 0)]),
            kappa=float(kappa),
        )
    return out[:, 0], out[:, 1]


@dataclass(frozen=True, eq=False)
class AngularProfile:
    """A solution of the angular equation sampled on a graded grid.

    ``derivative`` is ``y_theta``; ``flux_variable`` is ``G = w y_theta``;
    ``flux`` is ``G(pi/2)``, the limit of ``cos^a(theta) y_theta``.
    """

    n: int
    a: float
    kappa: float
    theta_grid: np.ndarray
    s_grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    flux_variable: np.ndarray
    boundary_value: float
    flux: float
    scale: float = 1.0
    _rk_nodes: np.ndarray = field(default=None, repr=False)
    _rk_values: np.ndarray = field(default=None, repr=False)
    _rk_flux: np.ndarray = field(default=None, repr=False)
    _cap: _BoundaryCap = field(default=None, repr=False)
    _start_terms: int = field(default=3, repr=False)

    # -- evaluation -------------------------------------------------------
    @cached_property
    def _spline(self):
        w = _weight(self.n, self.a, self._rk_nodes)
        return CubicHermiteSpline(self._rk_nodes, self._rk_values, self._rk_flux / w)

    def evaluate(self, theta=None, s=None):
        """Value, theta-derivative and flux variable at arbitrary angles.

        Pass ``s = pi/2 - theta`` instead of ``theta`` for points close to
        the boundary.
        """
        if s is None:
            theta = np.atleast_1d(np.asarray(theta, dtype=float))
            s = HALF_PI - theta
        else:
            s = np.atleast_1d(np.asarray(s, dtype=float))
            theta = HALF_PI - s
        n, a, kappa = self.n, self.a, self.kappa
        y = np.empty_like(theta)
        G = np.empty_like(theta)
        th0, thm = self._rk_nodes[0], self._rk_nodes[-1]
        low = theta < th0
        cap = theta > thm
        mid = ~(low | cap)
        if low.any():
            S = 0.5 * (n + a - 2.0)
            c = 0.5 * (n - 1.0)
            u = np.sin(theta[low]) ** 2
            yy = np.zeros_like(u)
            dy = np.zeros_like(u)
            d, up = 1.0, np.ones_like(u)
            for k in range(self._start_terms + 2):
                yy += d * up
                nxt = d * (k * k + k * S + 0.25 * kappa) / ((k + 1.0) * (k + c))
                dy += nxt * (k + 1.0) * up
                up = up * u
                d = nxt
            y0 = self._rk_values[0] / _start_values(n, a, kappa, th0, self._start_terms)[0]
            y[low] = y0 * yy
            tl = theta[low]
            G[low] = y0 * dy * 2.0 * np.sin(tl) * np.cos(tl) * _weight(n, a, tl)
        if mid.any():
            sp = self._spline
            y[mid] = sp(theta[mid])
            G[mid] = sp(theta[mid], 1) * _weight(n, a, theta[mid], s[mid])
        if cap.any():
            y[cap], G[cap] = self._cap.evaluate(s[cap])
        y *= self.scale
        G *= self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            w = _weight(n, a, theta, s)
            dy_theta = np.where(w > 0, G / w, 0.0)
        # at theta = pi/2 with a < 0 the weight is infinite and y_theta = 0
        dy_theta = np.where(np.isfinite(dy_theta), dy_theta, 0.0)
        return y, dy_theta, G

    def sample(self, measure: WeightedMeasure):
        """Values and theta-derivatives at the nodes of ``measure``."""
        y, dy, _ = self.evaluate(s=measure.s)
        return y, dy

    def __call__(self, theta):
        return self.evaluate(theta)[0]

    # -- transforms -------------------------------------------------------
    def scaled(self, c: float) -> "AngularProfile":
        return replace(
            self,
            values=c * self.values,
            derivative=c * self.derivative,
            flux_variable=c * self.flux_variable,
            boundary_value=c * self.boundary_value,
            flux=c * self.flux,
            scale=c * self.scale,
        )

    def zero_count(self) -> int:
        v = self.values[np.abs(self.values) > 0]
        return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))

    def to_rows(self):
        return zip(self.theta_grid, self.values, self.derivative, self.flux_variable)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["theta", "value", "derivative", "flux_variable"])
            for row in self.to_rows():
                wr.writerow([f"{v:.17g}" for v in row])


def matching_x(kappa: float, grid: AngularGrid) -> float:
    if abs(kappa) > 4.0 / grid.cap_x:
        return 4.0 / abs(kappa)
    return grid.cap_x


def integrate_angular(
    kappa: float, n: int, a: float, grid: AngularGrid | None = None, y0: float = 1.0
) -> AngularProfile:
    """Regular solution of ``(w y')' = kappa w y`` with ``y(0) = y0``."""
    n, a = check_n_a(n, a)
    grid = grid or AngularGrid()
    kappa = float(kappa)
    x_m = matching_x(kappa, grid)
    s_m = math.asin(math.sqrt(x_m))
    theta_m = HALF_PI - s_m
    nodes = _graded_grid(grid, theta_m)

    ys, dys = _start_values(n, a, kappa, nodes[0], grid.start_terms)
    w0 = _weight(n, a, np.array([nodes[0]]))[0]
    y, G = _propagate(n, a, kappa, nodes, y0 * ys, y0 * dys * w0)

    S = 0.5 * (n + a - 2.0)
    delta = 0.5 * (1.0 - a)
    c1 = _series_coefficients(0.0, 0.5 * (1.0 + a), S, kappa, x_m)
    c2 = _series_coefficients(delta, 1.0 + delta, S, kappa, x_m)
    probe = _BoundaryCap(n, a, c1, c2, 1.0, 0.0)
    p1, phi2, d1, d2, _ = probe.basis(np.array([s_m]))
    fac = -2.0 * (1.0 - x_m) ** (0.5 * (n - 1))
    M = np.array([[p1[0], phi2[0]], [fac * d1[0], fac * d2[0]]])
    alpha, beta = np.linalg.solve(M, [y[-1], G[-1]])
    cap = _BoundaryCap(n, a, c1, c2, float(alpha), float(beta))

    s_cap = np.concatenate([np.geomspace(s_m, 1e-12, grid.boundary_samples)[1:], [0.0]])
    y_cap, G_cap = cap.evaluate(s_cap)
    theta = np.concatenate([[0.0], nodes, HALF_PI - s_cap])
    s_all = np.concatenate([[HALF_PI], HALF_PI - nodes, s_cap])
    vals = np.concatenate([[y0], y, y_cap])
    Gall = np.concatenate([[0.0], G, G_cap])
    with np.errstate(divide="ignore", invalid="ignore"):
        w = _weight(n, a, theta, s_all)
        deriv = np.where((w > 0) & np.isfinite(w), Gall / w, 0.0)
    y_B = float(alpha)
    flux = float(-(1.0 - a) * beta)
    if not (math.isfinite(y_B) and math.isfinite(flux)):
        raise IntegratorOverflow("non-finite boundary data", reach=float(theta_m), kappa=kappa)
    return AngularProfile(
        n=n,
        a=a,
        kappa=kappa,
        theta_grid=theta,
        s_grid=s_all,
        values=vals,
        derivative=deriv,
        flux_variable=Gall,
        boundary_value=y_B,
        flux=flux,
        _rk_nodes=nodes,
        _rk_values=y,
        _rk_flux=G,
        _cap=cap,
        _start_terms=grid.start_terms,
    )


def singular_profile(
    params: ProblemParams,
    constants: DerivedConstants | None = None,
    grid: AngularGrid | None = None,
) -> AngularProfile:
    """The positive profile V with ``flux(V) = V_B^q``.

    One linear integration at ``kappa = gamma`` followed by the rescale
    ``c = (flux / y_B^q)^(1/(q-1))``.
    """
    constants = constants or derive(params)
    if params.q < constants.q_sing:
        raise PreconditionError(
            f"singular_profile requires q >= q_sing = {constants.q_sing!r}, got q={params.q!r}"
        )
    yhat = integrate_angular(constants.gamma, params.n, params.a, grid)
    if yhat.flux <= 0.0 or yhat.boundary_value <= 0.0:
        raise ConsistencyError(
            "unnormalized profile has non-positive flux or boundary value",
            flux=yhat.flux,
            y_B=yhat.boundary_value,
        )
    q = float(params.q)
    log_c = (math.log(yhat.flux) - q * math.log(yhat.boundary_value)) / (q - 1.0)
    return yhat.scaled(math.exp(log_c))
