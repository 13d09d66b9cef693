"""Modal equations ``z'' + sigma z' - (gamma + lambda_i) z = f_i``.

Closed-form variation-of-parameters solutions, a brute-force RK4 oracle,
the boundary nonlinearity, the averaged equation and decay-rate fitting.

All convolution integrals ``int e^{rho (t - s)} f(s) ds`` are accumulated by
one-step recursions on the time grid, which stay bounded for any sign of
``rho``, with Gauss-Legendre quadrature on each step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares

from .classifier import JLClass, JLReport, modal_roots
from .errors import ConvergenceError, FitError, NumericalError, PreconditionError
from .params import DerivedConstants

Forcing = Union[None, Callable[[np.ndarray], np.ndarray], np.ndarray]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True, eq=False)
class ModalTrajectory:
    time_grid: np.ndarray
    values: np.ndarray
    index: int
    forcing: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.time_grid)
        if t.size > 2:
            dt = np.diff(t)
            if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1.0):
                raise PreconditionError("time grid must be uniform")
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("non-finite modal trajectory values")

    def to_rows(self, prediction=None):
        pred = np.full_like(self.values, np.nan) if prediction is None else prediction
        return zip(self.time_grid, self.values, pred, self.values - pred)


class FitModel(str, enum.Enum):
    PURE_EXPONENTIAL = "PureExponential"
    LINEAR_TIMES_EXPONENTIAL = "LinearTimesExponential"
    OSCILLATORY_EXPONENTIAL = "OscillatoryExponential"


@dataclass(frozen=True)
class DecayFit:
    model: FitModel
    rate: float
    coefficients: tuple
    residual: float
    window: tuple
    frequency: float | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d

    def predict(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, float)
        if self.model is FitModel.PURE_EXPONENTIAL:
            return self.coefficients[0] * np.exp(self.rate * t)
        if self.model is FitModel.LINEAR_TIMES_EXPONENTIAL:
            x1, x2 = self.coefficients
            return (x1 * t + x2) * np.exp(self.rate * t)
        x1, x2 = self.coefficients
        K = self.frequency
        return (x1 * np.sin(K * t) + x2 * np.cos(K * t)) * np.exp(self.rate * t)


# -- nonlinearity -------------------------------------------------------------
def nonlinearity_g(w, V_B: float, q: float):
    """``V_B^q - (V_B - w)^q - q V_B^(q-1) w``; minus the convex remainder."""
    w = np.asarray(w, dtype=float)
    if np.any(V_B - w <= 0.0):
        raise PreconditionError("nonlinearity_g requires V_B - w > 0")
    # expm1/log1p keep the remainder accurate when w is tiny
    x = -w / V_B
    rem = np.expm1(q * np.log1p(x)) - q * x
    out = -(V_B**q) * rem
    return out if out.ndim else float(out)


# -- helpers ------------------------------------------------------------------
def _time_grid(horizon: float, num: int) -> np.ndarray:
    if horizon <= 0 or num < 3:
        raise PreconditionError("need horizon > 0 and at least 3 samples")
    return np.linspace(0.0, horizon, num)


def _as_callable(forcing: Forcing, t: np.ndarray):
    if forcing is None:
        return None
    if callable(forcing):
        return forcing
    f = np.asarray(forcing, dtype=float)
    if f.shape != t.shape:
        raise PreconditionError("forcing samples must match the time grid")
    return CubicSpline(t, f)


def _forward_conv(rho: complex, f, t: np.ndarray, weight_s: bool = False) -> np.ndarray:
    """``I(t_k) = int_0^{t_k} e^{rho (t_k - s)} f(s) [s] ds``."""
    out = np.zeros(t.size, dtype=complex)
    h = t[1] - t[0]
    tau = 0.5 * h * (_GL_X + 1.0)
    ker = np.exp(rho * (h - tau)) * (0.5 * h) * _GL_W
    step = np.exp(rho * h)
    s = t[:-1, None] + tau[None, :]
    fs = np.asarray(f(s.ravel()), dtype=float).reshape(s.shape)
    if weight_s:
        fs = fs * s
    local = fs @ ker
    acc = 0.0 + 0.0j
    for k in range(t.size - 1):
        acc = step * acc + local[k]
        out[k + 1] = acc
    return out


def _tail_rate(f, t: np.ndarray, index: int) -> tuple[float, float]:
    """Fit ``|f| ~ A e^{-mu t}`` on the last tenth of the grid."""
    m = max(int(0.1 * t.size), 3)
    tt = t[-m:]
    ff = np.abs(np.asarray(f(tt), float))
    if np.all(ff == 0.0):
        return 0.0, math.inf
    ff = np.maximum(ff, np.max(ff) * 1e-300)
    slope, _ = np.polyfit(tt, np.log(ff), 1)
    return float(f(np.array([t[-1]]))[0]), float(-slope)


def _backward_conv(rho: float, f, t: np.ndarray, index: int) -> np.ndarray:
    """``B(t_k) = int_{t_k}^inf e^{rho (t_k - s)} f(s) ds`` for ``rho > 0``."""
    h = t[1] - t[0]
    fT, mu = _tail_rate(f, t, index)
    if fT != 0.0 and not (rho + mu > 0.0):
        raise NumericalError(
            f"tail integral diverges for mode {index} (rho+={rho!r}, fitted decay {mu!r})",
            mode=index,
        )
    out = np.empty(t.size)
    out[-1] = 0.0 if fT == 0.0 else fT / (rho + mu)
    tau = 0.5 * h * (_GL_X + 1.0)
    ker = np.exp(-rho * tau) * (0.5 * h) * _GL_W
    s = t[:-1, None] + tau[None, :]
    local = np.asarray(f(s.ravel()), float).reshape(s.shape) @ ker
    step = math.exp(-rho * h)
    for k in range(t.size - 2, -1, -1):
        out[k] = step * out[k + 1] + local[k]
    return out


# -- closed forms ---------------------------------------------------------------
def duhamel_solution(
    i: int,
    lambda_i: float,
    z0: float,
    z0prime: float | None,
    forcing: Forcing,
    horizon: float,
    constants: DerivedConstants,
    jl_class: JLClass | None = None,
    num: int = 2001,
) -> ModalTrajectory:
    """Variation-of-parameters solution of the modal equation.

    For ``i >= 2`` this is the solution that stays bounded as t -> inf
    (``z0prime`` is then implied and ignored).  For ``i = 1`` it is the
    initial-value solution in the form matching ``jl_class``; when the class
    is omitted it is read off the sign of the discriminant.
    """
    t = _time_grid(horizon, num)
    f = _as_callable(forcing, t)
    sigma, gamma = constants.sigma, constants.gamma
    disc = sigma * sigma + 4.0 * (gamma + lambda_i)
    fs = None if f is None else np.asarray(f(t), float)

    if i >= 2:
        rm, rp = modal_roots(lambda_i, constants)
        if isinstance(rp, complex) or rp <= 0:
            raise PreconditionError("bounded-solution form needs rho- < 0 < rho+")
        D = math.sqrt(disc)
        z = z0 * np.exp(rm * t)
        if f is not None:
            fwd = _forward_conv(rm, f, t).real
            bwd = _backward_conv(rp, f, t, i)
            z = z + (-fwd - bwd + np.exp(rm * t) * bwd[0]) / D
        return ModalTrajectory(t, z, i, fs)

    if z0prime is None:
        raise PreconditionError("mode 1 needs an initial slope")
    if jl_class is None:
        jl_class = (
            JLClass.SUPERCRITICAL if disc > 0 else JLClass.SUBCRITICAL if disc < 0 else JLClass.CRITICAL
        )
    if jl_class is JLClass.SUPERCRITICAL:
        D = math.sqrt(disc)
        rm, rp = 0.5 * (-sigma - D), 0.5 * (-sigma + D)
        A = (z0prime - rm * z0) / D
        B = (rp * z0 - z0prime) / D
        z = A * np.exp(rp * t) + B * np.exp(rm * t)
        if f is not None:
            z = z + (_forward_conv(rp, f, t).real - _forward_conv(rm, f, t).real) / D
    elif jl_class is JLClass.CRITICAL:
        rho = -0.5 * sigma
        z = (z0 + (z0prime - rho * z0) * t) * np.exp(rho * t)
        if f is not None:
            I0 = _forward_conv(rho, f, t).real
            I1 = _forward_conv(rho, f, t, weight_s=True).real
            z = z + t * I0 - I1
    else:
        K = 0.5 * math.sqrt(-disc)
        z = np.exp(-0.5 * sigma * t) * (
            z0 * np.cos(K * t) + (z0prime + 0.5 * sigma * z0) / K * np.sin(K * t)
        )
        if f is not None:
            z = z + _forward_conv(complex(-0.5 * sigma, K), f, t).imag / K
    return ModalTrajectory(t, z, i, fs)


# -- direct integration ----------------------------------------------------------
def _rk4_modal(c: float, sigma: float, z0, z1, f, t0: float, h: float, steps: int):
    """Classical RK4 for ``Y' = A Y + (0, f)``, written as an affine recurrence."""
    A = np.array([[0.0, 1.0], [c, -sigma]])
    I = np.eye(2)
    hA = h * A
    P = I + hA + hA @ hA / 2 + hA @ hA @ hA / 6 + hA @ hA @ hA @ hA / 24
    # forcing enters through the stage values b1 = f(s), b2 = f(s+h/2), b3 = f(s+h)
    Q1 = h / 6 * (I + hA + hA @ hA / 2 + hA @ hA @ hA / 4)
    Q2 = h / 6 * (4 * I + 2 * hA + hA @ hA / 2)
    Q3 = h / 6 * I
    out = np.empty(steps + 1)
    if f is None:
        g1 = g2 = g3 = np.zeros((steps, 2))
    else:
        s = t0 + h * np.arange(steps)
        fa = np.asarray(f(s), float)
        fb = np.asarray(f(s + 0.5 * h), float)
        fc = np.asarray(f(s + h), float)
        g1 = np.outer(fa, Q1[:, 1])
        g2 = np.outer(fb, Q2[:, 1])
        g3 = np.outer(fc, Q3[:, 1])
    g = (g1 + g2 + g3).tolist()
    p00, p01, p10, p11 = P[0, 0], P[0, 1], P[1, 0], P[1, 1]
    z, p = z0, z1
    out[0] = z
    for k in range(steps):
        gz, gp = g[k]
        z, p = p00 * z + p01 * p + gz, p10 * z + p11 * p + gp
        out[k + 1] = z
    return out


def ode_direct(
    i: int,
    lambda_i: float,
    z0: float,
    z0prime: float,
    forcing: Forcing,
    horizon: float,
    constants: DerivedConstants,
    num: int = 2001,
    tol: float = 1e-10,
    max_halvings: int = 10,
) -> ModalTrajectory:
    """RK4 initial-value integration, halving the step until converged."""
    t = _time_grid(horizon, num)
    f = _as_callable(forcing, t)
    c = constants.gamma + lambda_i
    h = t[1] - t[0]
    prev = None
    sub = 1
    for _ in range(max_halvings + 1):
        full = _rk4_modal(c, constants.sigma, z0, z0prime, f, 0.0, h / sub, (num - 1) * sub)
        cur = full[::sub]
        if prev is not None:
            scale = max(np.max(np.abs(cur)), 1e-300)
            if np.max(np.abs(cur - prev)) <= tol * max(scale, 1.0):
                fs = None if f is None else np.asarray(f(t), float)
                return ModalTrajectory(t, cur, i, fs)
        prev = cur
        sub *= 2
    raise ConvergenceError("step halving did not converge", mode=i)


# -- averaged equation -----------------------------------------------------------
def vbar_residual(vbar, vB, constants: DerivedConstants, q: float, t=None) -> float:
    """Max-norm residual of ``vbar'' + sigma vbar' - gamma vbar + vB^q = 0``."""
    if isinstance(vbar, ModalTrajectory):
        t, vbar = vbar.time_grid, vbar.values
    if isinstance(vB, ModalTrajectory):
        if t is not None and (vB.time_grid.shape != np.shape(t) or np.any(vB.time_grid != t)):
            raise PreconditionError("trajectories are on different grids")
        t, vB = vB.time_grid, vB.values
    vbar, vB = np.asarray(vbar, float), np.asarray(vB, float)
    if vbar.shape != vB.shape:
        raise PreconditionError("trajectories are on different grids")
    if t is None:
        raise PreconditionError("time grid required")
    h = t[1] - t[0]
    d2 = (vbar[2:] - 2 * vbar[1:-1] + vbar[:-2]) / h**2
    d1 = (vbar[2:] - vbar[:-2]) / (2 * h)
    r = d2 + constants.sigma * d1 - constants.gamma * vbar[1:-1] + np.abs(vB[1:-1]) ** q
    return float(np.max(np.abs(r))) if r.size else 0.0


# -- fitting -------------------------------------------------------------------
def _window(traj: ModalTrajectory, window):
    t, z = traj.time_grid, traj.values
    lo, hi = window
    T0, T1 = t[0], t[-1]
    sel = (t >= T0 + lo * (T1 - T0) - 1e-12) & (t <= T0 + hi * (T1 - T0) + 1e-12)
    if sel.sum() < 4:
        raise FitError("fit window contains fewer than 4 samples")
    return t[sel], z[sel]


def fit_decay(
    trajectory: ModalTrajectory,
    jl_report: JLReport,
    window: tuple = (0.3, 1.0),
    residual_cap: float | None = None,
) -> DecayFit:
    """Least-squares fit of the class-appropriate decay model.

    ``window`` is a pair of fractions of the time span.  ``residual_cap``
    bounds the max-norm misfit relative to ``max |z|`` on the window.
    """
    t, z = _window(trajectory, window)
    amp = np.max(np.abs(z))
    if amp == 0.0 or not np.abs(z[-1]) < np.abs(z[0]) and jl_report.jl_class is JLClass.SUPERCRITICAL:
        raise FitError("data do not decay on the fit window", start=float(z[0]), end=float(z[-1]))
    sigma = jl_report.sigma
    cls = jl_report.jl_class
    if cls is JLClass.SUPERCRITICAL:
        if np.any(z == 0) or np.any(np.sign(z) != np.sign(z[0])):
            raise FitError("trajectory changes sign on a pure-exponential window")
        slope, icpt = np.polyfit(t, np.log(np.abs(z)), 1)
        fit = DecayFit(FitModel.PURE_EXPONENTIAL, float(slope),
                       (float(np.sign(z[0]) * math.exp(icpt)),), 0.0, tuple(window))
    elif cls is JLClass.CRITICAL:
        y = z * np.exp(0.5 * sigma * t)
        A = np.column_stack([t, np.ones_like(t)])
        (x1, x2), *_ = np.linalg.lstsq(A, y, rcond=None)
        fit = DecayFit(FitModel.LINEAR_TIMES_EXPONENTIAL, -0.5 * sigma,
                       (float(x1), float(x2)), 0.0, tuple(window))
    else:
        K = jl_report.K
        y = z * np.exp(0.5 * sigma * t)
        A = np.column_stack([np.sin(K * t), np.cos(K * t)])
        (x1, x2), *_ = np.linalg.lstsq(A, y, rcond=None)
        fit = DecayFit(FitModel.OSCILLATORY_EXPONENTIAL, -0.5 * sigma,
                       (float(x1), float(x2)), 0.0, tuple(window), frequency=K)
    res = float(np.max(np.abs(fit.predict(t) - z)))
    fit = DecayFit(fit.model, fit.rate, fit.coefficients, res, fit.window, fit.frequency)
    if residual_cap is not None and res > residual_cap * amp:
        raise FitError("fit residual exceeds cap", residual=res, cap=residual_cap * amp)
    return fit


def fit_oscillation(trajectory: ModalTrajectory, window: tuple = (0.3, 1.0)) -> DecayFit:
    """Unconstrained fit of ``(x1 sin Kt + x2 cos Kt) e^{rt}`` (rate and frequency free)."""
    t, z = _window(trajectory, window)
    # initial frequency from zero crossings, initial rate from the envelope
    zc = t[:-1][np.signbit(z[1:]) != np.signbit(z[:-1])]
    if zc.size < 2:
        raise FitError("fewer than two zero crossings in the window")
    K0 = math.pi / float(np.mean(np.diff(zc)))
    env = np.abs(z) + 1e-300
    r0 = float(np.polyfit(t, np.log(env), 1)[0])
    scale = np.max(np.abs(z))

    def resid(p):
        r, K, x1, x2 = p
        return ((x1 * np.sin(K * t) + x2 * np.cos(K * t)) * np.exp(r * (t - t[0])) - z) / scale

    sol = least_squares(resid, [r0, K0, 0.0, scale], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    r, K, x1, x2 = sol.x
    f = math.exp(-r * t[0])
    fit = DecayFit(FitModel.OSCILLATORY_EXPONENTIAL, float(r), (float(x1 * f), float(x2 * f)),
                   0.0, tuple(window), frequency=float(abs(K)))
    return DecayFit(fit.model, fit.rate, fit.coefficients,
                    float(np.max(np.abs(fit.predict(t) - z))), fit.window, fit.frequency)
