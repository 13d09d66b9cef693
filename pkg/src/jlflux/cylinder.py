"""Cylinder problem ``v_tt + sigma v_t - gamma v + Delta_S v = 0`` on ``[0, T] x [0, pi/2]``.

The boundary condition is the nonlinear flux ``lim cos^a v_theta = v_B^q``.

Angular discretization
    Lumped-mass Galerkin on a grid refined toward pi/2 (``s = pi/2 - theta``,
    ``s_j = (pi/2)(1 - j/N)^p``).  The element at the pole uses hat
    functions.  All other elements use the local
    ``w``-harmonic basis ``(w phi')' = 0``, whose conductance
    ``1 / int dtheta/w`` is exact for the flux variable, and integrate the
    ``cos^a`` singularity with Gauss-Jacobi rules.  The resulting operator is
    self-adjoint in the lumped ``dmu`` inner product, and the natural boundary
    term at pi/2 carries the flux.

Time discretization
    Second-order centred differences; the full space-time system is solved
    at once by damped Newton with a sparse direct factorization.

Right boundary
    ``"dirichlet"`` pins ``v(T) = V``.  ``"modal"`` is a transparent
    condition in the eigenbasis of the linearization: every mode but the
    first leaves through its decaying discrete root at ``T``, and the first
    mode is launched at ``t = 0`` with the log-slope of its slow free-decay
    branch (second-order one-sided difference).  Dirichlet
    data at a finite T select the fast branch of the first mode, so only the
    modal condition reproduces the free decay of the half-cylinder problem.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .angular import AngularProfile
from .classifier import JLClass
from .errors import (
    ConsistencyError,
    NewtonDivergence,
    NumericalError,
    PositivityError,
    PreconditionError,
)
from .modal import ModalTrajectory
from .params import DerivedConstants, ProblemParams, derive
from .quadrature import HALF_PI, gauss_jacobi

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL01_X, _GL01_W = 0.5 * (_GL_X + 1.0), 0.5 * _GL_W


def _gj01(alpha: float, order: int = 24):
    """Nodes/weights on [0, 1] for the weight ``x^alpha``."""
    x, w = gauss_jacobi(order, 0.0, alpha)
    return 0.5 * (x + 1.0), w * 0.5 ** (alpha + 1.0)


# -- angular operator -----------------------------------------------------------
@dataclass(frozen=True, eq=False)
class AngularFE:
    """Lumped mass ``mass`` and element conductances ``cond`` on ``theta``."""

    n: int
    a: float
    theta: np.ndarray
    s: np.ndarray
    mass: np.ndarray
    cond: np.ndarray

    @property
    def size(self) -> int:
        return self.theta.size

    @classmethod
    def build(cls, n: int, a: float, cells: int, grading: float | None = None,
              linear_cells: int = 1) -> "AngularFE":
        if cells < 4:
            raise PreconditionError("need at least 4 angular cells")
        p = grading if grading is not None else max(1.0, 2.0 / (1.0 - a))
        xi = np.linspace(0.0, 1.0, cells + 1)
        s = HALF_PI * (1.0 - xi) ** p
        s[-1] = 0.0
        theta = HALF_PI - s
        W = lambda x: np.cos(x) ** (n - 2) * np.sin(x) ** a
        iP = lambda x: 1.0 / W(x)
        mass = np.zeros(cells + 1)
        cond = np.zeros(cells)
        sl, sr = s[:-1], s[1:]
        H = sl - sr
        # the element at the pole needs hats since 1/W is not integrable there
        lin = np.arange(cells) < max(1, linear_cells)
        last = np.zeros(cells, bool)
        last[-1] = True
        harm = ~lin & ~last

        # hat functions; phi_j = (s - sr)/H on the element
        if lin.any():
            x = sr[lin, None] + H[lin, None] * _GL01_X
            Wx = W(x) * (H[lin, None] * _GL01_W)
            cond[lin] = Wx.sum(1) / H[lin] ** 2
            left = (Wx * _GL01_X).sum(1)
            mass[:-1][lin] += left
            mass[1:][lin] += Wx.sum(1) - left

        # harmonic basis: phi_{j+1}(s) = int_s^{sl} iP / R, and by Fubini
        # int W phi_{j+1} = (1/R) int_{sr}^{sl} iP(y) int_{sr}^{y} W ds dy
        if harm.any():
            srh, Hh = sr[harm], H[harm]
            y = srh[:, None] + Hh[:, None] * _GL01_X
            wy = Hh[:, None] * _GL01_W
            R = (iP(y) * wy).sum(1)
            inner_x = srh[:, None, None] + (y - srh[:, None])[:, :, None] * _GL01_X
            inner = (W(inner_x) * _GL01_W).sum(2) * (y - srh[:, None])
            m1 = (iP(y) * inner * wy).sum(1) / R
            tot = (W(y) * wy).sum(1)
            cond[harm] = 1.0 / R
            mass[1:][harm] += m1
            mass[:-1][harm] += tot - m1

        # last element [0, s_l]: W = x^a wi, iP = x^-a gi with smooth wi, gi
        sL = sl[-1]
        wi = lambda x: np.cos(x) ** (n - 2) * (np.sinc(x / math.pi)) ** a
        gi = lambda x: 1.0 / wi(x)
        xa, wa = _gj01(a)
        xm, wm = _gj01(-a)
        R = sL ** (1.0 - a) * np.sum(wm * gi(sL * xm))
        tot = sL ** (1.0 + a) * np.sum(wa * wi(sL * xa))
        # int_0^y x^a wi = y^(1+a) Hy(y), Hy(y) = int_0^1 x^a wi(y x) dx
        yv = sL * _GL01_X
        Hy = (wa[None, :] * wi(yv[:, None] * xa[None, :])).sum(1)
        m1 = sL * np.sum(_GL01_W * (yv ** (-a) * gi(yv)) * yv ** (1.0 + a) * Hy) / R
        cond[-1] = 1.0 / R
        mass[-1] += m1
        mass[-2] += tot - m1
        if np.any(mass <= 0) or np.any(cond <= 0):
            raise ConsistencyError("non-positive mass or conductance in angular operator")
        return cls(int(n), float(a), theta, s, mass, cond)

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Weak form of ``Delta_S`` without the boundary term (negative semidefinite)."""
        c = self.cond
        main = np.zeros(self.size)
        main[:-1] -= c
        main[1:] -= c
        return sp.diags([c, main, c], [-1, 0, 1], format="csr")

    @property
    def dense_laplacian(self) -> np.ndarray:
        return self.laplacian.toarray()

    def apply_laplacian(self, v: np.ndarray) -> np.ndarray:
        """``L v`` along the last axis."""
        c = self.cond
        d = np.diff(v, axis=-1) * c
        out = np.zeros_like(v)
        out[..., :-1] += d
        out[..., 1:] -= d
        return out

    def sample(self, f) -> np.ndarray:
        """Nodal values of a profile, callable of theta, or array."""
        if isinstance(f, AngularProfile):
            return f.evaluate(s=self.s)[0]
        if callable(f):
            return np.asarray(f(self.theta), float)
        arr = np.asarray(f, float)
        if arr.shape != self.theta.shape:
            raise PreconditionError("nodal array does not match the angular grid")
        return arr

    def integral(self, v: np.ndarray) -> np.ndarray:
        return v @ self.mass

    def inner(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return (u * v) @ self.mass

    def grad_sq(self, v: np.ndarray) -> np.ndarray:
        """``||d_theta v||^2`` in the discrete energy."""
        return (np.diff(v, axis=-1) ** 2) @ self.cond


def stationary_profile(fe: AngularFE, gamma: float, q: float) -> np.ndarray:
    """Discrete V: ``(gamma M - L) V = e_N V_N^q`` with ``V > 0``."""
    A = sp.diags(gamma * fe.mass) - fe.laplacian
    rhs = np.zeros(fe.size)
    rhs[-1] = 1.0
    y = splu(A.tocsc()).solve(rhs)
    if y[-1] <= 0 or np.any(y <= 0):
        raise ConsistencyError("discrete stationary profile is not positive")
    c = y[-1] ** (-q / (q - 1.0))
    return c * y


@dataclass(frozen=True, eq=False)
class DiscreteModes:
    """M-orthonormal eigenvectors of ``-L - beta e_N e_N^T`` (``e_iN > 0``)."""

    lams: np.ndarray
    vectors: np.ndarray  # columns
    mass: np.ndarray
    beta: float

    def project(self, w: np.ndarray) -> np.ndarray:
        """Modal coordinates ``E^T M w`` along the last axis."""
        return (w * self.mass) @ self.vectors


def discrete_modes(fe: AngularFE, beta: float) -> DiscreteModes:
    # symmetric tridiagonal form; the implicit QL driver keeps the small
    # eigenvalues accurate despite the strongly graded boundary masses
    r = 1.0 / np.sqrt(fe.mass)
    d = -fe.laplacian.diagonal()
    d[-1] -= beta
    off = -fe.cond
    lams, U = sla.eigh_tridiagonal(d * r * r, off * r[:-1] * r[1:], lapack_driver="stev")
    E = r[:, None] * U
    E = E * np.where(E[-1] < 0, -1.0, 1.0)
    return DiscreteModes(lams, E, fe.mass, beta)


# -- grids and fields -----------------------------------------------------------
@dataclass(frozen=True)
class CylinderGrid:
    nt: int = 400
    ntheta: int = 64
    grading: float | None = None
    right_bc: str = "modal"
    newton_tol: float = 1e-9
    max_newton: int = 40
    max_halvings: int = 30
    min_sigma_T: float = 10.0

    def __post_init__(self):
        if self.right_bc not in ("dirichlet", "modal"):
            raise PreconditionError(f"unknown right boundary condition {self.right_bc!r}")
        if self.nt < 4 or self.ntheta < 4:
            raise PreconditionError("grid too small")

    def refined(self, factor: int = 2) -> "CylinderGrid":
        return replace(self, nt=self.nt * factor, ntheta=self.ntheta * factor)


@dataclass(frozen=True, eq=False)
class CylinderField:
    """Grid values of ``v`` (or of ``w`` when ``kind == "w"``)."""

    t_grid: np.ndarray
    fe: AngularFE
    values: np.ndarray
    V_h: np.ndarray
    params: ProblemParams
    constants: DerivedConstants
    kind: str = "v"
    diagnostics: dict = field(default_factory=dict)

    @property
    def theta_grid(self) -> np.ndarray:
        return self.fe.theta

    @property
    def boundary_trace(self) -> np.ndarray:
        return self.values[:, -1]

    @property
    def w(self) -> np.ndarray:
        return self.values if self.kind == "w" else self.V_h[None, :] - self.values

    @property
    def v(self) -> np.ndarray:
        return self.values if self.kind == "v" else self.V_h[None, :] - self.values

    def long_rows(self):
        w = self.w
        v = self.v
        for k, t in enumerate(self.t_grid):
            for j, th in enumerate(self.fe.theta):
                yield t, th, v[k, j], w[k, j]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "theta", "v", "w"])
            for row in self.long_rows():
                wr.writerow([f"{x:.17g}" for x in row])


# -- space-time system ----------------------------------------------------------
def _discrete_roots(lam: np.ndarray, sigma: float, gamma: float, dt: float):
    """Roots of the centred recurrence for ``z'' + sigma z' - (gamma+lam) z = 0``."""
    a2 = 1.0 / dt**2 + 0.5 * sigma / dt
    a1 = -(2.0 / dt**2 + gamma + lam)
    a0 = 1.0 / dt**2 - 0.5 * sigma / dt
    disc = a1 * a1 - 4.0 * a2 * a0
    return a2, a1, a0, disc


def _decaying_root(lam, sigma, gamma, dt):
    a2, a1, a0, disc = _discrete_roots(lam, sigma, gamma, dt)
    if np.any(disc < 0):
        raise NumericalError("complex discrete roots for a mode above the first")
    qq = -0.5 * (a1 - np.sqrt(disc))  # a1 < 0: no cancellation
    big, small = qq / a2, a0 / qq
    return np.where(np.abs(small) < np.abs(big), small, big)


def _launch_rate(lam1: float, sigma: float, gamma: float, jl_class: JLClass) -> float:
    """Initial log-slope of the first mode: the slow root, or ``-sigma/2``."""
    disc = 0.25 * sigma * sigma + gamma + lam1
    if jl_class is JLClass.SUPERCRITICAL and disc > 0:
        return -0.5 * sigma + math.sqrt(disc)
    return -0.5 * sigma


@dataclass(eq=False)
class _System:
    A: sp.csr_matrix
    rhs: np.ndarray
    nl_rows: np.ndarray
    layers: int
    m: int


def _assemble(fe: AngularFE, constants: DerivedConstants, t: np.ndarray, bc: str,
              left: np.ndarray, right_state: np.ndarray, linear_beta: float | None,
              modes: DiscreteModes | None, jl_class: JLClass | None) -> _System:
    """Space-time matrix for ``v`` (``linear_beta is None``) or ``w``."""
    m = fe.size
    nt = t.size - 1
    dt = t[1] - t[0]
    sigma, gamma = constants.sigma, constants.gamma
    ghost = bc == "modal"
    K = nt + 1 + (1 if ghost else 0)
    interior = np.arange(1, nt + (1 if ghost else 0))
    Mdiag = sp.diags(fe.mass)
    center = (-(2.0 / dt**2 + gamma)) * Mdiag + fe.laplacian
    if linear_beta is not None:
        center = center + sp.csr_matrix(([linear_beta], ([m - 1], [m - 1])), shape=(m, m))
    ap = (1.0 / dt**2 + 0.5 * sigma / dt) * Mdiag
    am = (1.0 / dt**2 - 0.5 * sigma / dt) * Mdiag

    def sel(rows, offset):
        r = np.asarray(rows)
        return sp.csr_matrix((np.ones(r.size), (r, r + offset)), shape=(K, K))

    A = sp.kron(sel(interior, 0), center) + sp.kron(sel(interior, 1), ap) + sp.kron(sel(interior, -1), am)
    rhs = np.zeros(K * m)
    blocks = [A]
    rows_extra = []
    # layer 0: Dirichlet
    blocks.append(sp.kron(sel([0], 0), sp.identity(m)))
    rhs[:m] = left
    if not ghost:
        blocks.append(sp.kron(sel([nt], 0), sp.identity(m)))
        rhs[nt * m:(nt + 1) * m] = right_state
    else:
        E, lams = modes.vectors, modes.lams
        ETM = (E * fe.mass[:, None]).T  # rows e_i^T M
        mu = _decaying_root(lams[1:], sigma, gamma, dt)
        # e_i^T M (x_G - mu x_T) = (1 - mu) e_i^T M x_inf, x = v or w
        g0 = (nt + 1) * m
        tT = nt * m
        Bi = ETM[1:]
        r_idx = np.arange(g0, g0 + m - 1)
        rows_extra.append((r_idx, g0, Bi))
        rows_extra.append((r_idx, tT, -mu[:, None] * Bi))
        rhs[r_idx] = (1.0 - mu) * (Bi @ right_state)
        # e_1^T M [(-3 x_0 + 4 x_1 - x_2) / (2 dt) - r (x_0 - x_inf)] = 0
        r1 = _launch_rate(lams[0], sigma, gamma, jl_class)
        last = g0 + m - 1
        b1 = ETM[:1]
        rows_extra.append((np.array([last]), 0, (-1.5 / dt - r1) * b1))
        rows_extra.append((np.array([last]), m, (2.0 / dt) * b1))
        rows_extra.append((np.array([last]), 2 * m, (-0.5 / dt) * b1))
        rhs[last] = -r1 * (ETM[0] @ right_state)
    A = sum(blocks[1:], blocks[0]).tocsr()
    if rows_extra:
        rr, cc, vv = [], [], []
        for r_idx, col0, B in rows_extra:
            R = np.repeat(r_idx, B.shape[1])
            C = np.tile(np.arange(col0, col0 + B.shape[1]), r_idx.size)
            rr.append(R)
            cc.append(C)
            vv.append(B.ravel())
        A = A + sp.csr_matrix((np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))),
                              shape=A.shape)
    nl_rows = interior * m + (m - 1)
    return _System(A.tocsr(), rhs, nl_rows, K, m)


def _time_grid(T: float, nt: int) -> np.ndarray:
    if not T > 0:
        raise PreconditionError("horizon must be positive")
    return np.linspace(0.0, T, nt + 1)


def _check_grid(constants: DerivedConstants, T: float, grid: CylinderGrid):
    dt = T / grid.nt
    if constants.sigma * dt >= 2.0:
        raise PreconditionError(
            f"time step too large for the drift: sigma*dt = {constants.sigma * dt!r} >= 2"
        )
    if constants.sigma * T < grid.min_sigma_T:
        raise PreconditionError(
            f"horizon too short: sigma*T = {constants.sigma * T!r} < {grid.min_sigma_T!r}"
        )


@dataclass(frozen=True, eq=False)
class CylinderSetup:
    """Discrete angular operator, stationary state and linearized modes."""

    params: ProblemParams
    constants: DerivedConstants
    fe: AngularFE
    V_h: np.ndarray
    beta: float
    modes: DiscreteModes

    @classmethod
    def build(cls, params: ProblemParams, constants: DerivedConstants | None,
              grid: CylinderGrid) -> "CylinderSetup":
        constants = constants or derive(params)
        if constants.gamma <= 0:
            raise PreconditionError("cylinder problem needs gamma > 0 (q > q_sing)")
        fe = AngularFE.build(params.n, params.a, grid.ntheta, grid.grading)
        q = float(params.q)
        V_h = stationary_profile(fe, constants.gamma, q)
        beta = q * V_h[-1] ** (q - 1.0)
        return cls(params, constants, fe, V_h, beta, discrete_modes(fe, beta))


def _resolve_left(setup: CylinderSetup, left_data) -> np.ndarray:
    if np.isscalar(left_data):
        return float(left_data) * setup.V_h
    return setup.fe.sample(left_data)


def solve_linearized(params: ProblemParams, constants: DerivedConstants | None,
                     V: AngularProfile | None, left_data, T: float,
                     grid: CylinderGrid = CylinderGrid(),
                     jl_class: JLClass | None = None,
                     setup: CylinderSetup | None = None) -> CylinderField:
    """Linear problem for ``w`` with the frozen flux coefficient ``q V_B^(q-1)``.

    ``left_data`` is the datum for ``w`` at t = 0: nodal array, callable,
    profile, or a scalar multiple of the discrete stationary profile.
    """
    setup = setup or CylinderSetup.build(params, constants, grid)
    constants = setup.constants
    _check_grid(constants, T, grid)
    t = _time_grid(T, grid.nt)
    w0 = _resolve_left(setup, left_data)
    cls_ = jl_class or _discrete_class(setup)
    sysm = _assemble(setup.fe, constants, t, grid.right_bc, w0, np.zeros(setup.fe.size),
                     setup.beta, setup.modes, cls_)
    try:
        lu = splu(sysm.A.tocsc())
    except RuntimeError as exc:
        raise NumericalError(f"singular space-time system: {exc}") from exc
    x = lu.solve(sysm.rhs)
    res = np.max(np.abs(sysm.A @ x - sysm.rhs))
    vals = x.reshape(sysm.layers, sysm.m)[: t.size]
    diag = {"residual": float(res), "right_bc": grid.right_bc, "jl_class": cls_.value,
            "beta_h": setup.beta}
    _attach_deviation(diag, setup, V)
    return CylinderField(t, setup.fe, vals, setup.V_h, params, constants, "w", diag)


def _discrete_class(setup: CylinderSetup) -> JLClass:
    c = setup.constants
    disc = c.sigma**2 + 4.0 * (c.gamma + setup.modes.lams[0])
    if disc > 1e-6:
        return JLClass.SUPERCRITICAL
    if disc < -1e-6:
        return JLClass.SUBCRITICAL
    return JLClass.CRITICAL


def _attach_deviation(diag: dict, setup: CylinderSetup, V: AngularProfile | None):
    if V is not None:
        Vs = setup.fe.sample(V)
        diag["max_abs_V_h_minus_V"] = float(np.max(np.abs(Vs - setup.V_h)))


def solve_nonlinear(params: ProblemParams, constants: DerivedConstants | None,
                    V: AngularProfile | None, left_data, T: float,
                    grid: CylinderGrid = CylinderGrid(),
                    jl_class: JLClass | None = None,
                    setup: CylinderSetup | None = None) -> CylinderField:
    """Full nonlinear problem for ``v`` by damped Newton.

    ``left_data`` is the datum for ``v`` at t = 0 (nodal array, callable,
    profile, or a scalar multiple of the discrete stationary profile).  It
    must be positive and not exceed the stationary profile.
    """
    setup = setup or CylinderSetup.build(params, constants, grid)
    constants = setup.constants
    _check_grid(constants, T, grid)
    q = float(params.q)
    fe = setup.fe
    t = _time_grid(T, grid.nt)
    v0 = _resolve_left(setup, left_data)
    if np.any(v0 <= 0):
        raise PreconditionError("left data must be positive")
    if np.any(v0 > setup.V_h * (1 + 1e-12)):
        raise PreconditionError("left data must not exceed the stationary profile")
    cls_ = jl_class or _discrete_class(setup)
    sysm = _assemble(fe, constants, t, grid.right_bc, v0, setup.V_h, None, setup.modes, cls_)
    lin = solve_linearized(params, constants, None, setup.V_h - v0, T, grid, cls_, setup)
    x = np.zeros(sysm.layers * sysm.m)
    xs = x.reshape(sysm.layers, sysm.m)
    xs[: t.size] = setup.V_h - lin.values
    if sysm.layers > t.size:
        xs[-1] = 2 * xs[-2] - xs[-3]  # ghost layer guess
    rows = sysm.nl_rows
    diagA = np.abs(sysm.A.diagonal())

    def F(x):
        vb = x[rows]
        if np.any(vb <= 0):
            k = int(rows[np.argmax(vb <= 0)] // sysm.m)
            raise PositivityError(f"boundary value became non-positive at layer {k}", layer=k)
        r = sysm.A @ x - sysm.rhs
        r[rows] += vb**q
        return r

    def scaled(r):
        return float(np.max(np.abs(r) / np.maximum(diagA, 1.0)))

    r = F(x)
    history = []
    res = scaled(r)
    it = 0
    while res > grid.newton_tol * 1e-3 and it < grid.max_newton:
        J = sysm.A + sp.csr_matrix((q * x[rows] ** (q - 1), (rows, rows)), shape=sysm.A.shape)
        dx = splu(J.tocsc()).solve(-r)
        lam = 1.0
        for h in range(grid.max_halvings + 1):
            xn = x + lam * dx
            try:
                rn = F(xn)
                resn = scaled(rn)
            except PositivityError:
                resn = math.inf
            if resn < res or (resn <= grid.newton_tol * 1e-3):
                break
            lam *= 0.5
        else:
            if res <= grid.newton_tol:
                break  # stalled at round-off
            raise NewtonDivergence("damping failed to reduce the residual",
                                   residual=res, history=history)
        history.append({"residual": resn, "damping": lam})
        step = float(np.max(np.abs(lam * dx)))
        x, r, res = xn, rn, resn
        it += 1
        if step <= 1e-15 * max(1.0, float(np.max(np.abs(x)))):
            break
    if res > grid.newton_tol:
        raise NewtonDivergence("Newton iteration did not converge", residual=res, history=history)
    vals = x.reshape(sysm.layers, sysm.m)[: t.size].copy()
    if np.any(vals <= 0):
        k, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise PositivityError(f"solution not positive at t={t[k]!r}, theta={fe.theta[j]!r}",
                              t=float(t[k]), theta=float(fe.theta[j]))
    diag = {"residual": res, "newton_iterations": it, "history": history,
            "right_bc": grid.right_bc, "jl_class": cls_.value, "beta_h": setup.beta}
    _attach_deviation(diag, setup, V)
    return CylinderField(t, fe, vals, setup.V_h, params, constants, "v", diag)


# -- post-processing ------------------------------------------------------------
def project_modes(field: CylinderField, eigenpairs, measure=None) -> list[ModalTrajectory]:
    """``z_i(t) = int w(t, .) e_i dmu`` in the discrete inner product.

    ``eigenpairs`` is either a ``DiscreteModes`` (with an optional count in
    ``measure``) or a sequence of continuum ``EigenPair`` whose profiles are
    sampled on the angular grid.
    """
    w = field.w
    if isinstance(eigenpairs, DiscreteModes):
        Z = eigenpairs.project(w)
        count = Z.shape[1] if measure is None else int(measure)
        return [ModalTrajectory(field.t_grid, Z[:, i], i + 1) for i in range(count)]
    out = []
    for p in eigenpairs:
        e = field.fe.sample(p.profile)
        out.append(ModalTrajectory(field.t_grid, field.fe.inner(w, e[None, :]), p.index))
    return out


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    t: np.ndarray
    E: np.ndarray
    dissipation: np.ndarray
    identity_residual: np.ndarray

    @property
    def max_identity_residual(self) -> float:
        return self.identity_residual_after(-math.inf)

    def identity_residual_after(self, t0: float) -> float:
        """Max identity residual for ``t >= t0`` (skips the initial layer)."""
        r = self.identity_residual[self.t[1:-1] >= t0]
        return float(np.max(np.abs(r))) if r.size else 0.0


def energy_trace(field: CylinderField, measure=None, constants: DerivedConstants | None = None) -> EnergyTrace:
    """Energy on interior layers with centred differences.

    ``identity_residual`` is ``dE/dt + sigma ||v_t||^2`` at the layers where
    both are available.
    """
    c = constants or field.constants
    q = float(field.params.q)
    fe = field.fe
    v = field.v
    t = field.t_grid
    dt = t[1] - t[0]
    vt = (v[2:] - v[:-2]) / (2 * dt)
    vi = v[1:-1]
    kin = fe.inner(vt, vt)
    E = 0.5 * kin - 0.5 * c.gamma * fe.inner(vi, vi) - 0.5 * fe.grad_sq(vi) + vi[:, -1] ** (q + 1) / (q + 1)
    dissipation = -c.sigma * kin
    dE = (E[2:] - E[:-2]) / (2 * dt)
    return EnergyTrace(t[1:-1], E, dissipation, dE - dissipation[1:-1])


@dataclass(frozen=True, eq=False)
class PhysicalSamples:
    r: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    m_q: float


def to_physical(field: CylinderField, constants: DerivedConstants | None = None) -> PhysicalSamples:
    """``u(r, theta) = r^(-m_q) v(ln r, theta)`` on the log-radial grid."""
    c = constants or field.constants
    r = np.exp(field.t_grid)
    return PhysicalSamples(r, field.fe.theta, field.v * r[:, None] ** (-c.m_q), c.m_q)


def scaling_shift(beta: float, params: ProblemParams) -> float:
    """t-translation equivalent to ``u -> beta u(beta^((q-1)/(1-a)) x)``."""
    return (params.q - 1.0) / (1.0 - params.a) * math.log(beta)


def scale_physical(ph: PhysicalSamples, beta: float, params: ProblemParams) -> PhysicalSamples:
    """Samples of ``u_beta(x) = beta u(beta^k x)``, on the grid ``r / beta^k``."""
    k = (params.q - 1.0) / (1.0 - params.a)
    return PhysicalSamples(ph.r * beta ** (-k), ph.theta, beta * ph.u, ph.m_q)


def to_cylinder(ph: PhysicalSamples) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``to_physical``: ``(t, v)`` with ``t = ln r``."""
    return np.log(ph.r), ph.u * ph.r[:, None] ** ph.m_q


def decay_sup(field: CylinderField, constants: DerivedConstants | None = None) -> float:
    """``max u (1 + |x|)^(m_q)`` over the grid."""
    ph = to_physical(field, constants)
    return float(np.max(ph.u * (1.0 + ph.r[:, None]) ** ph.m_q))
