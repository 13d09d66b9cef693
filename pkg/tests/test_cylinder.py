import numpy as np
import pytest

import oracles
from jlflux import (
    CylinderGrid,
    CylinderSetup,
    PreconditionError,
    ProblemParams,
    derive,
    eigenpairs,
    energy_trace,
    singular_profile,
    solve_linearized,
    solve_nonlinear,
)
from jlflux.cylinder import (
    AngularFE,
    decay_sup,
    discrete_modes,
    project_modes,
    scale_physical,
    scaling_shift,
    stationary_profile,
    to_cylinder,
    to_physical,
)

SUPER = ProblemParams(12, -0.5, 3.9473684210526314)
SUB = ProblemParams(3, -0.5, 10.0)


@pytest.mark.parametrize("n, a", [(3, -0.5), (6, -0.9), (12, -0.1)])
def test_fe_mass_is_total_measure(n, a):
    fe = AngularFE.build(n, a, 64)
    assert fe.mass.sum() == pytest.approx(oracles.total_mass(n, a), rel=1e-12)
    assert fe.s[-1] == 0.0 and fe.theta[0] == 0.0


def test_fe_laplacian_symmetric_and_annihilates_constants():
    fe = AngularFE.build(5, -0.5, 32)
    L = fe.dense_laplacian
    assert np.allclose(L, L.T)
    assert np.max(np.abs(L @ np.ones(fe.size))) < 1e-12
    v = np.sin(fe.theta)
    assert np.allclose(fe.apply_laplacian(v), L @ v, atol=1e-13)
    assert fe.grad_sq(v) == pytest.approx(-v @ L @ v, rel=1e-12)


@pytest.mark.parametrize("n, a, beta", [(3, -0.5, 1.3), (12, -0.5, 25.0), (5, -0.9, 3.0)])
def test_discrete_modes_converge_to_continuum(n, a, beta):
    ep = eigenpairs(beta, n, a, 3)
    errs = []
    for N in (64, 128):
        dm = discrete_modes(AngularFE.build(n, a, N), beta)
        errs.append([abs(dm.lams[i] - ep[i].lam) / max(1.0, abs(ep[i].lam)) for i in range(3)])
    errs = np.array(errs)
    assert np.all(errs[1] < 1e-3)
    assert np.all(errs[0] / errs[1] > 3.0)


def test_discrete_modes_orthonormal():
    fe = AngularFE.build(6, -0.3, 64)
    dm = discrete_modes(fe, 4.0)
    G = dm.vectors.T @ (dm.mass[:, None] * dm.vectors)
    assert np.max(np.abs(G - np.eye(fe.size))) < 1e-10
    assert np.all(dm.vectors[-1, :5] > 0)
    assert np.all(np.diff(dm.lams) > 0)


def test_stationary_profile_converges():
    c = derive(SUPER)
    V = singular_profile(SUPER, c)
    devs = []
    for N in (32, 64, 128):
        fe = AngularFE.build(SUPER.n, SUPER.a, N)
        devs.append(np.max(np.abs(stationary_profile(fe, c.gamma, SUPER.q) - fe.sample(V))))
    assert devs[0] / devs[1] > 3.0 and devs[1] / devs[2] > 3.0


def test_stationary_run_is_exact():
    f = solve_nonlinear(SUPER, None, None, 1.0, 6.0, CylinderGrid())
    assert np.max(np.abs(f.values - f.V_h)) < 1e-10
    E = energy_trace(f).E
    assert np.max(E) - np.min(E) < 1e-10


@pytest.mark.parametrize("bc", ["modal", "dirichlet"])
def test_supercritical_ordered_solution(bc):
    f = solve_nonlinear(SUPER, None, None, 0.99, 6.0, CylinderGrid(right_bc=bc))
    assert np.min(f.values) > 0
    assert np.max(f.values / f.V_h[None, :]) <= 1 + 1e-8
    assert f.diagnostics["residual"] < 1e-9


def test_subcritical_solution_overshoots():
    f = solve_nonlinear(SUB, None, None, 0.99, 72.0, CylinderGrid())
    assert np.max(f.values / f.V_h[None, :]) > 1.0  # the first mode oscillates


def test_linear_single_mode_stays_single():
    g = CylinderGrid()
    st = CylinderSetup.build(SUPER, None, g)
    for k in (0, 1, 2):
        f = solve_linearized(SUPER, None, None, 1e-3 * st.modes.vectors[:, k], 6.0, g, setup=st)
        Z = st.modes.project(f.values)
        assert np.max(np.abs(np.delete(Z, k, axis=1))) / 1e-3 < 1e-6


def test_project_modes_matches_continuum_projection():
    g = CylinderGrid()
    st = CylinderSetup.build(SUPER, None, g)
    f = solve_nonlinear(SUPER, None, None, 0.99, 6.0, g, setup=st)
    disc = project_modes(f, st.modes, 2)
    cont = project_modes(f, eigenpairs(st.beta, SUPER.n, SUPER.a, 2))
    assert len(disc) == 2 and disc[0].index == 1
    rel = np.max(np.abs(disc[0].values - cont[0].values)) / np.max(np.abs(cont[0].values))
    assert rel < 1e-2


def test_energy_residual_second_order():
    res = []
    for nt, nth in [(200, 32), (400, 64)]:
        f = solve_nonlinear(SUPER, None, None, 0.99, 6.0, CylinderGrid(nt=nt, ntheta=nth))
        res.append(energy_trace(f).identity_residual_after(0.6))
    assert res[0] / res[1] > 3.0


def test_scaling_is_translation():
    f = solve_nonlinear(SUPER, None, None, 0.99, 6.0, CylinderGrid())
    for b in (0.5, 1.7, 3.0):
        t, v = to_cylinder(scale_physical(to_physical(f), b, SUPER))
        assert np.max(np.abs(t - (f.t_grid - scaling_shift(b, SUPER)))) < 1e-12
        assert np.max(np.abs(v - f.v)) < 1e-12 * np.max(f.v)


def test_decay_sup_stable_in_horizon():
    s6 = decay_sup(solve_nonlinear(SUPER, None, None, 0.99, 6.0, CylinderGrid()))
    s12 = decay_sup(solve_nonlinear(SUPER, None, None, 0.99, 12.0, CylinderGrid(nt=800)))
    assert abs(s12 / s6 - 1) < 0.05


def test_preconditions():
    with pytest.raises(PreconditionError):
        CylinderGrid(right_bc="neumann")
    with pytest.raises(PreconditionError):
        solve_nonlinear(SUPER, None, None, 1.01, 6.0, CylinderGrid())
    with pytest.raises(PreconditionError):
        solve_nonlinear(SUPER, None, None, 0.99, 0.5, CylinderGrid())  # sigma T too small
    with pytest.raises(PreconditionError):
        solve_nonlinear(SUPER, None, None, 0.99, 6.0, CylinderGrid(nt=4))  # sigma dt >= 2


def test_field_csv(tmp_path):
    f = solve_nonlinear(SUPER, None, None, 0.99, 6.0, CylinderGrid(nt=40, ntheta=8))
    p = tmp_path / "f.csv"
    f.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,theta,v,w"
    assert len(lines) == 1 + 41 * f.fe.size
