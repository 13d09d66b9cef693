"""Command-line interface.

Every subcommand prints a JSON summary on stdout.  With ``--out DIR`` it also
writes its tables (CSV or JSON) and a ``manifest.json`` that records the full
configuration, the code version and every file written.  Settings resolve as
flags > ``--config`` file > built-in defaults.

Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .angular import AngularGrid, singular_profile
from .classifier import JLClass, critical_exponent, g_analysis, jl_classify
from .cylinder import (
    CylinderGrid,
    CylinderSetup,
    decay_sup,
    energy_trace,
    project_modes,
    solve_nonlinear,
)
from .errors import JLFluxError, ParameterError
from .modal import fit_decay, fit_oscillation
from .output import OutputDir, dumps, now
from .params import ProblemParams, check_n_a, derive
from .quadrature import HALF_PI, WeightedMeasure, weighted_integral
from .spectrum import compute_Ca, eigenpairs
from .verify import SUITES, run_suite

COMMANDS = ("constants", "profile", "spectrum", "classify", "critical", "simulate", "verify")
SWEEPABLE = ("constants", "profile", "spectrum", "classify", "simulate")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; serialized verbatim into the manifest."""

    n: int | None = None
    a: float | None = None
    q: float | None = None
    grid_t: int = 400
    grid_theta: int = 64
    horizon: float | None = None
    tol: float = 1e-9
    fit_window: tuple = (0.3, 0.8)
    right_bc: str = "modal"
    left_scale: float = 0.99
    modes: int = 3
    count: int = 8
    beta: str = "linearized"
    steps: int = 4096
    q_lo: float | None = None
    q_hi: float | None = None
    suite: tuple = ("all",)
    out: str | None = None
    format: str = "json"
    jobs: int = 1

    def as_dict(self) -> dict:
        d = asdict(self)
        d["fit_window"] = list(self.fit_window)
        d["suite"] = list(self.suite)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ParameterError(f"unknown configuration keys: {', '.join(unknown)}", rule="config keys")
        d = dict(d)
        if "fit_window" in d and d["fit_window"] is not None:
            d["fit_window"] = tuple(float(x) for x in d["fit_window"])
        if "suite" in d and d["suite"] is not None:
            d["suite"] = (d["suite"],) if isinstance(d["suite"], str) else tuple(d["suite"])
        return cls(**d).checked()

    def checked(self) -> "RunConfig":
        if self.format not in ("json", "csv"):
            raise ParameterError(f"format must be json or csv, got {self.format!r}", rule="format")
        if self.right_bc not in ("modal", "dirichlet"):
            raise ParameterError(f"right_bc must be modal or dirichlet, got {self.right_bc!r}",
                                 rule="right_bc")
        lo, hi = self.fit_window
        if not 0.0 <= lo < hi <= 1.0:
            raise ParameterError("fit window must satisfy 0 <= lo < hi <= 1", rule="fit_window")
        if min(self.grid_t, self.grid_theta, self.count, self.steps, self.modes, self.jobs) < 1:
            raise ParameterError("grid sizes, counts and jobs must be positive", rule="positive sizes")
        if not self.tol > 0:
            raise ParameterError("tol must be positive", rule="tol > 0")
        return self

    def params(self) -> ProblemParams:
        if self.n is None or self.a is None or self.q is None:
            raise ParameterError("--n, --a and --q are required", rule="n, a, q given")
        return ProblemParams(self.n, self.a, self.q).validate()

    def angular_grid(self) -> AngularGrid:
        try:
            return AngularGrid(steps=self.steps)
        except ValueError as exc:
            raise ParameterError(str(exc), rule="steps") from exc


# -- per-command computations -----------------------------------------------------
@dataclass
class Result:
    summary: dict
    tables: list  # (stem, header, rows)
    documents: list  # (stem, object)


def _constants(cfg: RunConfig) -> Result:
    p = cfg.params()
    return Result({"params": p.as_dict(), "constants": derive(p).as_dict()}, [], [])


def _profile(cfg: RunConfig) -> Result:
    p = cfg.params()
    c = derive(p)
    V = singular_profile(p, c, cfg.angular_grid())
    m = WeightedMeasure.double_exponential(p.n, p.a)
    mean = c.gamma * weighted_integral(V.sample(m)[0], m)
    VBq = V.boundary_value**p.q
    summary = {
        "params": p.as_dict(),
        "V_B": V.boundary_value,
        "flux": V.flux,
        "V_B_pow_q": VBq,
        "gamma_int_V": mean,
        "flux_identity_residual": max(abs(V.flux - VBq), abs(mean - VBq)) / VBq,
        "min_derivative_interior": float(np.min(V.derivative[1:-1])),
    }
    rows = list(V.to_rows())
    return Result(summary, [("profile", ["theta", "value", "derivative", "flux_variable"], rows)], [])


def _n_a(cfg: RunConfig) -> tuple[int, float]:
    if cfg.n is None or cfg.a is None:
        raise ParameterError("--n and --a are required", rule="n, a given")
    return check_n_a(cfg.n, cfg.a)


def _beta(cfg: RunConfig):
    n, a = _n_a(cfg)
    if cfg.beta == "hardy":
        return compute_Ca(n, a, cfg.angular_grid()), "C_a", None
    if cfg.beta in ("linearized", "stationary"):
        p = cfg.params()
        V = singular_profile(p, derive(p), cfg.angular_grid())
        k = p.q if cfg.beta == "linearized" else 1.0
        return k * V.boundary_value ** (p.q - 1.0), cfg.beta, p
    try:
        return float(cfg.beta), "value", None
    except ValueError as exc:
        raise ParameterError(
            f"beta must be linearized, stationary, hardy or a number, got {cfg.beta!r}", rule="beta"
        ) from exc


def _spectrum(cfg: RunConfig) -> Result:
    beta, kind, p = _beta(cfg)
    n, a = int(cfg.n), float(cfg.a)
    pairs = eigenpairs(beta, n, a, cfg.count, cfg.angular_grid())
    summary = {
        "n": n, "a": a, "q": None if p is None else float(p.q),
        "beta": beta, "beta_kind": kind,
        "eigenvalues": [e.lam for e in pairs],
    }
    table = [(e.index, e.lam, e.boundary_value, e.norm_residual, e.zero_count) for e in pairs]
    x = np.linspace(0.0, 1.0, 513)
    theta = HALF_PI * (1.0 - (1.0 - x) ** 2)  # denser toward the boundary
    cols = [e.profile.evaluate(theta=theta)[0] for e in pairs]
    samples = [(th, *(c[j] for c in cols)) for j, th in enumerate(theta)]
    return Result(summary, [
        ("eigenvalues", ["index", "lambda", "e_B", "norm_residual", "zero_count"], table),
        ("eigenfunctions", ["theta"] + [f"e{e.index}" for e in pairs], samples),
    ], [])


def _classify(cfg: RunConfig) -> Result:
    p = cfg.params()
    rep = jl_classify(p, tol=cfg.tol, grid=cfg.angular_grid())
    summary = {"params": p.as_dict(), "report": rep.as_dict()}
    if -1.0 < p.a < 0.0:
        summary["g_analysis"] = g_analysis(p.n, p.a).as_dict()
    return Result(summary, [], [])


def _critical(cfg: RunConfig) -> Result:
    n, a = _n_a(cfg)
    if cfg.q_lo is None or cfg.q_hi is None:
        raise ParameterError("--q-lo and --q-hi are required", rule="q bracket given")
    q0 = critical_exponent(n, a, cfg.q_lo, cfg.q_hi, tol=min(cfg.tol, 1e-6), grid=cfg.angular_grid())
    c = derive(ProblemParams(n, a, q0))
    return Result({"n": n, "a": a, "q_bracket": [cfg.q_lo, cfg.q_hi], "q_critical_JL": q0,
                   "ratio_to_q_crit": q0 / c.q_crit, "sigma": c.sigma}, [], [])


def default_horizon(sigma: float) -> float:
    """Long enough for ``sigma T >= 12`` and never shorter than 6."""
    if not sigma > 0:
        raise ParameterError("simulation needs sigma > 0, i.e. q > q_crit", rule="sigma > 0")
    return max(6.0, 12.0 / sigma)


def _simulate(cfg: RunConfig) -> Result:
    p = cfg.params()
    c = derive(p)
    rep = jl_classify(p, grid=cfg.angular_grid())
    T = cfg.horizon if cfg.horizon is not None else default_horizon(c.sigma)
    grid = CylinderGrid(nt=cfg.grid_t, ntheta=cfg.grid_theta, right_bc=cfg.right_bc,
                        newton_tol=cfg.tol)
    setup = CylinderSetup.build(p, c, grid)
    V = singular_profile(p, c, cfg.angular_grid())
    field = solve_nonlinear(p, c, V, cfg.left_scale, T, grid, rep.jl_class, setup)
    z = project_modes(field, setup.modes, cfg.modes)
    trace = energy_trace(field)
    summary = {
        "params": p.as_dict(),
        "jl_class": rep.jl_class.value,
        "horizon": T,
        "newton_iterations": field.diagnostics["newton_iterations"],
        "newton_residual": field.diagnostics["residual"],
        "max_abs_V_h_minus_V": field.diagnostics["max_abs_V_h_minus_V"],
        "energy_identity_residual": trace.identity_residual_after(0.1 * T),
        "decay_sup": decay_sup(field),
        "max_v_over_V": float(np.max(field.values / field.V_h[None, :])),
    }
    stationary = cfg.left_scale == 1.0
    fits = {}
    if stationary:
        summary["max_abs_v_minus_V_h"] = float(np.max(np.abs(field.values - field.V_h)))
    else:
        fit = fit_decay(z[0], rep, cfg.fit_window)
        fits["z1"] = fit.as_dict()
        if rep.jl_class is JLClass.SUPERCRITICAL:
            summary["expected_rate"] = rep.rho1_plus
            summary["rate_relative_error"] = fit.rate / rep.rho1_plus - 1.0
            summary["xi1"] = fit.coefficients[0]
        elif rep.jl_class is JLClass.CRITICAL:
            summary["expected_rate"] = -0.5 * c.sigma
            summary["xi1"], summary["xi2"] = fit.coefficients
        else:
            osc = fit_oscillation(z[0], cfg.fit_window)
            fits["z1_free_frequency"] = osc.as_dict()
            summary["expected_frequency"] = rep.K
            summary["frequency_relative_error"] = osc.frequency / rep.K - 1.0
            summary["free_rate"] = osc.rate
            summary["expected_rate"] = -0.5 * c.sigma
    t = field.t_grid
    modal_rows = [(t[k], *(zi.values[k] for zi in z)) for k in range(t.size)]
    energy_rows = list(zip(trace.t, trace.E, trace.dissipation,
                           np.concatenate([[math.nan], trace.identity_residual, [math.nan]])))
    tables = [
        ("field", ["t", "theta", "v", "w"], field.long_rows()),
        ("modes", ["t"] + [f"z{i + 1}" for i in range(len(z))], modal_rows),
        ("energy", ["t", "E", "dissipation", "identity_residual"], energy_rows),
    ]
    docs = [("fit", {"window": list(cfg.fit_window), "fits": fits, "report": rep.as_dict()})]
    return Result(summary, tables, docs)


def _verify(cfg: RunConfig) -> Result:
    checks = run_suite(list(cfg.suite))
    rows = [(ch.suite, ch.name, "PASS" if ch.passed else "FAIL", ch.value, ch.threshold, ch.error or "")
            for ch in checks]
    summary = {"passed": all(ch.passed for ch in checks), "checks": [ch.as_dict() for ch in checks]}
    return Result(summary, [("checks", ["suite", "name", "status", "value", "threshold", "error"], rows)], [])


RUNNERS = {
    "constants": _constants, "profile": _profile, "spectrum": _spectrum, "classify": _classify,
    "critical": _critical, "simulate": _simulate, "verify": _verify,
}


# -- output ----------------------------------------------------------------------
def _write(result: Result, command: str, cfg: RunConfig, root, started=None) -> list[str]:
    od = OutputDir(root, command, cfg.as_dict(), started)
    od.write_json("summary.json", result.summary)
    for stem, header, rows in result.tables:
        if cfg.format == "csv":
            od.write_csv(f"{stem}.csv", header, rows)
        else:
            od.write_json(f"{stem}.json", {"columns": list(header), "rows": [list(r) for r in rows]})
    for stem, obj in result.documents:
        od.write_json(f"{stem}.json", obj)
    od.write_manifest()
    return sorted(set(od.files)) + ["manifest.json"]


def _error_summary(exc: JLFluxError) -> dict:
    return {"error": exc.to_dict()}


def _run_tuple(args) -> tuple[dict, int]:
    command, cfg = args
    tag = f"n{cfg.n}_a{cfg.a!r}_q{cfg.q!r}"
    started = now()
    try:
        res = RUNNERS[command](cfg)
        files = []
        if cfg.out:
            files = [f"{tag}/{f}" for f in _write(res, command, cfg, Path(cfg.out) / tag, started)]
        return {"tuple": tag, "status": 0, "files": files, **res.summary}, 0
    except JLFluxError as exc:
        return {"tuple": tag, "status": exc.exit_status, **_error_summary(exc)}, exc.exit_status


def read_sweep(path) -> list[tuple[int, float, float]]:
    try:
        with open(path, newline="") as fh:
            rd = csv.DictReader(fh)
            if rd.fieldnames is None or not {"n", "a", "q"} <= set(rd.fieldnames):
                raise ParameterError("sweep file needs a header with columns n, a, q", rule="sweep header")
            return [(int(r["n"]), float(r["a"]), float(r["q"])) for r in rd]
    except OSError as exc:
        raise ParameterError(f"cannot read sweep file: {exc}", rule="sweep file") from exc
    except ValueError as exc:
        raise ParameterError(f"malformed sweep file: {exc}", rule="sweep file") from exc


def _sweep(command: str, cfg: RunConfig, path, started) -> tuple[dict, int]:
    if command not in SWEEPABLE:
        raise ParameterError(f"{command} does not take a sweep file", rule="sweepable command")
    jobs = [(command, replace(cfg, n=n, a=a, q=q)) for n, a, q in read_sweep(path)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(_run_tuple, jobs))
    else:
        results = [_run_tuple(j) for j in jobs]
    rows = [r for r, _ in results]
    status = max([s for _, s in results] + [0])
    summary = {"command": command, "results": rows}
    if cfg.out:
        od = OutputDir(cfg.out, f"{command} sweep", cfg.as_dict(), started)
        for r in rows:
            for f in r.get("files", []):
                od.register(f)
        od.write_json("sweep.json", summary)
        od.write_manifest({"tuples": len(rows), "failed": sum(1 for r in rows if r["status"])})
    return summary, status


# -- argument parsing ------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("problem and run settings")
    g.add_argument("--n", type=int, help="dimension n >= 3")
    g.add_argument("--a", type=float, help="weight exponent in (-1, 1), a != 0")
    g.add_argument("--q", type=float, help="boundary exponent q > 1")
    g.add_argument("--grid-t", dest="grid_t", type=int, help="time steps (default 400)")
    g.add_argument("--grid-theta", dest="grid_theta", type=int, help="angular cells (default 64)")
    g.add_argument("--horizon", type=float, help="cylinder length T (default max(6, 12/sigma))")
    g.add_argument("--tol", type=float,
                   help="J band for classify, Newton tolerance for simulate, bisection width for critical")
    g.add_argument("--out", help="output directory")
    g.add_argument("--format", choices=("json", "csv"), help="table format (default json)")
    g.add_argument("--sweep-file", dest="sweep_file", help="CSV with columns n,a,q; one run per row")
    g.add_argument("--jobs", type=int, help="worker processes for sweeps (default 1)")
    g.add_argument("--config", help="JSON configuration file (flags take precedence)")
    g.add_argument("--steps", type=int, help="steps of the angular integrator (default 4096)")

    ap = argparse.ArgumentParser(prog="jlflux", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], argument_default=argparse.SUPPRESS, help="closed-form constants of (n, a, q)")
    sub.add_parser("profile", parents=[common], argument_default=argparse.SUPPRESS, help="singular profile V(theta)")
    sp = sub.add_parser("spectrum", parents=[common], argument_default=argparse.SUPPRESS, help="Robin eigenpairs")
    sp.add_argument("--count", type=int, help="number of eigenpairs (default 8)")
    sp.add_argument("--beta", help="linearized (q V_B^(q-1)), stationary (V_B^(q-1)), hardy (C_a) or a number")
    sub.add_parser("classify", parents=[common], argument_default=argparse.SUPPRESS, help="Joseph-Lundgren class and expansion coefficients")
    cp = sub.add_parser("critical", parents=[common], argument_default=argparse.SUPPRESS, help="bisection for the exponent where J(q) = 0")
    cp.add_argument("--q-lo", dest="q_lo", type=float, help="lower end of the q bracket")
    cp.add_argument("--q-hi", dest="q_hi", type=float, help="upper end of the q bracket")
    sm = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS, help="nonlinear cylinder run and decay fits")
    sm.add_argument("--right-bc", dest="right_bc", choices=("modal", "dirichlet"),
                    help="condition at t = T (default modal)")
    sm.add_argument("--left-scale", dest="left_scale", type=float,
                    help="left datum as a multiple of V (default 0.99)")
    sm.add_argument("--modes", type=int, help="modal coordinates to record (default 3)")
    sm.add_argument("--fit-window", dest="fit_window", type=float, nargs=2, metavar=("LO", "HI"),
                    help="fit window as fractions of T (default 0.3 0.8)")
    vp = sub.add_parser("verify", parents=[common], argument_default=argparse.SUPPRESS, help="run the invariant suites")
    vp.add_argument("--suite", action="append", choices=["all", *SUITES],
                    help="suite to run (repeatable; default all)")
    return ap


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = {}
    cfg_path = getattr(ns, "config", None)
    if cfg_path:
        try:
            values.update(json.loads(Path(cfg_path).read_text()))
        except (OSError, ValueError) as exc:
            raise ParameterError(f"cannot read config file: {exc}", rule="config file") from exc
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "sweep_file")}
    values.update(flags)
    return RunConfig.from_dict(values)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    started = now()
    try:
        try:
            cfg = resolve_config(ns)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, JLFluxError):
                raise
            raise ParameterError(f"invalid configuration: {exc}", rule="config values") from exc
        sweep = getattr(ns, "sweep_file", None)
        if sweep:
            summary, status = _sweep(ns.command, cfg, sweep, started)
        else:
            res = RUNNERS[ns.command](cfg)
            if cfg.out:
                _write(res, ns.command, cfg, cfg.out, started)
            summary = res.summary
            status = 3 if ns.command == "verify" and not summary["passed"] else 0
    except JLFluxError as exc:
        sys.stdout.write(dumps(_error_summary(exc)))
        print(f"jlflux: error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    sys.stdout.write(dumps(summary))
    return status


if __name__ == "__main__":
    sys.exit(main())
