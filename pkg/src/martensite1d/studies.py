"""
Drivers for single runs and the three studies (kappa continuation, grid
refinement, sharp vs diffuse interface), plus the invariant check behind
``martensite1d check``.

Every driver takes a ``Config`` and an optional output directory.  Output
files are CSV with a header row and 17 significant digits, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import tensor_core as tc
from .config import (
    Config,
    config_text,
    make_initial,
    make_model,
    make_run_config,
)
from .diagnostics import (
    ViscositySummary,
    dissipation_terms,
    fmt,
    holder_seminorm,
    viscosity_check,
)
from .elasticity import fd_elastic_oracle
from .errors import ConfigError
from .evolution import run
from .sharp_interface import (
    SHARP_COLUMNS,
    SharpState,
    compare_diffuse_sharp,
    diffuse_profile,
    sharp_trajectory,
)

log = logging.getLogger(__name__)

STATE_COLUMNS = ("t", "x", "S", "u1", "u2", "u3", "T11", "T22", "T33", "T12", "T13", "T23")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_summary(path, items: dict):
    """``key = value`` lines; booleans become pass/fail."""
    lines = []
    for k, v in items.items():
        if isinstance(v, (bool, np.bool_)):
            v = "pass" if v else "fail"
        elif isinstance(v, (float, int, np.floating, np.integer)):
            v = fmt(v)
        lines.append(f"{k} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")


def state_rows(trajectory, x):
    for st in trajectory:
        T = tc.entries(st.T)
        for i in range(x.size):
            yield (st.t, x[i], st.S[i], *st.u[i], *T[i])


# ---------------------------------------------------------------------------
# single run


class BoundsMonitor:
    """Per-step maximum-principle bound ``min(0, min S0) <= S <= max(0, max S0)``."""

    def __init__(self, S0, slack: float = 1e-8):
        self.lo = min(0.0, float(np.min(S0))) - slack
        self.hi = max(0.0, float(np.max(S0))) + slack
        self.worst = 0.0

    def __call__(self, prev, new, dt):
        over = max(float(np.max(new.S)) - self.hi, self.lo - float(np.min(new.S)), 0.0)
        self.worst = max(self.worst, over)

    @property
    def passed(self) -> bool:
        return self.worst == 0.0


@dataclass
class RunResult:
    trajectory: list
    report: object
    monitors: dict

    @property
    def passed(self) -> bool:
        return all(v for v in self.monitors.values() if isinstance(v, bool))


def energy_tolerance(report) -> float:
    return 1e-8 * max(abs(report.rows[0]["free_energy"]), 1.0)


def run_simulation(cfg: Config, out: Optional[Path] = None, model=None) -> RunResult:
    """
    One coupled run of the configured scenario.

    Monitors: the maximum-principle bound at every step and, without load,
    energy non-increase up to ``1e-8 max(E(0), 1)`` per step.
    """
    model = model or make_model(cfg)
    S0 = make_initial(cfg, model.grid)
    bounds = BoundsMonitor(S0)
    trajectory, report = run(S0, model, make_run_config(cfg), monitor=bounds)
    monitors = {"max_principle": bounds.passed, "max_principle_excess": bounds.worst}
    if model.load is None:
        monitors["energy_decay"] = bool(report.summary["max_energy_increase"] <= energy_tolerance(report))
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.cfg").write_text(config_text(cfg))
        with (out / "diagnostics.csv").open("w", newline="") as fh:
            report.to_csv(fh)
        write_csv(out / "states.csv", STATE_COLUMNS, state_rows(trajectory, model.grid.x))
        write_summary(out / "summary.txt", {**report.summary, **monitors})
    return RunResult(trajectory, report, monitors)


# ---------------------------------------------------------------------------
# kappa continuation


@dataclass
class KappaStudyResult:
    kappas: np.ndarray
    d: np.ndarray
    max_sup_S: np.ndarray
    max_grad_sq: np.ndarray
    max_holder: np.ndarray
    viscosity: ViscositySummary

    @staticmethod
    def _spread(v) -> float:
        return float((v.max() - v.min()) / v.max()) if v.max() > 0 else 0.0

    @property
    def d_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.d) < 0))

    @property
    def sup_S_spread(self) -> float:
        return self._spread(self.max_sup_S)

    @property
    def grad_sq_spread(self) -> float:
        return self._spread(self.max_grad_sq)

    def rows(self):
        for n, k in enumerate(self.kappas):
            yield (n, k, self.d[n - 1] if n else 0.0, self.max_sup_S[n], self.max_grad_sq[n], self.max_holder[n])


def kappa_study(cfg: Config, out: Optional[Path] = None, trajectories: Optional[dict] = None) -> KappaStudyResult:
    """
    Run the scenario for each ``kappa`` of ``cfg.kappa_sequence`` on one grid.

    ``d[n-1] = max over frames of |S^{k_n} - S^{k_{n-1}}|_inf`` for
    ``n = 1 .. len - 1``.  The viscosity check runs on the smallest-kappa
    trajectory with its own stress.  Every step is stored, and a fixed
    ``dt`` is required so that all runs share their frames.  Trajectories are stored in
    ``trajectories`` (keyed by kappa) if a dict is passed.
    """
    if cfg.dt is None:
        raise ConfigError("kappa study needs a fixed dt so that output frames coincide")
    if len(cfg.kappa_sequence) < 3:
        raise ConfigError("kappa study needs at least three kappa values")
    kappas = np.asarray(cfg.kappa_sequence, dtype=float)
    fields_ = []
    sup_S, gsq, hold = [], [], []
    model = None
    for k in kappas:
        model = make_model(cfg, kappa=float(k))
        traj, report = run(make_initial(cfg, model.grid), model, make_run_config(cfg, output_stride=1))
        if trajectories is not None:
            trajectories[float(k)] = (traj, model)
        S = np.stack([s.S for s in traj])
        fields_.append(S)
        sup_S.append(float(report.column("sup_abs_S").max()))
        gsq.append(float(report.column("grad_sq").max()))
        hold.append(max(holder_seminorm(s, model.grid.x) for s in S))
        log.info("kappa %g done", k)
    d = np.array([np.max(np.abs(fields_[n] - fields_[n - 1])) for n in range(1, len(kappas))])
    visc = viscosity_check(traj, model, n_tests=cfg.viscosity_tests, seed=cfg.seed)
    result = KappaStudyResult(kappas, d, np.array(sup_S), np.array(gsq), np.array(hold), visc)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.cfg").write_text(config_text(cfg))
        write_csv(out / "kappa_study.csv", ("n", "kappa", "d", "max_sup_abs_S", "max_grad_sq", "max_holder"), result.rows())
        write_summary(out / "summary.txt", kappa_summary(result))
    return result


def kappa_summary(result: KappaStudyResult) -> dict:
    v = result.viscosity
    return {
        "d_last": float(result.d[-1]),
        "d_decreasing": result.d_decreasing,
        "sup_S_spread": result.sup_S_spread,
        "grad_sq_spread": result.grad_sq_spread,
        "monitors_uniform": result.sup_S_spread < 0.1 and result.grad_sq_spread < 0.1,
        "viscosity_tests": v.n_tests,
        "viscosity_touchings": v.n_touch_max + v.n_touch_min,
        "viscosity_skipped": v.n_skipped,
        "viscosity_max_violation": v.max_violation,
        "viscosity_tol": v.tol,
        "viscosity_within_tol": v.passed,
    }


# ---------------------------------------------------------------------------
# grid refinement


@dataclass
class GridStudyResult:
    nodes: tuple
    dts: tuple
    errors: np.ndarray
    orders: np.ndarray


def grid_study(cfg: Config, out: Optional[Path] = None) -> GridStudyResult:
    """
    Self-convergence of ``S(t_end)`` on nested grids with ``dt ~ dx^2``.

    ``cfg.grid_sequence`` must consist of nested grids (``N_{k+1} - 1 =
    2 (N_k - 1)``); the coarsest uses ``cfg.grid_dt``.  ``errors[k]`` is the
    max difference between grids ``k`` and ``k + 1`` on the coarse nodes and
    ``orders[k] = log2(errors[k] / errors[k + 1])``.
    """
    nodes = tuple(cfg.grid_sequence)
    if len(nodes) < 3:
        raise ConfigError("grid study needs at least three grids")
    for n0, n1 in zip(nodes, nodes[1:]):
        if n1 - 1 != 2 * (n0 - 1):
            raise ConfigError(f"grids {n0} and {n1} are not nested by halving")
    finals, dts = [], []
    for N in nodes:
        dt = cfg.grid_dt * ((nodes[0] - 1) / (N - 1)) ** 2
        model = make_model(cfg, nodes=N)
        traj, _ = run(make_initial(cfg, model.grid), model, make_run_config(cfg, dt=dt, output_stride=10**9))
        finals.append(traj[-1].S)
        dts.append(dt)
    errors = np.array([np.max(np.abs(finals[k] - finals[k + 1][::2])) for k in range(len(nodes) - 1)])
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log2(errors[:-1] / errors[1:])
    result = GridStudyResult(nodes, tuple(dts), errors, orders)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.cfg").write_text(config_text(cfg))
        rows = []
        for k, N in enumerate(nodes):
            err = errors[k] if k < errors.size else float("nan")
            order = orders[k - 1] if 1 <= k <= orders.size else float("nan")
            rows.append((N, dts[k], err, order))
        write_csv(out / "grid_study.csv", ("nodes", "dt", "error_to_next", "order"), rows)
        write_summary(out / "summary.txt", {"min_order": float(np.nanmin(orders))})
    return result


# ---------------------------------------------------------------------------
# sharp vs diffuse


@dataclass
class SharpCompareResult:
    nus: np.ndarray
    dx: float
    stationary_error: np.ndarray
    moving_error: np.ndarray
    details: dict = field(default_factory=dict)

    @property
    def stationary_ok(self) -> bool:
        return bool(np.all(self.stationary_error <= self.dx))

    @property
    def moving_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.moving_error) < 0))


def _compare_one(cfg: Config, nu: float, misfit, tilt: float):
    cfg = cfg.replace(nu=nu, misfit=tuple(misfit), tilt=tilt, nodes=cfg.sharp_nodes, load=(0.0, 0.0, 0.0))
    model = make_model(cfg)
    S0 = diffuse_profile(cfg.sharp_z0, model.grid, nu, cfg.theta)
    rc = make_run_config(cfg, t_end=cfg.sharp_t_end, dt=None, output_stride=10)
    traj, _ = run(S0, model, rc)
    records, exc = sharp_trajectory(SharpState(0.0, cfg.sharp_z0), model, [s.t for s in traj], cfg.sharp_dt)
    if exc is not None:
        raise exc
    return compare_diffuse_sharp(traj, records, model.grid.x), records


def sharp_compare(cfg: Config, out: Optional[Path] = None) -> SharpCompareResult:
    """
    Diffuse runs started from the equilibrium front against the sharp ODE.

    Stationary case: no misfit and a symmetric well.  Moving case: the
    configured misfit with ``cfg.sharp_tilt``.  Both for every ``nu`` of
    ``cfg.sharp_nu`` on ``cfg.sharp_nodes`` nodes.
    """
    nus = np.asarray(cfg.sharp_nu, dtype=float)
    stat, moving, details = [], [], {}
    for nu in nus:
        pe_s, _ = _compare_one(cfg, nu, (0.0,) * 6, 0.0)
        pe_m, rec = _compare_one(cfg, nu, cfg.misfit, cfg.sharp_tilt)
        stat.append(pe_s.max_error)
        moving.append(pe_m.max_error)
        details[float(nu)] = (pe_s, pe_m, rec)
    dx = (cfg.domain_d - cfg.domain_a) / (cfg.sharp_nodes - 1)
    result = SharpCompareResult(nus, dx, np.array(stat), np.array(moving), details)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.cfg").write_text(config_text(cfg))
        write_csv(
            out / "sharp_compare.csv",
            ("nu", "stationary_max_error", "moving_max_error"),
            zip(nus, stat, moving),
        )
        for k, nu in enumerate(nus):
            pe_s, pe_m, rec = details[float(nu)]
            write_csv(out / f"sharp_{k}.csv", SHARP_COLUMNS, (r.row() for r in rec))
            write_csv(
                out / f"positions_{k}.csv",
                ("t", "z_diffuse", "z_sharp", "error"),
                zip(pe_m.t, pe_m.z_diffuse, pe_m.z_sharp, pe_m.error),
            )
        write_summary(
            out / "summary.txt",
            {"dx": dx, "stationary_within_dx": result.stationary_ok, "moving_error_decreasing": result.moving_decreasing},
        )
    return result


# ---------------------------------------------------------------------------
# invariant check


def check(cfg: Config, out: Optional[Path] = None) -> dict:
    """
    Invariant suite on one configuration; returns ``{name: bool}``.

    Projection idempotence and D-orthogonality, the double-well sign
    pattern, closed form vs direct elastic solve on the initial data, the
    run monitors, and the nodewise dissipation
    identity on the initial state.
    """
    model = make_model(cfg)
    proj, params, grid = model.proj, model.params, model.grid
    scale = max(1.0, float(np.abs(params.D.matrix).max()) * max(1.0, float(np.abs(params.misfit).max())))
    results = {}
    again = tc.build_projection(params.D, proj.eps_star)
    results["projection_idempotent"] = bool(np.allclose(again.eps_star, proj.eps_star, rtol=0, atol=1e-12 * scale))
    results["projection_orthogonal"] = bool(np.max(np.abs(proj.residual_orthogonality())) <= 1e-12 * scale)
    results["double_well_sign_pattern"] = params.well.sign_pattern_ok()

    S0 = make_initial(cfg, grid)
    from .evolution import prepare_initial

    S0 = prepare_initial(S0, params.kappa, grid)
    closed = model.elastic(S0, 0.0)
    oracle = fd_elastic_oracle(S0, model.load_at(0.0), params, grid)
    ref = max(float(np.abs(oracle.T).max()), 1e-300)
    results["elastic_oracle_agreement"] = bool(np.abs(closed.T - oracle.T).max() / ref <= 1e-6) or not np.any(oracle.T)

    res = run_simulation(cfg, out=out, model=model)
    results.update({k: v for k, v in res.monitors.items() if isinstance(v, bool)})

    T_dot = tc.dot(closed.T, params.misfit)
    terms = dissipation_terms(S0, T_dot, params, grid)
    mag = np.abs(terms["sharp"]).max() + np.abs(terms["kappa"]).max() + 1e-300
    results["dissipation_identity"] = bool(
        np.abs(terms["product"] - terms["sharp"] - terms["kappa"]).max() <= 1e-12 * mag
        and np.all(terms["sharp"] <= 0.0)
    )
    if out is not None:
        write_summary(Path(out) / "check.txt", results)
    return results
