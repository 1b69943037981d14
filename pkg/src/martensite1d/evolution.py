"""
Time integration of the regularized order-parameter equation

    S_t = c nu |S_x|_k S_xx + c (T.misfit - psi'(S)) (|S_x|_k - k)

coupled to the quasi-static elastic solve.

Spatial discretization
----------------------
The diffusion coefficient ``c nu |dS|_k`` uses the central difference
``dS``.  In the reaction factor ``|q|_k - k`` the slope is limited against
the upwind (Godunov) slope magnitude ``U`` picked by the sign of the driving
force: ``q = min(|dS|, 2 U)``.  In smooth monotone regions this is exactly
the central slope; at discrete extrema the reaction switches off, which is
what makes the discrete maximum principle hold.  ``gradient="central"``
uses the plain central slope everywhere.

Time stepping
-------------
``"semi-implicit"`` (default): reaction explicit, diffusion implicit with
the coefficient frozen at the old level (one tridiagonal M-matrix solve).
``"explicit"``: forward Euler.  Both re-solve elasticity afterwards.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import linalg, ndimage
from scipy.interpolate import interp1d

from . import tensor_core as tc
from .elasticity import ElasticSolution, solve_correction, solve_elastic
from .errors import CflViolation, ConfigError, IncompatibleData, NoConvergence, SingularSystem
from .grid import Grid1D
from .material import MaterialParams, abs_kappa

log = logging.getLogger(__name__)

Load = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class State:
    """Time ``t``, nodal order parameter ``S`` and the elastic fields."""

    t: float
    S: np.ndarray
    elastic: ElasticSolution

    @property
    def u(self) -> np.ndarray:
        return self.elastic.u

    @property
    def T(self) -> np.ndarray:
        return self.elastic.T


@dataclass(frozen=True)
class RunConfig:
    """
    Parameters of a single run.

    ``dt=None`` selects adaptive steps ``cfl * stability_limit`` recomputed
    every step.  ``output_stride`` is the number of steps between stored
    states (the first and last state are always stored).
    """

    t_end: float = 0.5
    cfl: float = 0.5
    dt: Optional[float] = None
    scheme: str = "semi-implicit"
    gradient: str = "limited"
    output_stride: int = 1
    fixed_point: bool = False
    fp_tol: float = 1e-10
    fp_max_iter: int = 50
    mollify: bool = False

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if not 0 < self.cfl <= 1:
            raise ConfigError(f"cfl safety factor must lie in (0, 1], got {self.cfl}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.scheme not in ("semi-implicit", "explicit"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.gradient not in ("limited", "central"):
            raise ConfigError(f"unknown gradient discretization {self.gradient!r}")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ConfigError(f"output_stride must be a positive integer, got {self.output_stride}")
        if not self.fp_tol > 0:
            raise ConfigError(f"fp_tol must be positive, got {self.fp_tol}")


@dataclass(frozen=True, eq=False)
class CoupledModel:
    """
    Material, grid and data of one coupled problem.

    Parameters
    ----------
    params : MaterialParams
    grid : Grid1D
    load : callable ``(t, x) -> (n, 3)`` or None
        Body force; None means no load.
    source : callable ``(t, x) -> (n,)`` or None
        Extra forcing added to the S equation (manufactured solutions).
    gradient : {"limited", "central"}
    """

    params: MaterialParams
    grid: Grid1D
    load: Optional[Load] = None
    source: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    gradient: str = "limited"
    proj: tc.ProjectionData = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "proj", tc.build_projection(self.params.D, self.params.misfit))

    def replace(self, **changes) -> "CoupledModel":
        return replace(self, **changes)

    def load_at(self, t: float):
        if self.load is None:
            return None
        b = np.asarray(self.load(t, self.grid.x), dtype=float)
        return np.broadcast_to(b, (self.grid.n, 3)).copy()

    def elastic(self, S, t: float, lam: float = 1.0) -> ElasticSolution:
        b = self.load_at(t)
        if b is not None and lam != 1.0:
            b = lam * b
        return solve_elastic(S, solve_correction(b, self.grid, self.proj), self.proj, self.grid, lam)

    def state(self, t: float, S) -> State:
        S = np.array(S, dtype=float)
        return State(t=t, S=S, elastic=self.elastic(S, t))


# ---------------------------------------------------------------------------
# mollification and initial data


@dataclass(frozen=True)
class Mollifier:
    """
    Radial bump ``exp(-1/(1 - r^2))`` in ``(t/width, x/width)``, unit mass.

    Supported in the disc of radius ``width``.
    """

    width: float

    def kernel(self, t, x):
        r2 = np.asarray((np.asarray(t) ** 2 + np.asarray(x) ** 2) / self.width**2, dtype=float)
        out = np.zeros(r2.shape)
        inside = r2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    def stencil(self, dt: float, dx: float) -> np.ndarray:
        """Discrete weights on a (dt, dx) lattice, normalized to unit sum."""
        mt = int(np.floor(self.width / dt))
        mx = int(np.floor(self.width / dx))
        tt, xx = np.meshgrid(np.arange(-mt, mt + 1) * dt, np.arange(-mx, mx + 1) * dx, indexing="ij")
        w = self.kernel(tt, xx)
        if w.sum() == 0.0:
            w = np.zeros_like(w)
            w[mt, mx] = 1.0
        return w / w.sum()


def mollify(samples, kappa: float, x, t) -> np.ndarray:
    """
    Space-time convolution of ``samples`` with the width-``kappa`` bump.

    Parameters
    ----------
    samples : array_like, shape (len(t), len(x)) or (len(t), len(x), k)
        Values on a uniform (t, x) lattice.  Outside the lattice the data are
        continued by their edge values.
    """
    samples = np.asarray(samples, dtype=float)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    dt = t[1] - t[0] if t.size > 1 else np.inf
    dx = x[1] - x[0]
    w = Mollifier(kappa).stencil(dt, dx)
    if samples.ndim == 2:
        return ndimage.convolve(samples, w, mode="nearest")
    return np.stack(
        [ndimage.convolve(samples[..., k], w, mode="nearest") for k in range(samples.shape[-1])],
        axis=-1,
    )


def mollified_load(load: Load, kappa: float, grid: Grid1D, t_end: float) -> Load:
    """Sample ``load`` on a space-time lattice, mollify, and interpolate in time."""
    nt = max(int(np.ceil(8 * t_end / kappa)), 8) + 1
    t = np.linspace(0.0, t_end, nt)
    samples = np.stack([np.broadcast_to(load(tk, grid.x), (grid.n, 3)) for tk in t])
    smooth = mollify(samples, kappa, grid.x, t)
    interp = interp1d(t, smooth, axis=0, bounds_error=False, fill_value=(smooth[0], smooth[-1]))

    def smoothed(tq, xq):
        return interp(tq)

    return smoothed


def _smoothstep(s):
    """C-infinity transition from 0 (s <= 0) to 1 (s >= 1)."""
    s = np.asarray(s, dtype=float)
    f = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    g = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return f / (f + g)


def boundary_cutoff(kappa: float, grid: Grid1D) -> np.ndarray:
    """
    Smooth cutoff vanishing on the two outermost nodes at each end and equal
    to one at distance ``kappa + 2 dx`` or more from the boundary.
    """
    dist = np.minimum(grid.x - grid.a, grid.d - grid.x)
    return _smoothstep((dist - 2.0 * grid.dx) / kappa)


def prepare_initial(S0, kappa: float, grid: Grid1D, atol: float = 1e-12) -> np.ndarray:
    """
    Compatible initial data: ``S0`` times a smooth boundary cutoff.

    The result vanishes, with its one-sided first and second differences, at
    both ends.  Raises ``IncompatibleData`` if ``S0`` is nonzero at an end.
    """
    S0 = np.asarray(S0, dtype=float)
    if S0.shape != (grid.n,):
        raise ValueError(f"initial data must have shape {(grid.n,)}, got {S0.shape}")
    if abs(S0[0]) > atol or abs(S0[-1]) > atol:
        raise IncompatibleData(
            f"initial order parameter must vanish at the boundary, got {S0[0]!r}, {S0[-1]!r}"
        )
    out = S0 * boundary_cutoff(kappa, grid)
    out[0] = out[-1] = 0.0
    return out


# ---------------------------------------------------------------------------
# spatial operator


def central_slope(S, dx):
    """Central first difference at interior nodes (zeros at the ends)."""
    q = np.zeros_like(S)
    q[1:-1] = (S[2:] - S[:-2]) / (2.0 * dx)
    return q


def second_difference(S, dx):
    r = np.zeros_like(S)
    r[1:-1] = (S[2:] - 2.0 * S[1:-1] + S[:-2]) / dx**2
    return r


def upwind_slope(S, drive, dx):
    """
    Godunov slope magnitude for ``S_t = drive * G(|S_x|)`` with G increasing.

    Positive drive raises S, so information comes from higher neighbours;
    negative drive from lower ones.
    """
    U = np.zeros_like(S)
    dm = (S[1:-1] - S[:-2]) / dx
    dp = (S[2:] - S[1:-1]) / dx
    up = np.hypot(np.minimum(dm, 0.0), np.maximum(dp, 0.0))
    down = np.hypot(np.maximum(dm, 0.0), np.minimum(dp, 0.0))
    U[1:-1] = np.where(drive[1:-1] >= 0.0, up, down)
    return U


def reaction_slope(S, drive, dx, gradient="limited"):
    q = np.abs(central_slope(S, dx))
    if gradient == "central":
        return q
    return np.minimum(q, 2.0 * upwind_slope(S, drive, dx))


def driving_force(S, T_dot, params: MaterialParams):
    """``T.misfit - psi'(S)``."""
    return np.asarray(T_dot) - params.well.dpsi(S)


def _split_rhs(S, T_dot, params, grid, gradient):
    dx = grid.dx
    k = params.kappa
    q = central_slope(S, dx)
    r = second_difference(S, dx)
    drive = driving_force(S, T_dot, params)
    qr = reaction_slope(S, drive, dx, gradient)
    diffusion = params.c * params.nu * abs_kappa(q, k) * r
    reaction = params.c * drive * (abs_kappa(qr, k) - k)
    diffusion[[0, -1]] = 0.0
    reaction[[0, -1]] = 0.0
    return diffusion, reaction


def rhs_regularized(S, T, params: MaterialParams, grid: Grid1D, gradient: str = "limited"):
    """
    Semi-discrete right-hand side at the nodes (zero at the boundary nodes).

    ``T`` is either the nodal stress (n, 6) or the precomputed ``T.misfit`` (n,).
    With ``gradient="central"`` the value at each interior node equals
    ``hamiltonian_regularized(T.misfit, S, dS, d2S)``.
    """
    S = np.asarray(S, dtype=float)
    T = np.asarray(T, dtype=float)
    T_dot = tc.dot(T, params.misfit) if T.ndim == 2 else T
    diffusion, reaction = _split_rhs(S, T_dot, params, grid, gradient)
    return diffusion + reaction


def diffusion_coefficient(S, params: MaterialParams, grid: Grid1D):
    """Nodal ``c nu |dS|_k / dx^2``."""
    return params.c * params.nu * abs_kappa(central_slope(S, grid.dx), params.kappa) / grid.dx**2


def stability_limit(S, T_dot, params: MaterialParams, grid: Grid1D, scheme: str = "explicit"):
    """
    Largest step for which the scheme is monotone.

    explicit:       ``1 / max(2 c nu |dS|_k / dx^2 + 2 c |F| / dx)``
    semi-implicit:  ``dx / (2 c max |F|)`` (diffusion is unconditional)

    with ``F = T.misfit - psi'(S)`` the driving force.
    """
    drive = np.abs(driving_force(S, T_dot, params))[1:-1]
    react = 2.0 * params.c * drive / grid.dx
    if scheme == "explicit":
        rate = 2.0 * diffusion_coefficient(S, params, grid)[1:-1] + react
    else:
        rate = react
    m = float(rate.max()) if rate.size else 0.0
    return np.inf if m == 0.0 else 1.0 / m


def _implicit_diffusion(S_tilde, coef, dt):
    """Solve ``(I - dt L) S = S_tilde`` with Dirichlet zeros; L = coef * d2."""
    n = S_tilde.size
    ab = np.zeros((3, n))
    ab[1] = 1.0
    a = dt * coef[1:-1]
    ab[1, 1:-1] = 1.0 + 2.0 * a
    ab[0, 2:] = -a  # super-diagonal of rows 1..n-2
    ab[2, :-2] = -a  # sub-diagonal of rows 1..n-2
    rhs = S_tilde.copy()
    rhs[0] = rhs[-1] = 0.0
    try:
        out = linalg.solve_banded((1, 1), ab, rhs)
    except linalg.LinAlgError as exc:
        raise SingularSystem("implicit diffusion system is singular") from exc
    out[0] = out[-1] = 0.0
    return out


def advance_S(S, T_dot, dt, model: CoupledModel, mode: str = "semi-implicit", t: float = 0.0):
    """One parabolic step of the order parameter with the stress held fixed."""
    params, grid = model.params, model.grid
    diffusion, reaction = _split_rhs(S, T_dot, params, grid, model.gradient)
    forcing = reaction
    if model.source is not None:
        extra = np.asarray(model.source(t, grid.x), dtype=float).copy()
        extra[[0, -1]] = 0.0
        forcing = forcing + extra
    if mode == "explicit":
        new = S + dt * (diffusion + forcing)
        new[0] = new[-1] = 0.0
        return new
    if mode != "semi-implicit":
        raise ValueError(f"unknown step mode {mode!r}")
    return _implicit_diffusion(S + dt * forcing, diffusion_coefficient(S, params, grid), dt)


def step(state: State, dt: float, model: CoupledModel, mode: str = "semi-implicit") -> State:
    """
    Advance the coupled state by ``dt``.

    The stress of ``state`` drives the reaction term; elasticity is re-solved
    from the new order parameter.  In explicit mode ``CflViolation`` is
    raised above the monotonicity limit.  Semi-implicit steps of any size
    are taken, with a warning above the reaction limit, beyond which the
    discrete maximum principle is no longer guaranteed.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    params = model.params
    T_dot = tc.dot(state.T, params.misfit)
    limit = stability_limit(state.S, T_dot, params, model.grid, mode)
    if dt > limit * (1.0 + 1e-12):
        if mode == "explicit":
            raise CflViolation(f"dt={dt:.3e} exceeds the explicit limit {limit:.3e}")
        log.warning("t=%.6g: dt=%.3e exceeds the semi-implicit reaction limit %.3e", state.t, dt, limit)
    S_new = advance_S(state.S, T_dot, dt, model, mode, t=state.t)
    t_new = state.t + dt
    return State(t=t_new, S=S_new, elastic=model.elastic(S_new, t_new))


@dataclass(frozen=True)
class FixedPointInfo:
    iterations: int
    increment: float
    lam: float


def _fixed_point(S_old, t_new, dt, model, lam, start, tol, max_iter):
    S_hat = start
    for it in range(1, max_iter + 1):
        el = model.elastic(S_hat, t_new, lam)
        S_next = advance_S(S_old, tc.dot(el.T, model.params.misfit), dt, model, "semi-implicit", t_new - dt)
        inc = float(np.max(np.abs(S_next - S_hat)))
        if inc < tol:
            return S_next, it, inc
        S_hat = S_next
    raise NoConvergence(f"fixed-point iteration stalled after {max_iter} iterations (increment {inc:.3e})")


def fixed_point_step(
    state: State,
    dt: float,
    model: CoupledModel,
    tol: float = 1e-10,
    max_iter: int = 50,
    lam: float = 1.0,
    continuation: bool = False,
    info: Optional[list] = None,
) -> State:
    """
    Step with the stress taken at the new time level.

    Iterates: solve elasticity from the current iterate (load and misfit
    coupling scaled by ``lam``), then take one semi-implicit step from
    ``state`` with that stress; stops when successive iterates differ by less
    than ``tol`` in the max norm.  With ``continuation`` a failed solve at
    ``lam`` is retried by first converging at ``lam / 2`` and restarting from
    that iterate.  Appends a ``FixedPointInfo`` to ``info`` if given.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    t_new = state.t + dt
    try:
        S_new, its, inc = _fixed_point(state.S, t_new, dt, model, lam, lam * state.S, tol, max_iter)
    except NoConvergence:
        if not continuation:
            raise
        log.info("fixed point failed at lam=%g, retrying through lam=%g", lam, lam / 2)
        S_half, _, _ = _fixed_point(state.S, t_new, dt, model, lam / 2, 0.5 * lam * state.S, tol, max_iter)
        S_new, its, inc = _fixed_point(state.S, t_new, dt, model, lam, S_half, tol, max_iter)
    if info is not None:
        info.append(FixedPointInfo(its, inc, lam))
    return State(t=t_new, S=S_new, elastic=model.elastic(S_new, t_new, lam))


# ---------------------------------------------------------------------------
# driver


def choose_dt(state: State, model: CoupledModel, config: RunConfig, n_done: int = 0) -> float:
    """Step size for the next step; fixed steps land on exact multiples of ``dt``."""
    remaining = config.t_end - state.t
    if config.dt is not None:
        target = min((n_done + 1) * config.dt, config.t_end)
        if config.t_end - target < 1e-9 * config.dt:
            target = config.t_end
        return target - state.t
    T_dot = tc.dot(state.T, model.params.misfit)
    dt = config.cfl * stability_limit(state.S, T_dot, model.params, model.grid, config.scheme)
    if not np.isfinite(dt):
        dt = config.t_end
    # land exactly on t_end
    if dt >= remaining * (1.0 - 1e-12):
        return remaining
    return dt


def run(S0, model: CoupledModel, config: RunConfig, sink=None, monitor=None):
    """
    Integrate from ``S0`` to ``config.t_end``.

    Returns ``(trajectory, report)``: the list of stored ``State`` objects
    (every ``output_stride`` steps plus the final one) and the per-step
    ``DiagnosticsReport``.  ``sink(kind, payload)``, if given, receives
    ``("state", State)`` for each stored state and ``("record", dict)`` for
    each diagnostics row.
    """
    from .diagnostics import DiagnosticsReport

    if config.gradient != model.gradient:
        model = model.replace(gradient=config.gradient)
    if config.mollify and model.load is not None:
        model = model.replace(
            load=mollified_load(model.load, model.params.kappa, model.grid, config.t_end)
        )
    S = prepare_initial(S0, model.params.kappa, model.grid)
    state = model.state(0.0, S)
    report = DiagnosticsReport(model)
    report.record(state, None, None)
    trajectory = [state]
    if sink is not None:
        sink("state", state)
        sink("record", report.rows[-1])
    n = 0
    while state.t < config.t_end * (1.0 - 1e-14):
        dt = choose_dt(state, model, config, n)
        if config.fixed_point:
            new = fixed_point_step(state, dt, model, config.fp_tol, config.fp_max_iter)
        else:
            new = step(state, dt, model, config.scheme)
        n += 1
        report.record(new, state, dt)
        if sink is not None:
            sink("record", report.rows[-1])
        if monitor is not None:
            monitor(state, new, dt)
        state = new
        if n % config.output_stride == 0 or state.t >= config.t_end * (1.0 - 1e-14):
            trajectory.append(state)
            if sink is not None:
                sink("state", state)
    report.finalize()
    return trajectory, report
