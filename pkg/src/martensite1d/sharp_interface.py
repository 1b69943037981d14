"""
Sharp-interface reference model in one space dimension.

The order parameter takes only the values 0 and 1 with a single jump at
``z``.  Elasticity is solved in closed form for that indicator; the
interface moves with the configurational-force law

    dz/dt = V = c (-<T>.misfit [S] + [psi]) / [S]

where ``[f] = f(z+) - f(z-)`` and ``<f>`` is the mean of the two one-sided
traces.  The normal points in the +x direction for either orientation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import tensor_core as tc
from .elasticity import ElasticSolution, solve_correction
from .errors import ConfigError, InterfaceExit, LevelSetLost
from .evolution import CoupledModel, _smoothstep
from .grid import Grid1D

SHARP_COLUMNS = ("t", "z", "V", "driving_force")


@dataclass(frozen=True)
class SharpState:
    """
    Interface position ``z`` at time ``t``.

    ``orientation=+1`` puts phase 1 on ``(z, d)``, ``-1`` on ``(a, z)``.
    """

    t: float
    z: float
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ConfigError(f"orientation must be +1 or -1, got {self.orientation}")

    @property
    def jump(self) -> int:
        """``[S] = S(z+) - S(z-)``."""
        return self.orientation

    def phase_values(self):
        """``(S(z-), S(z+))``."""
        return (0.0, 1.0) if self.orientation > 0 else (1.0, 0.0)

    def indicator(self, x) -> np.ndarray:
        """Nodal order parameter; nodes exactly at ``z`` get 1/2."""
        x = np.asarray(x, dtype=float)
        right = np.where(x > self.z, 1.0, np.where(x < self.z, 0.0, 0.5))
        return right if self.orientation > 0 else 1.0 - right


@dataclass(frozen=True, eq=False)
class SharpElastic:
    """Nodal elastic fields plus the one-sided stress traces at ``z``."""

    solution: ElasticSolution
    T_minus: np.ndarray
    T_plus: np.ndarray

    @property
    def T_mean(self) -> np.ndarray:
        return 0.5 * (self.T_minus + self.T_plus)


def _running_integral(state: SharpState, x, a: float) -> np.ndarray:
    """Exact ``int_a^x S`` for the indicator of the phase-1 region."""
    x = np.asarray(x, dtype=float)
    if state.orientation > 0:
        return np.maximum(x - state.z, 0.0)
    return np.minimum(x, state.z) - a


def sharp_elastic(state: SharpState, b_hat, proj: tc.ProjectionData, grid: Grid1D) -> SharpElastic:
    """
    Closed-form elastic solution for a piecewise constant order parameter.

    The integrals of ``S`` are evaluated exactly instead of by quadrature.
    The load correction ``sigma`` is interpolated linearly to ``z`` for the
    traces.  ``T^1`` is continuous across ``z`` since ``D(eps* - misfit)``
    has zero first column.
    """
    x = grid.x
    running = _running_integral(state, x, grid.a)
    total = float(_running_integral(state, grid.d, grid.a))
    w, sigma = solve_correction(b_hat, grid, proj)
    profile = running - (x - grid.a) / grid.length * total
    u = profile[:, None] * proj.u_star + w
    local = tc.apply_D(proj.D, proj.eps_star - proj.misfit)
    mean = tc.apply_D(proj.D, proj.eps_star) * (total / grid.length)
    S = state.indicator(x)
    T = S[:, None] * local - mean + sigma
    sigma_z = np.array([np.interp(state.z, x, sigma[:, k]) for k in range(6)])
    s_minus, s_plus = state.phase_values()
    T_minus = s_minus * local - mean + sigma_z
    T_plus = s_plus * local - mean + sigma_z
    return SharpElastic(ElasticSolution(u=u, T=T), T_minus, T_plus)


def driving_force(state: SharpState, traces: SharpElastic, params) -> float:
    """Configurational force ``-<T>.misfit [S] + [psi]``."""
    s_minus, s_plus = state.phase_values()
    jump_psi = float(params.well.psi(s_plus) - params.well.psi(s_minus))
    return -float(tc.dot(traces.T_mean, params.misfit)) * state.jump + jump_psi


def interface_velocity(state: SharpState, traces: SharpElastic, params) -> float:
    """
    Interface speed ``V = c (-<T>.misfit [S] + [psi]) / |[S]|``, positive towards +x.

    Follows from integrating ``S_t = -V S_x`` against the diffuse reaction
    term across the front, where ``|S_x| = sign([S]) S_x``.
    """
    return params.c * driving_force(state, traces, params) / abs(state.jump)


def _velocity(model: CoupledModel, t: float, z: float, orientation: int) -> float:
    probe = SharpState(t, z, orientation)
    traces = sharp_elastic(probe, model.load_at(t), model.proj, model.grid)
    return interface_velocity(probe, traces, model.params)


def advance_interface(state: SharpState, dt: float, model: CoupledModel) -> SharpState:
    """
    One classical Runge-Kutta step of ``dz/dt = V(z, t)``.

    Raises ``InterfaceExit`` if ``z`` leaves ``(a + dx, d - dx)``, meaning
    one phase has been annihilated.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = model.grid
    t, z, o = state.t, state.z, state.orientation
    k1 = _velocity(model, t, z, o)
    k2 = _velocity(model, t + 0.5 * dt, z + 0.5 * dt * k1, o)
    k3 = _velocity(model, t + 0.5 * dt, z + 0.5 * dt * k2, o)
    k4 = _velocity(model, t + dt, z + dt * k3, o)
    z_new = z + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    if not grid.a + grid.dx < z_new < grid.d - grid.dx:
        raise InterfaceExit(f"interface left the domain interior at t={t + dt:.6g}: z={z_new:.6g}")
    return replace(state, t=t + dt, z=z_new)


@dataclass(frozen=True)
class SharpRecord:
    t: float
    z: float
    V: float
    driving_force: float

    def row(self):
        return (self.t, self.z, self.V, self.driving_force)


def sharp_record(state: SharpState, model: CoupledModel) -> SharpRecord:
    traces = sharp_elastic(state, model.load_at(state.t), model.proj, model.grid)
    f = driving_force(state, traces, model.params)
    return SharpRecord(state.t, state.z, model.params.c * f / abs(state.jump), f)


def sharp_trajectory(state: SharpState, model: CoupledModel, times, max_dt: float):
    """
    Integrate the interface ODE and record it at the given output times.

    Steps are at most ``max_dt`` and land exactly on every output time.  If
    the interface exits, the records gathered so far are returned together
    with the exception.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < state.t:
        raise ValueError("output times must be sorted and not precede the initial state")
    records = []
    for target in times:
        while state.t < target:
            gap = target - state.t
            n = max(1, int(np.ceil(gap / max_dt - 1e-9)))
            dt = gap / n
            try:
                state = advance_interface(state, dt, model)
            except InterfaceExit as exc:
                return records, exc
            if n == 1:
                state = replace(state, t=float(target))
        records.append(sharp_record(state, model))
    return records, None


def interface_width(nu: float, theta: float) -> float:
    """
    Width ``sqrt(nu) * l`` of the equilibrium front, ``l = 1 / sqrt(2 theta)``.

    ``S = 1/2 (1 + tanh((x - z) / (2 sqrt(nu) l)))`` solves
    ``nu S'' = psi'(S)`` exactly for the symmetric quartic well.
    """
    return np.sqrt(nu) / np.sqrt(2.0 * theta)


def diffuse_profile(z0: float, grid: Grid1D, nu: float, theta: float = 1.0, orientation: int = 1, end_layer=None):
    """
    Equilibrium tanh front centred at ``z0``, brought smoothly to zero at the
    boundary on the phase-1 side so that the data are compatible.

    ``end_layer`` is the length of that boundary ramp (default eight front
    widths).
    """
    width = interface_width(nu, theta)
    x = grid.x
    S = 0.5 * (1.0 + np.tanh(orientation * (x - z0) / (2.0 * width)))
    if end_layer is None:
        end_layer = 8.0 * width
    dist = (grid.d - x) if orientation > 0 else (x - grid.a)
    S = S * _smoothstep(dist / end_layer)
    S[0] = S[-1] = 0.0
    return S


def level_set_position(S, x, orientation: int = 1, level: float = 0.5, near=None) -> float:
    """
    Position of the ``level`` crossing of ``S`` by linear interpolation.

    Only crossings with the slope sign of ``orientation`` are considered
    (this excludes the boundary ramp); among several the one closest to
    ``near`` wins.  Raises ``LevelSetLost`` if there is none.
    """
    S = np.asarray(S, dtype=float) - level
    s0, s1 = S[:-1], S[1:]
    if orientation > 0:
        idx = np.nonzero((s0 < 0) & (s1 >= 0))[0]
    else:
        idx = np.nonzero((s0 >= 0) & (s1 < 0))[0]
    if idx.size == 0:
        raise LevelSetLost(f"no S={level + 0.0:g} crossing with orientation {orientation}")
    pos = x[idx] - s0[idx] * (x[idx + 1] - x[idx]) / (s1[idx] - s0[idx])
    if near is None or pos.size == 1:
        return float(pos[0])
    return float(pos[np.argmin(np.abs(pos - near))])


@dataclass(frozen=True, eq=False)
class PositionError:
    t: np.ndarray
    z_diffuse: np.ndarray
    z_sharp: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return np.abs(self.z_diffuse - self.z_sharp)

    @property
    def max_error(self) -> float:
        return float(self.error.max())


def compare_diffuse_sharp(diffuse, sharp, x, orientation: int = 1) -> PositionError:
    """
    Position error between a diffuse trajectory and sharp records.

    ``diffuse`` is a list of states, ``sharp`` a list of ``SharpRecord``
    at the same times.  The sharp position is interpolated linearly if the
    times differ slightly.
    """
    t_s = np.array([r.t for r in sharp])
    z_s = np.array([r.z for r in sharp])
    t = np.array([s.t for s in diffuse])
    if t[-1] > t_s[-1] * (1 + 1e-12) + 1e-14:
        raise ValueError("sharp records end before the diffuse trajectory")
    z_sharp = np.interp(t, t_s, z_s)
    z_diff = np.empty_like(t)
    near = z_sharp[0]
    for k, st in enumerate(diffuse):
        z_diff[k] = level_set_position(st.S, x, orientation, near=near)
        near = z_diff[k]
    return PositionError(t=t, z_diffuse=z_diff, z_sharp=z_sharp)
