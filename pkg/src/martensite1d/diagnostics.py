"""
Run monitors: free energy, dissipation balance, gradient bounds, Hölder
seminorms, and a sampled check of the viscosity-solution inequalities of the
sharp (unregularized) equation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import tensor_core as tc
from .errors import NonFiniteState
from .evolution import central_slope, second_difference
from .material import abs_kappa, free_energy_density, hamiltonian_sharp, psi_S

COLUMNS = (
    "step",
    "t",
    "dt",
    "sup_abs_S",
    "grad_sq",
    "grad_energy_integral",
    "free_energy",
    "energy_increase",
    "dissipation_residual",
    "work_input",
)


def fmt(value) -> str:
    """17 significant digits; integers verbatim."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def trapezoid_weights(n: int, dx: float) -> np.ndarray:
    w = np.full(n, dx)
    w[[0, -1]] = 0.5 * dx
    return w


def nodal_slope(S, dx):
    """
    Root-mean-square of the one-sided slopes at each node (one-sided at the
    ends).  Its trapezoid-integrated square equals the cellwise sum of the
    squared forward differences.
    """
    d = np.diff(S) / dx
    sq = np.empty_like(S)
    sq[1:-1] = 0.5 * (d[1:] ** 2 + d[:-1] ** 2)
    sq[0] = d[0] ** 2
    sq[-1] = d[-1] ** 2
    return np.sqrt(sq)


def grad_sq(S, dx) -> float:
    """Discrete ``||S_x||^2`` from forward differences."""
    return float(np.sum(np.diff(S) ** 2) / dx)


def strain_of_state(state, params):
    """``eps(u_x)`` recovered from the constitutive law: ``D^-1 T + misfit S``."""
    T = state.T
    eps = np.linalg.solve(params.D.matrix, T.T).T
    return eps + state.S[:, None] * params.misfit


def total_free_energy(state, model) -> float:
    """Trapezoid integral of the free energy density over the domain."""
    params, grid = model.params, model.grid
    density = free_energy_density(
        strain_of_state(state, params), state.S, nodal_slope(state.S, grid.dx), params
    )
    return float(np.dot(trapezoid_weights(grid.n, grid.dx), density))


def work_input(state_prev, state_next, dt, model, b_prev=None, b_next=None) -> float:
    """``int b . u_t dx`` with the load averaged over the step."""
    if b_prev is None and b_next is None:
        b_prev = model.load_at(state_prev.t)
        b_next = model.load_at(state_next.t)
    if b_prev is None and b_next is None:
        return 0.0
    b_prev = np.zeros((model.grid.n, 3)) if b_prev is None else b_prev
    b_next = np.zeros((model.grid.n, 3)) if b_next is None else b_next
    b = 0.5 * (np.asarray(b_prev) + np.asarray(b_next))
    u_t = (state_next.u - state_prev.u) / dt
    w = trapezoid_weights(model.grid.n, model.grid.dx)
    return float(np.dot(w, np.sum(b * u_t, axis=1)))


def dissipation_check(state_prev, state_next, dt, model, b_prev=None, b_next=None) -> float:
    """
    Energy balance residual ``(E(t+dt) - E(t))/dt - int b . u_t``.

    The boundary flux ``T^1 . u_t + nu S_t S_x`` vanishes because ``u`` and
    ``S`` are held at zero on the boundary, so the residual should be
    non-positive up to the time-discretization error.
    """
    e0 = total_free_energy(state_prev, model)
    e1 = total_free_energy(state_next, model)
    return (e1 - e0) / dt - work_input(state_prev, state_next, dt, model, b_prev, b_next)


def dissipation_terms(S, T_dot, params, grid):
    """
    Nodal pieces of ``(psi_S - nu d2S) S_t`` for the central-slope
    right-hand side.

    Returns a dict with
      ``product``   ``(psi_S - nu d2S) * S_t``
      ``sharp``     ``-c (psi_S - nu d2S)^2 (|dS|_k - k)``  (always <= 0)
      ``kappa``     ``c nu k d2S (psi_S - nu d2S)``
    and ``product == sharp + kappa`` up to round-off.  Boundary nodes are 0.
    """
    c, nu, k = params.c, params.nu, params.kappa
    q = central_slope(S, grid.dx)
    r = second_difference(S, grid.dx)
    mu = psi_S(T_dot, S, params) - nu * r
    qk = abs_kappa(q, k)
    S_t = c * nu * qk * r - c * psi_S(T_dot, S, params) * (qk - k)
    out = {
        "product": mu * S_t,
        "sharp": -c * mu**2 * (qk - k),
        "kappa": c * nu * k * r * mu,
        "S_t": S_t,
    }
    for v in out.values():
        v[[0, -1]] = 0.0
    return out


def holder_seminorm(S, x, alpha: float = 0.5, block: int = 512) -> float:
    """Discrete Hölder seminorm ``max |S(x)-S(y)| / |x-y|^alpha`` over node pairs."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    S = np.asarray(S, dtype=float)
    x = np.asarray(x, dtype=float)
    best = 0.0
    for i0 in range(0, S.size, block):
        xi = x[i0 : i0 + block, None]
        si = S[i0 : i0 + block, None]
        dist = np.abs(xi - x[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 0, np.abs(si - S[None, :]) / dist**alpha, 0.0)
        best = max(best, float(ratio.max()))
    return best


class DiagnosticsReport:
    """
    Per-step monitor rows plus a summary block.

    Columns (fixed order): see ``COLUMNS``.  ``grad_energy_integral`` is the
    running sum ``sum dt sum |dS|_k (d2S)^2 dx`` and ``energy_increase`` is
    ``E(t_n) - E(t_{n-1})``.
    """

    def __init__(self, model):
        self.model = model
        self.rows: list[dict] = []
        self.summary: dict = {}
        self._energy_prev = None
        self._cumulative = 0.0

    def record(self, state, prev, dt):
        grid, params = self.model.grid, self.model.params
        energy = total_free_energy(state, self.model)
        if prev is None:
            increase = 0.0
            residual = 0.0
            work = 0.0
        else:
            S = prev.S
            q = central_slope(S, grid.dx)
            r = second_difference(S, grid.dx)
            self._cumulative += dt * float(np.sum(abs_kappa(q, params.kappa)[1:-1] * r[1:-1] ** 2) * grid.dx)
            increase = energy - self._energy_prev
            work = work_input(prev, state, dt, self.model)
            residual = increase / dt - work
        row = {
            "step": len(self.rows),
            "t": state.t,
            "dt": 0.0 if dt is None else dt,
            "sup_abs_S": float(np.max(np.abs(state.S))),
            "grad_sq": grad_sq(state.S, grid.dx),
            "grad_energy_integral": self._cumulative,
            "free_energy": energy,
            "energy_increase": increase,
            "dissipation_residual": residual,
            "work_input": work,
        }
        bad = [k for k, v in row.items() if not math.isfinite(v)]
        if bad or not np.all(np.isfinite(state.S)) or not np.all(np.isfinite(state.T)):
            raise NonFiniteState(f"non-finite values at t={state.t!r}: {bad or 'fields'}")
        if self.rows and not row["t"] > self.rows[-1]["t"]:
            raise ValueError("diagnostics records must have strictly increasing time")
        self._energy_prev = energy
        self.rows.append(row)

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def finalize(self):
        if not self.rows:
            return
        e0 = self.rows[0]["free_energy"]
        self.summary.update(
            steps=len(self.rows) - 1,
            t_end=self.rows[-1]["t"],
            max_sup_abs_S=float(self.column("sup_abs_S").max()),
            max_grad_sq=float(self.column("grad_sq").max()),
            grad_energy_integral=self.rows[-1]["grad_energy_integral"],
            initial_energy=e0,
            final_energy=self.rows[-1]["free_energy"],
            max_energy_increase=float(self.column("energy_increase")[1:].max(initial=-np.inf)),
            max_dissipation_residual=float(self.column("dissipation_residual")[1:].max(initial=-np.inf)),
        )

    def to_csv(self, fh=None) -> str:
        """Write rows (header + one line per step) and return the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in self.rows:
            writer.writerow([fmt(r[c]) for c in COLUMNS])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def summary_text(self) -> str:
        lines = []
        for k in sorted(self.summary):
            v = self.summary[k]
            if isinstance(v, bool):
                v = "pass" if v else "fail"
            elif isinstance(v, (float, int, np.floating, np.integer)):
                v = fmt(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# viscosity-solution check


@dataclass(frozen=True)
class TestFunction:
    """
    ``phi = quadratic in (t - t0, x - x0) + amp * exp(-(x-xb)^2/(2 sx^2) - (t-tb)^2/(2 st^2))``

    ``quad`` holds ``(phi_t, phi_x, phi_tt, phi_tx, phi_xx)`` of the
    quadratic part at ``(t0, x0)``.
    """

    __test__ = False  # not a pytest class

    t0: float
    x0: float
    quad: tuple
    amp: float = 0.0
    tb: float = 0.0
    xb: float = 0.0
    st: float = 1.0
    sx: float = 1.0

    def _parts(self, t, x):
        dt_, dx_ = t - self.t0, x - self.x0
        a_t, a_x, a_tt, a_tx, a_xx = self.quad
        g = self.amp * np.exp(-((x - self.xb) ** 2) / (2 * self.sx**2) - (t - self.tb) ** 2 / (2 * self.st**2))
        return dt_, dx_, a_t, a_x, a_tt, a_tx, a_xx, g

    def value(self, t, x):
        dt_, dx_, a_t, a_x, a_tt, a_tx, a_xx, g = self._parts(t, x)
        return a_t * dt_ + a_x * dx_ + 0.5 * a_tt * dt_**2 + a_tx * dt_ * dx_ + 0.5 * a_xx * dx_**2 + g

    def derivatives(self, t, x):
        """``(phi_t, phi_x, phi_xx)``."""
        dt_, dx_, a_t, a_x, a_tt, a_tx, a_xx, g = self._parts(t, x)
        phi_t = a_t + a_tt * dt_ + a_tx * dx_ - g * (t - self.tb) / self.st**2
        phi_x = a_x + a_tx * dt_ + a_xx * dx_ - g * (x - self.xb) / self.sx**2
        phi_xx = a_xx + g * (((x - self.xb) / self.sx**2) ** 2 - 1.0 / self.sx**2)
        return phi_t, phi_x, phi_xx


def sample_test_functions(n, t_range, x_range, rng, slope_scale=1.0, curvature_scale=30.0):
    """Random quadratics plus Gaussian bumps, scaled to the space-time box."""
    t_lo, t_hi = t_range
    x_lo, x_hi = x_range
    L, tau = x_hi - x_lo, t_hi - t_lo
    out = []
    for _ in range(n):
        quad = (
            rng.normal(0.0, slope_scale / tau),
            rng.normal(0.0, slope_scale / L),
            rng.normal(0.0, slope_scale / tau**2),
            rng.normal(0.0, slope_scale / (tau * L)),
            rng.normal(0.0, curvature_scale / L**2),
        )
        out.append(
            TestFunction(
                t0=rng.uniform(t_lo, t_hi),
                x0=rng.uniform(x_lo, x_hi),
                quad=quad,
                amp=rng.uniform(-1.0, 1.0),
                tb=rng.uniform(t_lo, t_hi),
                xb=rng.uniform(x_lo, x_hi),
                st=rng.uniform(0.1, 0.5) * tau,
                sx=rng.uniform(0.02, 0.2) * L,
            )
        )
    return out


def strict_extrema(F):
    """Masks of strict local maxima / minima of a 2D array over its 8-neighbourhood (interior only)."""
    core = F[1:-1, 1:-1]
    is_max = np.ones(core.shape, dtype=bool)
    is_min = np.ones(core.shape, dtype=bool)
    m, n = F.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = F[1 + di : m - 1 + di, 1 + dj : n - 1 + dj]
            is_max &= core > nb
            is_min &= core < nb
    pad_max = np.zeros(F.shape, dtype=bool)
    pad_min = np.zeros(F.shape, dtype=bool)
    pad_max[1:-1, 1:-1] = is_max
    pad_min[1:-1, 1:-1] = is_min
    return pad_max, pad_min


@dataclass
class ViscositySummary:
    n_tests: int
    n_touch_max: int
    n_touch_min: int
    max_violation: float
    tol: float
    n_exceed: int
    max_abs_H: float
    n_skipped: int = 0
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.n_exceed == 0


def trajectory_arrays(trajectory, params):
    """Stack a uniformly spaced trajectory into ``(t, S, T.misfit)`` arrays."""
    t = np.array([s.t for s in trajectory])
    S = np.stack([s.S for s in trajectory])
    T_dot = np.stack([tc.dot(s.T, params.misfit) for s in trajectory])
    steps = np.diff(t)
    if steps.size and not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("viscosity check needs equally spaced frames")
    return t, S, T_dot


# least-squares fit of a + b t + c x + d t^2 + e t x + f x^2 on the 3x3 stencil
_OFF = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)
_FIT = np.linalg.pinv(
    np.column_stack(
        [np.ones(9), _OFF[:, 0], _OFF[:, 1], _OFF[:, 0] ** 2, _OFF[:, 0] * _OFF[:, 1], _OFF[:, 1] ** 2]
    )
)


def _stationary_offset(F, ti, xi, sign):
    """
    Stationary point of the quadratic fitted to ``F`` around lattice nodes
    ``(ti, xi)``, in cell units.

    Returns ``(tau, xi, ok)``; ``ok`` is False where the fit has no
    stationary point inside the stencil or the wrong definiteness (a lattice
    extremum along an oblique valley, not a touching point).  ``sign`` is
    +1 for maxima and -1 for minima.
    """
    patch = np.stack([F[ti + i, xi + j] for i in (-1, 0, 1) for j in (-1, 0, 1)], axis=-1)
    _, b, c, d, e, f = (patch @ _FIT.T).T
    det = 4.0 * d * f - e * e
    ok = (det > 0) & (sign * d < 0)
    safe = np.where(ok, det, 1.0)
    tau = np.where(ok, (-2.0 * f * b + e * c) / safe, 0.0)
    xi_ = np.where(ok, (e * b - 2.0 * d * c) / safe, 0.0)
    ok &= (np.abs(tau) <= 1.0) & (np.abs(xi_) <= 1.0)
    return tau, xi_, ok


def viscosity_check(trajectory, model, n_tests: int = 200, seed: int = 0, tol=None, test_functions=None):
    """
    Sampled check of the sub/super-solution inequalities of the sharp equation.

    For each test function ``phi`` every strict local maximum of ``S - phi``
    on the interior space-time lattice must satisfy
    ``phi_t <= H_T(S, phi_x, phi_xx) + tol`` and every strict local minimum
    ``phi_t >= H_T(S, phi_x, phi_xx) - tol``, with ``H_T`` the sharp
    Hamiltonian and ``T`` the run's own stress.  The violation at a touching
    point is the amount by which the tolerance-free inequality fails (0 if it
    holds); ``max_violation`` is the largest over all touchings.

    Each lattice extremum is moved to the stationary point of the quadratic
    least-squares fit of ``S - phi`` on its 3x3 stencil before ``phi`` is
    differentiated.  Extrema whose fit is not definite or whose stationary
    point lies outside the stencil are skipped and counted in ``n_skipped``.  Without this
    the residual ``|phi_t|`` of a lattice point next to the true touching
    point, up to ``dt |phi_tt| / 2``, dominates and depends on how the
    lattice happens to align with ``phi``.

    Default ``tol = 10 (dx + dt)(1 + max|H_T|)``, the maximum taken over all
    interior lattice nodes with discrete derivatives of ``S``.
    """
    params, grid = model.params, model.grid
    t, S, T_dot = trajectory_arrays(trajectory, params)
    if t.size < 3:
        raise ValueError("viscosity check needs at least three frames")
    dt = t[1] - t[0]
    x = grid.x
    q = np.zeros_like(S)
    q[:, 1:-1] = (S[:, 2:] - S[:, :-2]) / (2 * grid.dx)
    r = np.zeros_like(S)
    r[:, 1:-1] = (S[:, 2:] - 2 * S[:, 1:-1] + S[:, :-2]) / grid.dx**2
    H_nodes = hamiltonian_sharp(T_dot, S, q, r, params)[1:-1, 1:-1]
    max_abs_H = float(np.max(np.abs(H_nodes))) if H_nodes.size else 0.0
    if tol is None:
        tol = 10.0 * (grid.dx + dt) * (1.0 + max_abs_H)
    if test_functions is None:
        rng = np.random.default_rng(seed)
        test_functions = sample_test_functions(n_tests, (t[0], t[-1]), (grid.a, grid.d), rng)
    tt, xx = np.meshgrid(t, x, indexing="ij")
    n_max = n_min = n_exceed = n_skipped = 0
    worst = {"violation": 0.0}
    max_violation = 0.0
    for k, phi in enumerate(test_functions):
        diff = S - phi.value(tt, xx)
        mx, mn = strict_extrema(diff)
        for mask, sign in ((mx, 1.0), (mn, -1.0)):
            if not mask.any():
                continue
            ti, xi = np.nonzero(mask)
            off_t, off_x, ok = _stationary_offset(diff, ti, xi, sign)
            n_skipped += int(np.sum(~ok))
            if not ok.any():
                continue
            ti, xi, off_t, off_x = ti[ok], xi[ok], off_t[ok], off_x[ok]
            t_star = t[ti] + dt * off_t
            x_star = x[xi] + grid.dx * off_x
            phi_t, phi_x, phi_xx = phi.derivatives(t_star, x_star)
            p = phi.value(t_star, x_star) + diff[ti, xi]
            H = hamiltonian_sharp(T_dot[ti, xi], p, phi_x, phi_xx, params)
            gap = sign * (phi_t - H)
            viol = np.maximum(gap, 0.0)
            n_exceed += int(np.sum(gap > tol))
            j = int(np.argmax(viol))
            if viol[j] > max_violation:
                max_violation = float(viol[j])
                worst = {
                    "violation": max_violation,
                    "test": k,
                    "kind": "max" if sign > 0 else "min",
                    "t": float(t_star[j]),
                    "x": float(x_star[j]),
                    "phi_t": float(phi_t[j]),
                    "H": float(H[j]),
                }
            if sign > 0:
                n_max += ti.size
            else:
                n_min += ti.size
    return ViscositySummary(
        n_tests=len(test_functions),
        n_touch_max=n_max,
        n_touch_min=n_min,
        max_violation=max_violation,
        tol=float(tol),
        n_exceed=n_exceed,
        max_abs_H=max_abs_H,
        n_skipped=n_skipped,
        worst=worst,
    )
