"""
Quasi-static elastic subsystem in one space dimension.

For a given order parameter ``S`` and load ``b`` the displacement and stress
follow in closed form from the misfit projection (``solve_elastic``) plus the
solution of a load-only correction problem (``solve_correction``).
``fd_elastic_oracle`` discretizes the same boundary value problem directly
in the nodal displacements and never touches the projection; it exists to
cross-check the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import linalg
from scipy.integrate import cumulative_trapezoid
from scipy.sparse.linalg import spsolve

from . import tensor_core as tc
from .errors import SingularSystem
from .grid import Grid1D


@dataclass(frozen=True, eq=False)
class ElasticSolution:
    """Nodal displacement ``u`` (n, 3) and stress ``T`` (n, 6, Mandel)."""

    u: np.ndarray
    T: np.ndarray

    @property
    def T1(self) -> np.ndarray:
        """First column of the stress, shape (n, 3)."""
        return tc.first_column(self.T)

    def T_dot(self, misfit) -> np.ndarray:
        return tc.dot(self.T, misfit)


def _dirichlet_laplacian_solve(rhs: np.ndarray, dx: float) -> np.ndarray:
    """Solve ``(w[i+1] - 2 w[i] + w[i-1]) / dx^2 = rhs[i]`` with zero end values."""
    n = rhs.shape[0]
    m = n - 2
    out = np.zeros_like(rhs)
    if m == 0:
        return out
    ab = np.empty((3, m))
    ab[0] = 1.0
    ab[1] = -2.0
    ab[2] = 1.0
    out[1:-1] = linalg.solve_banded((1, 1), ab, rhs[1:-1] * dx**2)
    return out


def solve_correction(b_hat, grid: Grid1D, proj: tc.ProjectionData):
    """
    Load-only part of the elastic solution.

    Solves ``A w_xx = -b_hat`` with ``w(a) = w(d) = 0`` by central
    differences and returns ``(w, sigma)`` with ``sigma = D eps(w_x)``.
    Since ``A`` is constant this is one scalar Dirichlet problem per
    component of ``A^{-1} b_hat``.

    Parameters
    ----------
    b_hat : array_like, shape (n, 3) or None
        Nodal load; ``None`` means no load.
    """
    if b_hat is None:
        return grid.zeros(3), grid.zeros(6)
    b_hat = np.asarray(b_hat, dtype=float)
    if b_hat.shape != (grid.n, 3):
        raise ValueError(f"load must have shape {(grid.n, 3)}, got {b_hat.shape}")
    if not np.any(b_hat):
        return grid.zeros(3), grid.zeros(6)
    try:
        factor = linalg.cho_factor(proj.A, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularSystem("correction matrix A is not positive definite") from exc
    rhs = -linalg.cho_solve(factor, b_hat.T).T
    w = _dirichlet_laplacian_solve(rhs, grid.dx)
    w_x = np.gradient(w, grid.dx, axis=0, edge_order=2)
    sigma = tc.apply_D(proj.D, tc.strain_of_gradient(w_x))
    return w, sigma


def solve_elastic(S, correction, proj: tc.ProjectionData, grid: Grid1D, lam: float = 1.0):
    """
    Closed-form displacement and stress for order parameter ``S``.

    ``u = lam u* (int_a^x S - (x-a)/(d-a) int_a^d S) + w``
    ``T = lam D(eps* - misfit) S - lam D eps* / (d-a) int_a^d S + sigma``

    with trapezoid quadrature. ``correction`` is the ``(w, sigma)`` pair from
    ``solve_correction`` (already scaled by ``lam`` if the load is).
    """
    S = np.asarray(S, dtype=float)
    x = grid.x
    w, sigma = correction
    running = cumulative_trapezoid(S, x, initial=0.0)
    total = running[-1]
    profile = running - (x - grid.a) / grid.length * total
    u = lam * profile[:, None] * proj.u_star + w
    D = proj.D
    local = tc.apply_D(D, proj.eps_star - proj.misfit)
    mean = tc.apply_D(D, proj.eps_star) / grid.length
    T = lam * (S[:, None] * local - total * mean) + sigma
    return ElasticSolution(u=u, T=T)


def elastic_state(S, b_hat, proj: tc.ProjectionData, grid: Grid1D, lam: float = 1.0):
    """Convenience: correction solve followed by the closed-form solve."""
    if b_hat is not None and lam != 1.0:
        b_hat = lam * np.asarray(b_hat)
    return solve_elastic(S, solve_correction(b_hat, grid, proj), proj, grid, lam=lam)


def fd_elastic_oracle(S, b_hat, params, grid: Grid1D) -> ElasticSolution:
    """
    Direct finite-difference solve of ``-(D(eps(u_x) - misfit S))^1_x = b_hat``.

    Unknowns are the nodal displacements; fluxes live at cell midpoints with
    ``S`` averaged there.  The nodal first stress column is recovered from the
    midpoint fluxes (average inside, second-order extrapolation at the ends),
    ``u_x`` from the constitutive relation, and ``T`` from
    ``D(eps(u_x) - misfit S)`` by full 4-index contraction.
    """
    S = np.asarray(S, dtype=float)
    n, dx = grid.n, grid.dx
    b = grid.zeros(3) if b_hat is None else np.asarray(b_hat, dtype=float)
    C = params.D.to_tensor4()
    misfit = tc.to_full(params.misfit)
    K = C[:, 0, 0, :]  # (D eps(v))_{k1} = C_{k11q} v_q
    m = np.einsum("kpq,pq->k", C[:, 0], misfit)
    try:
        linalg.cholesky(K, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularSystem("axial stiffness block is not positive definite") from exc

    S_mid = 0.5 * (S[1:] + S[:-1])
    interior = n - 2
    if interior > 0:
        lap = sp.diags(
            [-np.ones(interior - 1), 2 * np.ones(interior), -np.ones(interior - 1)],
            [-1, 0, 1],
        )
        matrix = sp.kron(lap, sp.csr_matrix(K), format="csc") / dx**2
        rhs = b[1:-1] - np.outer(np.diff(S_mid), m) / dx
        try:
            sol = spsolve(matrix, rhs.ravel())
        except RuntimeError as exc:
            raise SingularSystem("block-tridiagonal elastic system failed") from exc
        if not np.all(np.isfinite(sol)):
            raise SingularSystem("block-tridiagonal elastic system is singular")
        u = np.zeros((n, 3))
        u[1:-1] = sol.reshape(interior, 3)
    else:
        u = np.zeros((n, 3))

    flux = np.diff(u, axis=0) / dx @ K.T - np.outer(S_mid, m)
    T1 = np.empty((n, 3))
    T1[1:-1] = 0.5 * (flux[1:] + flux[:-1])
    if n > 2:
        T1[0] = 1.5 * flux[0] - 0.5 * flux[1]
        T1[-1] = 1.5 * flux[-1] - 0.5 * flux[-2]
    else:
        T1[:] = flux[0]
    u_x = linalg.solve(K, (T1 + np.outer(S, m)).T, assume_a="pos").T
    grad = np.zeros((n, 3, 3))
    grad[:, :, 0] = u_x
    strain = 0.5 * (grad + np.swapaxes(grad, 1, 2)) - S[:, None, None] * misfit
    T_full = np.einsum("ijkl,nkl->nij", C, strain)
    return ElasticSolution(u=u, T=tc.from_full(T_full))
