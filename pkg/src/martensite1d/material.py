"""Constitutive laws: double-well potential, free energy and Hamiltonians."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor_core as tc
from .errors import ConfigError


@dataclass(frozen=True)
class DoubleWell:
    """
    Double-well chemical energy with minima at S = 0 and S = 1.

    ``psi(S) = theta S^2 (1-S)^2 + tilt S^2 (3 - 2S)``

    The tilt term is a smoothstep with vanishing slope at both wells, so it
    shifts ``psi(1) - psi(0)`` to ``tilt`` without moving the minima.  The
    barrier sits at ``1/2 + 3 tilt / (2 theta)``; admissible tilts satisfy
    ``|tilt| < theta / 3``.  The sign pattern of ``psi'`` is re-checked by
    dense sampling on construction.
    """

    theta: float = 1.0
    tilt: float = 0.0

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigError(f"well height theta must be positive, got {self.theta}")
        if not abs(self.tilt) < self.theta / 3.0:
            raise ConfigError(
                f"tilt {self.tilt} moves the barrier out of (0, 1); need |tilt| < theta/3"
            )
        if not self.sign_pattern_ok():
            raise ConfigError("double-well derivative violates the required sign pattern")

    @property
    def barrier(self) -> float:
        return 0.5 + 1.5 * self.tilt / self.theta

    def psi(self, S):
        S = np.asarray(S, dtype=float)
        return self.theta * S**2 * (1.0 - S) ** 2 + self.tilt * S**2 * (3.0 - 2.0 * S)

    def dpsi(self, S):
        S = np.asarray(S, dtype=float)
        return S * (1.0 - S) * (2.0 * self.theta * (1.0 - 2.0 * S) + 6.0 * self.tilt)

    def sign_pattern_ok(self, lo: float = -2.0, hi: float = 3.0, n: int = 10_000) -> bool:
        """Check psi' > 0 on (0, b) u (1, inf) and psi' < 0 on (b, 1) u (-inf, 0)."""
        S = np.linspace(lo, hi, n)
        d = self.dpsi(S)
        b = self.barrier
        pos = ((S > 0) & (S < b)) | (S > 1)
        neg = ((S > b) & (S < 1)) | (S < 0)
        return bool(np.all(d[pos] > 0) and np.all(d[neg] < 0))


@dataclass(frozen=True, eq=False)
class MaterialParams:
    """
    Model constants.

    Parameters
    ----------
    c : float
        Mobility, > 0.
    nu : float
        Interface-energy coefficient, > 0.
    kappa : float
        Regularization parameter in (0, 1).
    misfit : (6,) ndarray
        Misfit strain in Mandel components.
    D : ElasticityTensor
    well : DoubleWell
    """

    c: float
    nu: float
    kappa: float
    misfit: np.ndarray
    D: tc.ElasticityTensor
    well: DoubleWell = field(default_factory=DoubleWell)

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError(f"mobility c must be positive, got {self.c}")
        if not self.nu > 0:
            raise ConfigError(f"nu must be positive, got {self.nu}")
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError(f"kappa must lie in (0, 1), got {self.kappa}")
        misfit = np.array(self.misfit, dtype=float)
        if misfit.shape != (6,):
            raise ConfigError(f"misfit must have 6 Mandel components, got {misfit.shape}")
        misfit.setflags(write=False)
        object.__setattr__(self, "misfit", misfit)

    def replace(self, **changes) -> "MaterialParams":
        return replace(self, **changes)


def abs_kappa(q, kappa):
    """Smoothed modulus ``sqrt(q^2 + kappa^2)``."""
    return np.hypot(q, kappa)


def psi_hat(S, params: MaterialParams):
    return params.well.psi(S)


def psi_hat_prime(S, params: MaterialParams):
    return params.well.dpsi(S)


def free_energy_density(eps, S, Sx, params: MaterialParams):
    """
    ``1/2 D(eps - misfit S) . (eps - misfit S) + psi(S) + nu/2 Sx^2``.

    ``eps`` has shape (..., 6); ``S`` and ``Sx`` broadcast against ``eps[..., 0]``.
    """
    S = np.asarray(S, dtype=float)
    elastic_strain = np.asarray(eps, dtype=float) - S[..., None] * params.misfit
    stress = tc.apply_D(params.D, elastic_strain)
    return (
        0.5 * tc.dot(stress, elastic_strain)
        + params.well.psi(S)
        + 0.5 * params.nu * np.asarray(Sx, dtype=float) ** 2
    )


def psi_S(T_dot_eps, S, params: MaterialParams):
    """Derivative of the free energy in S at fixed strain: ``-T.misfit + psi'(S)``."""
    return -np.asarray(T_dot_eps, dtype=float) + params.well.dpsi(S)


def hamiltonian_sharp(T_dot_eps, p, q, r, params: MaterialParams):
    """``c (T.misfit - psi'(p) + nu r) |q|``."""
    drive = np.asarray(T_dot_eps, dtype=float) - params.well.dpsi(p)
    return params.c * (drive + params.nu * np.asarray(r, dtype=float)) * np.abs(q)


def hamiltonian_regularized(T_dot_eps, p, q, r, params: MaterialParams, kappa=None):
    """``c nu |q|_k r + c (T.misfit - psi'(p)) (|q|_k - k)``."""
    k = params.kappa if kappa is None else kappa
    qk = abs_kappa(q, k)
    drive = np.asarray(T_dot_eps, dtype=float) - params.well.dpsi(p)
    return params.c * params.nu * qk * np.asarray(r, dtype=float) + params.c * drive * (qk - k)
