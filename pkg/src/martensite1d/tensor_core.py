"""
Small-dimension tensor algebra for the 1D elastic subsystem.

Symmetric 3x3 matrices are stored as arrays of shape ``(..., 6)`` holding
their components in the orthonormal Mandel basis

    (E11, E22, E33, (E12+E21)/sqrt2, (E13+E31)/sqrt2, (E23+E32)/sqrt2)

so a symmetric matrix ``a`` maps to ``(a11, a22, a33, sqrt2*a12, sqrt2*a13,
sqrt2*a23)``.  In this basis the matrix scalar product
``sum_ij s_ij t_ij`` is the plain Euclidean product of the 6-vectors, and a
linear map ``D`` that is symmetric with respect to it has a symmetric 6x6
representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import NonPositiveDefinite

SQRT2 = np.sqrt(2.0)

# (row, col) of the full matrix carried by each Mandel slot
MANDEL_INDEX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
_WEIGHT = np.array([1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2])


def sym(a11=0.0, a22=0.0, a33=0.0, a12=0.0, a13=0.0, a23=0.0) -> np.ndarray:
    """Build a symmetric matrix from its six independent entries."""
    return np.array([a11, a22, a33, a12, a13, a23], dtype=float) * _WEIGHT


def entries(s: np.ndarray) -> np.ndarray:
    """Return ``(a11, a22, a33, a12, a13, a23)`` for Mandel vector(s) ``s``."""
    return np.asarray(s, dtype=float) / _WEIGHT


def to_full(s: np.ndarray) -> np.ndarray:
    """Expand Mandel vector(s) of shape (..., 6) to full (..., 3, 3) matrices."""
    a = entries(s)
    out = np.empty(a.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(MANDEL_INDEX):
        out[..., i, j] = a[..., k]
        out[..., j, i] = a[..., k]
    return out


def from_full(m: np.ndarray) -> np.ndarray:
    """Mandel vector(s) of the symmetric part of full (..., 3, 3) matrices."""
    m = np.asarray(m, dtype=float)
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    a = np.stack([m[..., i, j] for i, j in MANDEL_INDEX], axis=-1)
    return a * _WEIGHT


def dot(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Matrix scalar product ``sum_ij s_ij t_ij`` (off-diagonals count twice)."""
    return np.sum(np.asarray(s) * np.asarray(t), axis=-1)


def first_column(s: np.ndarray) -> np.ndarray:
    """First column ``(a11, a21, a31)`` of symmetric matrix/matrices ``s``."""
    a = entries(s)
    return np.stack([a[..., 0], a[..., 3], a[..., 4]], axis=-1)


def strain_of_gradient(v: np.ndarray) -> np.ndarray:
    """
    Symmetric strain of a 1D displacement gradient.

    For ``v = u_x`` in R^3 returns ``1/2((v,0,0) + (v,0,0)^t)``, i.e.
    ``eps11 = v1``, ``eps12 = v2/2``, ``eps13 = v3/2`` and zeros elsewhere.
    Accepts shape (..., 3).
    """
    v = np.asarray(v, dtype=float)
    zero = np.zeros(v.shape[:-1])
    return np.stack(
        [v[..., 0], zero, zero, v[..., 1] / SQRT2, v[..., 2] / SQRT2, zero], axis=-1
    )


@dataclass(frozen=True, eq=False)
class ElasticityTensor:
    """
    Linear, symmetric, positive definite map on symmetric 3x3 matrices.

    Parameters
    ----------
    matrix : ndarray, shape (6, 6)
        Representation in the Mandel basis.  Must be symmetric and positive
        definite; checked on construction.
    """

    matrix: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (6, 6):
            raise ValueError(f"expected a 6x6 matrix, got shape {m.shape}")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise NonPositiveDefinite("elasticity matrix is not symmetric")
        m = 0.5 * (m + m.T)
        try:
            chol = linalg.cholesky(m, lower=True)
        except linalg.LinAlgError as exc:
            raise NonPositiveDefinite("elasticity matrix is not positive definite") from exc
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def isotropic(cls, lam: float, mu: float) -> "ElasticityTensor":
        """``D s = lam tr(s) I + 2 mu s``; requires ``mu > 0`` and ``3 lam + 2 mu > 0``."""
        if not (mu > 0 and 3 * lam + 2 * mu > 0):
            raise NonPositiveDefinite(
                f"isotropic moduli not admissible: lambda={lam}, mu={mu}"
            )
        trace = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
        return cls(lam * np.outer(trace, trace) + 2.0 * mu * np.eye(6))

    @classmethod
    def from_upper_triangle(cls, values) -> "ElasticityTensor":
        """Build from the 21 row-major upper-triangle entries of the Mandel matrix."""
        values = np.asarray(values, dtype=float).ravel()
        if values.size != 21:
            raise ValueError(f"need 21 upper-triangle entries, got {values.size}")
        m = np.zeros((6, 6))
        m[np.triu_indices(6)] = values
        m = m + np.triu(m, 1).T
        return cls(m)

    @classmethod
    def identity(cls) -> "ElasticityTensor":
        return cls(np.eye(6))

    def upper_triangle(self) -> np.ndarray:
        return self.matrix[np.triu_indices(6)].copy()

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def to_tensor4(self) -> np.ndarray:
        """Dense components ``C_ijkl`` with minor and major symmetries."""
        c = np.zeros((3, 3, 3, 3))
        for a, (i, j) in enumerate(MANDEL_INDEX):
            for b, (k, l) in enumerate(MANDEL_INDEX):
                val = self.matrix[a, b] / (_WEIGHT[a] * _WEIGHT[b])
                for p, q in {(i, j), (j, i)}:
                    for r, s in {(k, l), (l, k)}:
                        c[p, q, r, s] = val
        return c


def apply_D(D: ElasticityTensor, s: np.ndarray) -> np.ndarray:
    """Apply ``D`` to Mandel vector(s) of shape (..., 6)."""
    return np.asarray(s, dtype=float) @ D.matrix.T


# basis of the subspace of matrices with vanishing (2,3)-block: eps(unit_k)
_HAT_BASIS = strain_of_gradient(np.eye(3))


@dataclass(frozen=True, eq=False)
class ProjectionData:
    """
    Quantities derived from ``D`` and the misfit strain.

    Attributes
    ----------
    gram : (3, 3) ndarray
        ``gram[k, l] = dot(D e_k, e_l)`` with ``e_k = eps(unit_k)``.
    eps_star : (6,) ndarray
        D-orthogonal projection of the misfit onto span{e_k}.
    u_star : (3,) ndarray
        ``(eps*_11, 2 eps*_21, 2 eps*_31)``, so that ``eps(u_star) = eps_star``.
    A : (3, 3) ndarray
        ``A v`` is the first column of ``D eps(v)``.
    misfit : (6,) ndarray
    D : ElasticityTensor
    """

    gram: np.ndarray
    eps_star: np.ndarray
    u_star: np.ndarray
    A: np.ndarray
    misfit: np.ndarray
    D: ElasticityTensor

    def residual_orthogonality(self) -> np.ndarray:
        """``dot(D(misfit - eps_star), e_k)`` for k = 1..3; zero in exact arithmetic."""
        return _HAT_BASIS @ apply_D(self.D, self.misfit - self.eps_star)


def _spd_cholesky(m: np.ndarray, what: str):
    try:
        return linalg.cho_factor(m, lower=True)
    except linalg.LinAlgError as exc:
        raise NonPositiveDefinite(f"{what} is not positive definite") from exc


def build_projection(D: ElasticityTensor, misfit: np.ndarray) -> ProjectionData:
    """
    D-orthogonal projection of ``misfit`` onto matrices of the form eps(v).

    Solves the 3x3 normal equations ``G c = r`` with ``r_k = dot(D misfit,
    e_k)``; the projected strain is ``eps(c)`` and ``u_star = c``.
    """
    misfit = np.array(misfit, dtype=float)
    De = apply_D(D, _HAT_BASIS)
    gram = De @ _HAT_BASIS.T
    gram = 0.5 * (gram + gram.T)
    factor = _spd_cholesky(gram, "Gram matrix")
    rhs = _HAT_BASIS @ apply_D(D, misfit)
    coeff = linalg.cho_solve(factor, rhs)
    eps_star = coeff @ _HAT_BASIS
    u_star = first_column(eps_star) * np.array([1.0, 2.0, 2.0])
    # column l of A is the first column of D eps(unit_l)
    A = first_column(De).T
    _spd_cholesky(0.5 * (A + A.T), "correction matrix A")
    for arr in (gram, eps_star, u_star, A, misfit):
        arr.setflags(write=False)
    return ProjectionData(
        gram=gram, eps_star=eps_star, u_star=u_star, A=A, misfit=misfit, D=D
    )
