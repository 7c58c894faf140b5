"""Jacobi reduction of translations.

Positions map through the ``(n + 1) x (n + 1)`` matrix ``L`` of
:func:`jacobi_matrix`, ``(x, B) = L q``, and momenta through its transpose,
``p = L^T (y, P)``. The pair is exact symplectic because ``p . dq`` equals
``y . dx + P . dB``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from nbody_spin.config import DEFAULT_FLOORS, Floors
from nbody_spin.exceptions import SingularConfigurationError
from nbody_spin.types import CartesianState, JacobiState, MassSystem

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Linear maps
    "jacobi_matrix",
    "separation_matrix",
    "body_pairs",
    # Coordinate changes
    "to_jacobi",
    "from_jacobi",
    # Mass parameters
    "reduced_masses",
    # Energy and angular momentum
    "kinetic_jacobi",
    "potential_jacobi",
    "hamiltonian_jacobi",
    "angular_momentum_jacobi",
]


@lru_cache(maxsize=64)
def _jacobi_matrix(masses: tuple[float, ...]) -> FloatArray:
    m = np.asarray(masses, dtype=float)
    big_m = np.cumsum(m)
    size = len(m)
    mat = np.zeros((size, size))
    for row in range(size - 1):
        mat[row, : row + 1] = m[: row + 1] / big_m[row]
        mat[row, row + 1] = -1.0
    mat[-1] = m / big_m[-1]
    mat.setflags(write=False)
    return mat


def jacobi_matrix(ms: MassSystem) -> FloatArray:
    """Matrix ``L`` with ``(x_1..x_n, B) = L (q_1..q_(n+1))``.

    Row ``i`` (``i < n``) holds ``m_j / M_(i+1)`` for ``j <= i + 1`` and ``-1``
    on body ``i + 2``; the last row gives the barycenter. ``M_0 = 0``.
    """
    return _jacobi_matrix(tuple(float(m) for m in ms.masses))


def body_pairs(ms: MassSystem) -> list[tuple[int, int]]:
    """Zero-based body pairs ``(i, j)`` with ``i < j``, in the row order of :func:`separation_matrix`."""
    size = len(ms.masses)
    return [(i, j) for i in range(size) for j in range(i + 1, size)]


@lru_cache(maxsize=64)
def _separation_matrix(masses: tuple[float, ...]) -> FloatArray:
    m = np.asarray(masses, dtype=float)
    big_m = np.cumsum(m)
    size = len(m)
    rows = []
    for i in range(size):
        for j in range(i + 1, size):
            row = np.zeros(size - 1)
            if i >= 1:
                row[i - 1] = -big_m[i - 1] / big_m[i]
            for k in range(i + 1, j):
                row[k - 1] = m[k] / big_m[k]
            row[j - 1] = 1.0
            rows.append(row)
    mat = np.array(rows)
    mat.setflags(write=False)
    return mat


def separation_matrix(ms: MassSystem) -> FloatArray:
    """Coefficients of ``q_i - q_j`` in the Jacobi vectors.

    Row ``k`` belongs to ``body_pairs(ms)[k]``; ``q_i - q_j = sum_l K[k, l] x_l``.

    Example:
        >>> separation_matrix(MassSystem(masses=(1.0, 1.0, 1.0))).tolist()
        [[1.0, 0.0], [0.5, 1.0], [-0.5, 1.0]]
    """
    return _separation_matrix(tuple(float(m) for m in ms.masses))


def to_jacobi(ms: MassSystem, s: CartesianState) -> JacobiState:
    """Cartesian state to Jacobi coordinates.

    Example:
        >>> ms = MassSystem(masses=(1.0, 1.0, 1.0))
        >>> q = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0]])
        >>> js = to_jacobi(ms, CartesianState(p=np.zeros((3, 3)), q=q))
        >>> js.x.tolist()
        [[2.0, 0.0, 0.0], [0.0, -1.0, 0.0]]
    """
    mat = jacobi_matrix(ms)
    xb = mat @ np.asarray(s.q, dtype=float)
    yp = np.linalg.solve(mat.T, np.asarray(s.p, dtype=float))
    return JacobiState(P=yp[-1], B=xb[-1], y=yp[:-1], x=xb[:-1])


def from_jacobi(ms: MassSystem, js: JacobiState) -> CartesianState:
    """Inverse of :func:`to_jacobi`."""
    mat = jacobi_matrix(ms)
    xb = np.vstack([np.asarray(js.x, dtype=float), np.asarray(js.B, dtype=float)[None, :]])
    yp = np.vstack([np.asarray(js.y, dtype=float), np.asarray(js.P, dtype=float)[None, :]])
    return CartesianState(p=mat.T @ yp, q=np.linalg.solve(mat, xb))


def reduced_masses(ms: MassSystem) -> FloatArray:
    """``mu_i = m_(i+1) M_i / M_(i+1)`` for ``i = 1..n``."""
    return ms.reduced


def kinetic_jacobi(ms: MassSystem, y: FloatArray) -> float:
    """Kinetic energy ``sum |y_i|^2 / (2 mu_i)`` of the relative motion."""
    y = np.asarray(y, dtype=float)
    return float(0.5 * np.sum(np.sum(y**2, axis=1) / ms.reduced))


def potential_jacobi(ms: MassSystem, x: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """Newtonian potential with every separation recombined from the Jacobi vectors.

    Raises:
        SingularConfigurationError: If a recombined separation is below the distance floor.
    """
    sep = separation_matrix(ms) @ np.asarray(x, dtype=float)
    dist = np.linalg.norm(sep, axis=1)
    k = int(np.argmin(dist))
    if dist[k] < floors.distance:
        raise SingularConfigurationError(pair=body_pairs(ms)[k], distance=float(dist[k]))
    m = ms.values
    weights = np.array([m[i] * m[j] for i, j in body_pairs(ms)])
    return float(-np.sum(weights / dist))


def hamiltonian_jacobi(ms: MassSystem, y: FloatArray, x: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """Energy of the relative motion; the Cartesian energy is this plus ``|P|^2 / (2 M)``."""
    return kinetic_jacobi(ms, y) + potential_jacobi(ms, x, floors=floors)


def angular_momentum_jacobi(P: FloatArray, B: FloatArray, y: FloatArray, x: FloatArray) -> FloatArray:  # noqa: N803
    """``B x P + sum x_i x y_i``."""
    return np.cross(np.asarray(B, dtype=float), np.asarray(P, dtype=float)) + np.sum(
        np.cross(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), axis=0
    )
