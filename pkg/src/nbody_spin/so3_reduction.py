"""Reduction of rotations with a moving frame and Euler angles.

The frame ``(f1, f2, f3)`` is attached to the last two Jacobi vectors; its
orientation relative to the fixed axes is the Euler triple ``(phi, theta,
psi)`` with ``R = R3(phi) R1(theta) R3(psi)``. Frame coordinates ``xi_j =
R^T x_j`` have the structural zeros ``xi_(n-1,1) = xi_(n,1) = xi_(n,2) = 0``;
the matching momentum components are not free and are rebuilt from the
angular momentum ``(Phi, Theta, Psi)`` by :func:`frame_momenta`.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from nbody_spin.config import DEFAULT_FLOORS, Floors
from nbody_spin.exceptions import (
    ConfigurationError,
    DivisionDegenerateError,
    FrameDegenerateError,
    GimbalDegenerateError,
)
from nbody_spin.jacobi import kinetic_jacobi, potential_jacobi
from nbody_spin.types import EulerTriple, MassSystem, ReducedState

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Frame vector layout
    "embed_frame_vectors",
    "flatten_frame_vectors",
    # Frame and angles
    "moving_frame",
    "euler_angles",
    "rotation_from_euler",
    "node_line",
    # Reduction
    "reduce",
    "reconstruct",
    "frame_momenta",
    "frame_angular_momentum",
    "psi_partial",
    "angular_momentum_frame",
    "hamiltonian_so3",
    "euler_rates",
    # Flat canonical vector
    "reduced_coordinates",
    "reduced_state_from_coordinates",
]

_TWO_PI = 2.0 * math.pi


def embed_frame_vectors(flat: FloatArray, n: int) -> FloatArray:
    """Expand a flat ``3n - 3`` (or ``3n - 4``) frame vector to ``(n, 3)`` blocks with the structural zeros.

    A ``3n - 4`` input has no last block entry and is embedded with ``xi_(n,3) = 0``.
    """
    flat = np.asarray(flat, dtype=float)
    out = np.zeros((n, 3), dtype=flat.dtype)
    full = 3 * (n - 2)
    out[: n - 2] = flat[:full].reshape(n - 2, 3)
    out[n - 2, 1:] = flat[full : full + 2]
    if flat.size == 3 * n - 3:
        out[n - 1, 2] = flat[-1]
    return out


def flatten_frame_vectors(blocks: FloatArray) -> FloatArray:
    """Inverse of :func:`embed_frame_vectors` for full ``(n, 3)`` blocks; the structural slots are dropped."""
    blocks = np.asarray(blocks)
    n = blocks.shape[0]
    return np.concatenate([blocks[: n - 2].ravel(), blocks[n - 2, 1:], blocks[n - 1, 2:]])


def moving_frame(x_prev: FloatArray, x_last: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> FloatArray:
    """Orthonormal frame attached to ``x_(n-1)`` and ``x_n``.

    Args:
        x_prev: ``x_(n-1)``.
        x_last: ``x_n``.
        floors: Numerical floors.

    Returns:
        The matrix with columns ``f1 = x_n x x_(n-1) / |.|``, ``f2 = f3 x f1``, ``f3 = x_n / |x_n|``.

    Raises:
        FrameDegenerateError: If ``|x_n x x_(n-1)|`` is below the frame floor.

    Example:
        >>> f = moving_frame(np.array([0.0, 0, -1]), np.array([0.0, -1, 0]))
        >>> bool(np.allclose(f, [[1, 0, 0], [0, 0, -1], [0, 1, 0]]))
        True
    """
    x_prev = np.asarray(x_prev, dtype=float)
    x_last = np.asarray(x_last, dtype=float)
    cross = np.cross(x_last, x_prev)
    cross_norm = float(np.linalg.norm(cross))
    if cross_norm < floors.frame:
        raise FrameDegenerateError(cross_norm=cross_norm)
    f3 = x_last / np.linalg.norm(x_last)
    f1 = cross / cross_norm
    f2 = np.cross(f3, f1)
    return np.column_stack([f1, f2, f3])


def euler_angles(frame: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> EulerTriple:
    """Euler triple of a right-handed frame.

    Uses ``f3 = (sin phi sin theta, -cos phi sin theta, cos theta)`` and the
    third row ``(sin theta sin psi, sin theta cos psi, cos theta)``.

    Raises:
        GimbalDegenerateError: If ``f3`` is (anti)parallel to ``e3``.
    """
    f = np.asarray(frame, dtype=float)
    sin_theta = math.hypot(f[0, 2], f[1, 2])
    if sin_theta < floors.gimbal:
        raise GimbalDegenerateError(sin_theta=sin_theta)
    theta = math.atan2(sin_theta, f[2, 2])
    phi = math.atan2(f[0, 2], -f[1, 2]) % _TWO_PI
    psi = math.atan2(f[2, 0], f[2, 1]) % _TWO_PI
    return EulerTriple(phi=phi, theta=theta, psi=psi)


def _r3(angle: float) -> FloatArray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _r1(angle: float) -> FloatArray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_from_euler(t: EulerTriple) -> FloatArray:
    """``R3(phi) R1(theta) R3(psi)``; its columns are ``(f1, f2, f3)``."""
    return _r3(t.phi) @ _r1(t.theta) @ _r3(t.psi)


def node_line(t: EulerTriple) -> FloatArray:
    """Unit vector ``gamma = e3 x f3 / |e3 x f3| = R3(phi) e1``."""
    return np.array([math.cos(t.phi), math.sin(t.phi), 0.0])


def _require_reducible(n: int) -> None:
    if n < 2:  # noqa: PLR2004
        raise ConfigurationError("rotation reduction needs at least three bodies", detail=n + 1)


def reduce(ms: MassSystem, y: FloatArray, x: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> ReducedState:
    """Jacobi momenta and vectors to the rotation-reduced chart.

    Args:
        ms: The masses.
        y: Jacobi momenta, shape ``(n, 3)``.
        x: Jacobi vectors, shape ``(n, 3)``.
        floors: Numerical floors.

    Returns:
        The reduced state.

    Raises:
        FrameDegenerateError: If the last two Jacobi vectors are parallel.
        GimbalDegenerateError: If ``x_n`` is parallel to ``e3``.
    """
    _require_reducible(ms.n)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    frame = moving_frame(x[-2], x[-1], floors=floors)
    angles = euler_angles(frame, floors=floors)
    xi = x @ frame
    zeta = y @ frame
    c = np.sum(np.cross(x, y), axis=0)
    return ReducedState(
        Phi=float(c[2]),
        Theta=float(c @ node_line(angles)),
        Psi=float(c @ frame[:, 2]),
        eta=flatten_frame_vectors(zeta),
        angles=angles,
        xi=flatten_frame_vectors(xi),
    )


def _psi_vector(zeta: FloatArray, xi: FloatArray, p: int) -> FloatArray:
    if p <= 0:
        return np.zeros(3)
    return np.sum(np.cross(xi[:p], zeta[:p]), axis=0)


def psi_partial(eta: FloatArray, xi: FloatArray, k: int, p: int) -> float:
    """``Psi_k^(p) = sum_(j <= p) (xi_j x eta_j) . e_k``.

    Args:
        eta: Momentum-like blocks, shape ``(m, 3)``.
        xi: Position-like blocks, same shape.
        k: Component, 1 to 3.
        p: Number of leading blocks summed; ``p = 0`` is the empty sum.

    Raises:
        ConfigurationError: If ``k`` or ``p`` is out of range.

    Example:
        >>> psi_partial(np.array([[0.0, 1, 0]]), np.array([[1.0, 0, 0]]), k=3, p=1)
        1.0
    """
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if k not in (1, 2, 3) or not 0 <= p <= len(xi):
        raise ConfigurationError("psi_partial index out of range", detail={"k": k, "p": p})
    return float(_psi_vector(eta, xi, p)[k - 1])


def frame_angular_momentum(
    Phi: float,  # noqa: N803
    Theta: float,  # noqa: N803
    Psi: float,  # noqa: N803
    angles: EulerTriple,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> FloatArray:
    """Components ``(C1, C2, C3)`` of the angular momentum on the moving frame.

    Raises:
        GimbalDegenerateError: If ``sin(theta)`` is below the floor and the angular momentum is not zero.
    """
    if Phi == 0.0 and Theta == 0.0 and Psi == 0.0:
        return np.zeros(3)
    sin_theta = math.sin(angles.theta)
    if abs(sin_theta) < floors.gimbal:
        raise GimbalDegenerateError(sin_theta=sin_theta)
    k0 = (Phi - Psi * math.cos(angles.theta)) / sin_theta
    cpsi, spsi = math.cos(angles.psi), math.sin(angles.psi)
    return np.array([Theta * cpsi + k0 * spsi, -Theta * spsi + k0 * cpsi, Psi])


def frame_momenta(rs: ReducedState, *, floors: Floors = DEFAULT_FLOORS) -> FloatArray:
    """Frame momenta ``zeta_j = R^T y_j`` with the three dependent components rebuilt.

    ``zeta_(n-1,1)``, ``zeta_(n,1)`` and ``zeta_(n,2)`` follow from requiring
    ``sum xi_j x zeta_j`` to equal the frame components of ``(Phi, Theta, Psi)``.

    Raises:
        DivisionDegenerateError: If ``|xi_(n-1,2)|`` or ``xi_(n,3)`` is below the division floor.
        GimbalDegenerateError: If ``sin(theta)`` is below the floor and the angular momentum is not zero.
    """
    n = rs.n
    xi = embed_frame_vectors(rs.xi, n)
    zeta = embed_frame_vectors(rs.eta, n)
    a2, a3 = xi[n - 2, 1], xi[n - 2, 2]
    r = xi[n - 1, 2]
    if abs(a2) < floors.division:
        raise DivisionDegenerateError("xi[n-1,2]", float(a2))
    if r < floors.division:
        raise DivisionDegenerateError("xi[n,3]", float(r))
    c = frame_angular_momentum(rs.Phi, rs.Theta, rs.Psi, rs.angles, floors=floors)
    head = _psi_vector(zeta, xi, n - 2)
    zeta[n - 2, 0] = -(c[2] - head[2]) / a2
    psi1_prev = head[0] + a2 * zeta[n - 2, 2] - a3 * zeta[n - 2, 1]
    zeta[n - 1, 0] = (c[1] - head[1] - a3 * zeta[n - 2, 0]) / r
    zeta[n - 1, 1] = (psi1_prev - c[0]) / r
    return zeta


def reconstruct(
    ms: MassSystem,  # noqa: ARG001
    rs: ReducedState,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> tuple[FloatArray, FloatArray]:
    """Inverse of :func:`reduce`.

    Returns:
        Jacobi momenta ``y`` and vectors ``x``, each of shape ``(n, 3)``.

    Raises:
        DivisionDegenerateError: If a frame divisor is below its floor.
        GimbalDegenerateError: If ``sin(theta)`` is below the gimbal floor.
    """
    sin_theta = math.sin(rs.angles.theta)
    if abs(sin_theta) < floors.gimbal:
        raise GimbalDegenerateError(sin_theta=sin_theta)
    rot = rotation_from_euler(rs.angles)
    xi = embed_frame_vectors(rs.xi, rs.n)
    zeta = frame_momenta(rs, floors=floors)
    return zeta @ rot.T, xi @ rot.T


def angular_momentum_frame(rs: ReducedState, *, floors: Floors = DEFAULT_FLOORS) -> FloatArray:
    """Angular momentum in fixed axes rebuilt from ``(Phi, Theta, Psi)`` and the Euler angles."""
    return rotation_from_euler(rs.angles) @ frame_angular_momentum(rs.Phi, rs.Theta, rs.Psi, rs.angles, floors=floors)


def hamiltonian_so3(ms: MassSystem, rs: ReducedState, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """Energy in the reduced chart.

    The kinetic term is evaluated on the frame momenta; the potential depends
    on ``xi`` alone. With ``Phi = Theta = Psi = 0`` the value does not depend
    on the Euler angles.

    Raises:
        DivisionDegenerateError: If a frame divisor is below its floor.
    """
    zeta = frame_momenta(rs, floors=floors)
    return kinetic_jacobi(ms, zeta) + potential_jacobi(ms, embed_frame_vectors(rs.xi, rs.n), floors=floors)


def euler_rates(
    ms: MassSystem,
    eta: FloatArray,
    xi: FloatArray,
    angles: EulerTriple,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> FloatArray:
    """Physical-time ``(phi', theta', psi')`` at zero angular momentum.

    These are the partial derivatives of :func:`hamiltonian_so3` with respect
    to ``(Phi, Theta, Psi)`` at ``Phi = Theta = Psi = 0``; they are singular at
    ``sin(theta) = 0``.

    Raises:
        GimbalDegenerateError: If ``sin(theta)`` is below the gimbal floor.
        DivisionDegenerateError: If a frame divisor is below its floor.
    """
    sin_theta = math.sin(angles.theta)
    if abs(sin_theta) < floors.gimbal:
        raise GimbalDegenerateError(sin_theta=sin_theta)
    xi_flat = np.asarray(xi, dtype=float)
    n = (xi_flat.size + 3) // 3
    rs = ReducedState(Phi=0.0, Theta=0.0, Psi=0.0, eta=np.asarray(eta, dtype=float), angles=angles, xi=xi_flat)
    zeta = frame_momenta(rs, floors=floors)
    blocks = embed_frame_vectors(xi_flat, n)
    mu = ms.reduced
    a2, a3, r = blocks[n - 2, 1], blocks[n - 2, 2], blocks[n - 1, 2]
    z1, w1, w2 = zeta[n - 2, 0], zeta[n - 1, 0], zeta[n - 1, 1]
    cot = math.cos(angles.theta) / sin_theta
    cpsi, spsi = math.cos(angles.psi), math.sin(angles.psi)
    phi_dot = (w1 * cpsi - w2 * spsi) / (r * mu[-1] * sin_theta)
    theta_dot = -(w1 * spsi + w2 * cpsi) / (r * mu[-1])
    psi_dot = -z1 / (mu[-2] * a2) + (w1 * (a3 / a2 - cot * cpsi) + w2 * cot * spsi) / (r * mu[-1])
    return np.array([phi_dot, theta_dot, psi_dot])


def reduced_coordinates(rs: ReducedState) -> FloatArray:
    """Flat ``6n`` canonical vector ``(Phi, Theta, Psi, eta, phi, theta, psi, xi)``."""
    a = rs.angles
    return np.concatenate([[rs.Phi, rs.Theta, rs.Psi], rs.eta, [a.phi, a.theta, a.psi], rs.xi])


def reduced_state_from_coordinates(n: int, vec: FloatArray) -> ReducedState:
    """Inverse of :func:`reduced_coordinates`."""
    vec = np.asarray(vec, dtype=float)
    half = 3 * n
    momenta, positions = vec[:half], vec[half:]
    return ReducedState(
        Phi=float(momenta[0]),
        Theta=float(momenta[1]),
        Psi=float(momenta[2]),
        eta=momenta[3:].copy(),
        angles=EulerTriple(phi=float(positions[0]), theta=float(positions[1]), psi=float(positions[2])),
        xi=positions[3:].copy(),
    )
