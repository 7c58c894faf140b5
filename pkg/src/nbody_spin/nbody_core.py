"""Physical-space model of the ``n + 1`` gravitating bodies.

Units have ``G = 1``. Every function is pure; states are never mutated.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import solve_ivp

from nbody_spin.config import DEFAULT_FLOORS, DEFAULT_SOLVER, Floors, SolverConfig, with_tolerance
from nbody_spin.exceptions import DegenerateNormalizationError, SingularConfigurationError, StepFailureError
from nbody_spin.types import CartesianState, CartesianTrajectory, MassSystem

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Geometry
    "pair_distances",
    "center_of_mass",
    "normalized_configuration",
    # Energy and momenta
    "kinetic_cartesian",
    "potential_cartesian",
    "hamiltonian_cartesian",
    "angular_momentum_cartesian",
    # Dynamics
    "gravitational_field",
    "integrate_cartesian",
]

logger = logging.getLogger(__name__)


def pair_distances(q: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> FloatArray:
    """Matrix of mutual distances ``r_ij`` (zero on the diagonal).

    Raises:
        SingularConfigurationError: If two bodies are closer than ``floors.distance``.
    """
    q = np.asarray(q, dtype=float)
    diff = q[:, None, :] - q[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    off = dist + np.diag(np.full(len(q), np.inf))
    i, j = np.unravel_index(np.argmin(off), off.shape)
    if off[i, j] < floors.distance:
        raise SingularConfigurationError(pair=(int(min(i, j)), int(max(i, j))), distance=float(off[i, j]))
    return dist


def center_of_mass(ms: MassSystem, q: FloatArray) -> FloatArray:
    """Barycenter ``B = sum m_i q_i / M``."""
    return ms.values @ np.asarray(q, dtype=float) / ms.total


def normalized_configuration(ms: MassSystem, q: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> FloatArray:
    """Barycentric configuration scaled to unit mass-weighted norm.

    Args:
        ms: The masses.
        q: Positions, shape ``(n + 1, 3)``.
        floors: Numerical floors.

    Returns:
        ``(q_i - B) / |q - B|_m`` with ``|z|_m = sqrt(sum m_i |z_i|^2)``.

    Raises:
        DegenerateNormalizationError: If every body sits at the barycenter.

    Example:
        >>> ms = MassSystem(masses=(1.0, 1.0))
        >>> normalized_configuration(ms, np.array([[1.0, 0, 0], [-1.0, 0, 0]]))[0, 0]
        0.7071067811865475
    """
    q = np.asarray(q, dtype=float)
    centered = q - center_of_mass(ms, q)
    norm = float(np.sqrt(np.sum(ms.values * np.sum(centered**2, axis=1))))
    if norm < floors.normalization:
        raise DegenerateNormalizationError(norm=norm)
    return centered / norm


def kinetic_cartesian(ms: MassSystem, p: FloatArray) -> float:
    """Kinetic energy ``sum |p_i|^2 / (2 m_i)``."""
    p = np.asarray(p, dtype=float)
    return float(0.5 * np.sum(np.sum(p**2, axis=1) / ms.values))


def potential_cartesian(ms: MassSystem, q: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """Newtonian potential ``-sum_(i<j) m_i m_j / r_ij``."""
    dist = pair_distances(q, floors=floors)
    m = ms.values
    iu = np.triu_indices(len(m), k=1)
    return float(-np.sum(np.outer(m, m)[iu] / dist[iu]))


def hamiltonian_cartesian(ms: MassSystem, s: CartesianState, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """Total energy of a Cartesian state.

    Raises:
        SingularConfigurationError: If two bodies collide.
    """
    return kinetic_cartesian(ms, s.p) + potential_cartesian(ms, s.q, floors=floors)


def angular_momentum_cartesian(s: CartesianState) -> FloatArray:
    """Total angular momentum ``sum q_i x p_i``."""
    return np.sum(np.cross(np.asarray(s.q, dtype=float), np.asarray(s.p, dtype=float)), axis=0)


def _accelerations(ms: MassSystem, q: FloatArray, floors: Floors) -> FloatArray:
    """Forces ``m_i sum_(j != i) m_j (q_j - q_i) / r_ij^3``."""
    dist = pair_distances(q, floors=floors)
    m = ms.values
    diff = q[None, :, :] - q[:, None, :]
    inv3 = np.zeros_like(dist)
    mask = ~np.eye(len(m), dtype=bool)
    inv3[mask] = dist[mask] ** -3
    return m[:, None] * np.einsum("ij,j,ijk->ik", inv3, m, diff)


def gravitational_field(ms: MassSystem, s: CartesianState, *, floors: Floors = DEFAULT_FLOORS) -> CartesianState:
    """Time derivative of a Cartesian state.

    Returns:
        A :class:`CartesianState` whose ``p`` holds ``dp/dt`` and ``q`` holds ``dq/dt``.

    Raises:
        SingularConfigurationError: If two bodies are closer than the distance floor.
    """
    q = np.asarray(s.q, dtype=float)
    p = np.asarray(s.p, dtype=float)
    return CartesianState(p=_accelerations(ms, q, floors), q=p / ms.values[:, None])


def integrate_cartesian(
    ms: MassSystem,
    s0: CartesianState,
    t_span: tuple[float, float],
    tol: float | None = None,
    *,
    t_eval: FloatArray | None = None,
    collision_radius: float | None = None,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> CartesianTrajectory:
    """Reference adaptive integration of the Newtonian flow.

    The run stops early, with ``collided`` set, when the smallest mutual
    distance reaches ``collision_radius``; reaching it is a result, not an error.

    Args:
        ms: The masses.
        s0: Initial state.
        t_span: Start and end time.
        tol: Overrides both solver tolerances.
        t_eval: Output times; the solver's own steps when omitted.
        collision_radius: Distance that triggers the collision event. Defaults to the distance floor.
        solver: Integrator settings.
        floors: Numerical floors.

    Returns:
        The sampled trajectory.

    Raises:
        StepFailureError: If the integrator cannot continue.
    """
    solver = with_tolerance(solver, tol)
    radius = floors.distance if collision_radius is None else collision_radius
    nb = len(ms.masses)
    pair_floor = replace(floors, distance=min(floors.distance, 0.5 * radius))

    def rhs(_t: float, z: FloatArray) -> FloatArray:
        p, q = z[: 3 * nb].reshape(nb, 3), z[3 * nb :].reshape(nb, 3)
        return np.concatenate([_accelerations(ms, q, pair_floor).ravel(), (p / ms.values[:, None]).ravel()])

    def collision(_t: float, z: FloatArray) -> float:
        q = z[3 * nb :].reshape(nb, 3)
        diff = q[:, None, :] - q[None, :, :]
        dist = np.linalg.norm(diff, axis=-1) + np.diag(np.full(nb, np.inf))
        return float(np.min(dist) - radius)

    collision.terminal = True  # type: ignore[attr-defined]
    collision.direction = -1  # type: ignore[attr-defined]

    z0 = np.concatenate([np.asarray(s0.p, dtype=float).ravel(), np.asarray(s0.q, dtype=float).ravel()])
    sol = solve_ivp(
        rhs,
        t_span,
        z0,
        method=solver.method,
        t_eval=t_eval,
        rtol=solver.rtol,
        atol=solver.atol,
        max_step=solver.max_step,
        events=collision,
    )
    if sol.status < 0:
        raise StepFailureError(tau=float(sol.t[-1]) if sol.t.size else t_span[0], solver_message=sol.message)

    collided = sol.status == 1
    collision_time = float(sol.t_events[0][0]) if collided else None
    t, z = sol.t, sol.y.T
    if collided and (t.size == 0 or t[-1] < collision_time):
        t = np.append(t, collision_time)
        z = np.vstack([z, sol.y_events[0][0]])
    if collided:
        logger.info("Cartesian run stopped by collision event at t=%.6g", collision_time)
    return CartesianTrajectory(
        t=t,
        p=z[:, : 3 * nb].reshape(-1, nb, 3),
        q=z[:, 3 * nb :].reshape(-1, nb, 3),
        collided=collided,
        collision_time=collision_time,
        nfev=int(sol.nfev),
    )
