"""Shape/radius chart and the regularized Euler block.

The frame coordinates split into a radius ``rho = |xi|_mu`` and a shape
``sigma = xi_hat / r`` (``xi_hat`` drops the last entry ``r = xi_(n,3)``);
``N = |(sigma, 1)|_mu = rho / r``. At zero angular momentum the energy is

    R^2 / 2 + T(S, sigma) / rho^2 - V(sigma) / rho,

with ``T = S . A(sigma) S / 2`` and ``V`` built from the recombined mutual
distances. The Euler block is replaced by ``u = sin(theta) cos(psi)``,
``v = sin(theta) sin(psi)``, ``alpha = phi + psi`` on either side of
``theta = pi/2``.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np

from nbody_spin.config import DEFAULT_FLOORS, Floors
from nbody_spin.exceptions import (
    ChartDomainError,
    ChartSeamError,
    ConfigurationError,
    DivisionDegenerateError,
    GimbalDegenerateError,
    SingularConfigurationError,
)
from nbody_spin.jacobi import body_pairs, separation_matrix
from nbody_spin.so3_reduction import embed_frame_vectors, flatten_frame_vectors, frame_angular_momentum, moving_frame
from nbody_spin.types import Chart, EulerTriple, MassSystem, RegularizedAngles, ShapeState

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Layout helpers
    "frame_masses",
    "shape_dimension",
    "shape_norm",
    "shape_configuration",
    "shape_from_configuration",
    "reflect_shape",
    # Shape/radius chart
    "shape_split",
    "shape_merge",
    # Shape energy
    "shape_potential",
    "shape_potential_excess",
    "shape_potential_gradient",
    "psi_functionals",
    "kinetic_matrix",
    "shape_kinetic",
    "hamiltonian_shape",
    # Regularized angles
    "regularize",
    "deregularize",
    "w_matrix",
    "w_field",
    "euler_matrix",
    "euler_field",
]

logger = logging.getLogger(__name__)

_TWO_PI = 2.0 * math.pi


def frame_masses(ms: MassSystem) -> FloatArray:
    """Reduced mass attached to every entry of a flat ``3n - 3`` frame vector."""
    mu = ms.reduced
    n = ms.n
    return np.concatenate([np.repeat(mu[: n - 2], 3), [mu[n - 2], mu[n - 2]], [mu[n - 1]]])


def shape_dimension(n: int) -> int:
    """Number of shape coordinates, ``3n - 4``."""
    return 3 * n - 4


def shape_norm(ms: MassSystem, sigma: FloatArray) -> float:
    """``N = |(sigma, 1)|_mu``."""
    mu_hat = frame_masses(ms)[:-1]
    sigma = np.asarray(sigma, dtype=float)
    return float(np.sqrt(np.sum(mu_hat * sigma**2) + ms.reduced[-1]))


def shape_configuration(ms: MassSystem, sigma: FloatArray) -> FloatArray:
    """Frame blocks ``(n, 3)`` of the configuration ``(sigma, 1)`` (so ``xi_(n,3) = 1``)."""
    return embed_frame_vectors(np.append(np.asarray(sigma, dtype=float), 1.0), ms.n)


def shape_from_configuration(ms: MassSystem, x: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> FloatArray:
    """Shape ``sigma`` of Jacobi vectors ``x``, read on their moving frame.

    Raises:
        FrameDegenerateError: If the last two Jacobi vectors are parallel.
    """
    x = np.asarray(x, dtype=float)
    frame = moving_frame(x[-2], x[-1], floors=floors)
    xi = flatten_frame_vectors(x @ frame)
    return xi[:-1] / xi[-1]


def reflect_shape(sigma: FloatArray, n: int) -> FloatArray:
    """Mirror image of a shape through the ``(f1, f3)`` plane; mutual distances are unchanged."""
    blocks = embed_frame_vectors(np.append(np.asarray(sigma, dtype=float), 0.0), n)
    blocks[:, 1] *= -1.0
    return flatten_frame_vectors(blocks)[:-1]


def shape_split(ms: MassSystem, eta: FloatArray, xi: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> ShapeState:
    """Frame momenta and coordinates to the shape/radius chart.

    Args:
        ms: The masses.
        eta: Flat frame momenta, length ``3n - 3``.
        xi: Flat frame coordinates, length ``3n - 3``.
        floors: Numerical floors.

    Returns:
        ``(S, R, sigma, rho)`` with ``S . dsigma + R drho = eta . dxi``.

    Raises:
        DivisionDegenerateError: If ``r = xi_(n,3)`` is below the division floor.
    """
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r = float(xi[-1])
    if r < floors.division:
        raise DivisionDegenerateError("xi[n,3]", r)
    mu = frame_masses(ms)
    rho = float(np.sqrt(np.sum(mu * xi**2)))
    sigma = xi[:-1] / r
    big_n = rho / r
    radial = float(eta @ xi) / rho
    momenta = r * (eta[:-1] - (radial / big_n) * mu[:-1] * sigma)
    return ShapeState(momenta=momenta, radial=radial, sigma=sigma, rho=rho)


def shape_merge(ms: MassSystem, ss: ShapeState, *, floors: Floors = DEFAULT_FLOORS) -> tuple[FloatArray, FloatArray]:
    """Inverse of :func:`shape_split`.

    Returns:
        Flat frame momenta ``eta`` and coordinates ``xi``.

    Raises:
        DivisionDegenerateError: If ``rho`` is below the normalization floor.
    """
    if ss.rho < floors.normalization:
        raise DivisionDegenerateError("rho", float(ss.rho))
    sigma = np.asarray(ss.sigma, dtype=float)
    momenta = np.asarray(ss.momenta, dtype=float)
    mu = frame_masses(ms)
    big_n = shape_norm(ms, sigma)
    xi = np.append(ss.rho * sigma / big_n, ss.rho / big_n)
    eta_hat = (big_n / ss.rho) * momenta + (ss.radial / big_n) * mu[:-1] * sigma
    big_r = -(big_n / ss.rho) * float(momenta @ sigma) + mu[-1] * ss.radial / big_n
    return np.append(eta_hat, big_r), xi


def _separations(ms: MassSystem, sigma: FloatArray, floors: Floors) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Pair separation vectors of ``(sigma, 1)``, their lengths and the mass products."""
    seps = separation_matrix(ms) @ shape_configuration(ms, sigma)
    dist = np.linalg.norm(seps, axis=1)
    k = int(np.argmin(dist))
    if dist[k] < floors.distance:
        raise SingularConfigurationError(pair=body_pairs(ms)[k], distance=float(dist[k]))
    m = ms.values
    weights = np.array([m[i] * m[j] for i, j in body_pairs(ms)])
    return seps, dist, weights


def shape_potential(ms: MassSystem, sigma: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """``V(sigma) = N sum m_i m_j / r_ij(sigma, 1)``, strictly positive.

    Raises:
        SingularConfigurationError: If a recombined mutual distance vanishes.
    """
    _, dist, weights = _separations(ms, sigma, floors)
    return shape_norm(ms, sigma) * float(np.sum(weights / dist))


def shape_potential_excess(
    ms: MassSystem, sigma: FloatArray, sigma_ref: FloatArray, *, floors: Floors = DEFAULT_FLOORS
) -> float:
    """``V(sigma) - V(sigma_ref)`` without subtracting the two potentials.

    Near a critical point the difference is of order ``|sigma - sigma_ref|^2`` while each term
    is of order one. Splitting it as ``(N - N*) S + N* (S - S*)`` keeps the relative accuracy
    of the displacement instead of that of ``V``.

    Raises:
        SingularConfigurationError: If a recombined mutual distance vanishes.
    """
    sigma = np.asarray(sigma, dtype=float)
    sigma_ref = np.asarray(sigma_ref, dtype=float)
    delta = sigma - sigma_ref
    mu_hat = frame_masses(ms)[:-1]
    big_n = shape_norm(ms, sigma)
    big_n_ref = shape_norm(ms, sigma_ref)
    norm_gap = float(np.sum(mu_hat * delta * (sigma + sigma_ref))) / (big_n + big_n_ref)
    seps, dist, weights = _separations(ms, sigma, floors)
    seps_ref, dist_ref, _ = _separations(ms, sigma_ref, floors)
    # the separation map is linear in the frame blocks
    seps_gap = separation_matrix(ms) @ embed_frame_vectors(np.append(delta, 0.0), ms.n)
    dist_gap = np.einsum("pk,pk->p", seps_gap, seps + seps_ref) / (dist + dist_ref)
    inverse_gap = -float(np.sum(weights * dist_gap / (dist * dist_ref)))
    return norm_gap * float(np.sum(weights / dist)) + big_n_ref * inverse_gap


def shape_potential_gradient(ms: MassSystem, sigma: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> FloatArray:
    """Closed-form gradient of :func:`shape_potential`."""
    sigma = np.asarray(sigma, dtype=float)
    seps, dist, weights = _separations(ms, sigma, floors)
    big_n = shape_norm(ms, sigma)
    inverse_sum = float(np.sum(weights / dist))
    coeff = weights / dist**3
    grad_blocks = -np.einsum("p,pb,pk->bk", coeff, separation_matrix(ms), seps)
    grad_u = flatten_frame_vectors(grad_blocks)[:-1]
    mu_hat = frame_masses(ms)[:-1]
    return inverse_sum * mu_hat * sigma / big_n + big_n * grad_u


def _functional(sigma_blocks: FloatArray, k: int, p: int) -> FloatArray:
    """Vector ``l`` with ``Psi_k^(p)(S, sigma) = l . S`` (flat shape layout)."""
    out = np.zeros_like(sigma_blocks)
    if p > 0:
        out[:p] = np.cross(np.eye(3)[k - 1], sigma_blocks[:p])
    return flatten_frame_vectors(out)[:-1]


def psi_functionals(
    ms: MassSystem,
    sigma: FloatArray,
    *,
    need_division: bool | None = None,
    floors: Floors = DEFAULT_FLOORS,
) -> tuple[FloatArray, FloatArray, FloatArray, float, float]:
    """Linear forms behind the angular part of the kinetic energy.

    Returns:
        ``(l_a, l_b, l_c, s, inv_s2sq)`` with ``a = Psi_3^(n-2) = l_a . S``,
        ``b = Psi_2^(n-2) + s a = l_b . S``, ``c = Psi_1^(n-1) = l_c . S``,
        ``s = sigma_(n-1,3) / sigma_(n-1,2)`` and ``inv_s2sq = 1 / sigma_(n-1,2)^2``.
        For three bodies ``l_a = l_b = 0`` and, unless ``need_division`` is set,
        ``s`` and ``inv_s2sq`` are returned as zero without dividing.

    Raises:
        DivisionDegenerateError: If a division by ``sigma_(n-1,2)`` is needed and it is below the floor.
    """
    n = ms.n
    sigma = np.asarray(sigma, dtype=float)
    blocks = embed_frame_vectors(np.append(sigma, 0.0), n)
    l_a = _functional(blocks, 3, n - 2)
    l_c = _functional(blocks, 1, n - 1)
    if need_division is None:
        need_division = n >= 3  # noqa: PLR2004
    if not need_division:
        return l_a, np.zeros_like(l_a), l_c, 0.0, 0.0
    s2 = float(blocks[n - 2, 1])
    if abs(s2) < floors.division:
        raise DivisionDegenerateError("sigma[n-1,2]", s2)
    s = float(blocks[n - 2, 2]) / s2
    l_b = _functional(blocks, 2, n - 2) + s * l_a
    return l_a, l_b, l_c, s, 1.0 / s2**2


def kinetic_matrix(ms: MassSystem, sigma: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> FloatArray:
    """Symmetric positive-definite ``A(sigma)`` with ``T(S, sigma) = S . A S / 2``."""
    sigma = np.asarray(sigma, dtype=float)
    mu = ms.reduced
    mu_hat = frame_masses(ms)[:-1]
    l_a, l_b, l_c, _, inv_s2sq = psi_functionals(ms, sigma, floors=floors)
    mat = (
        np.diag(1.0 / mu_hat)
        + np.outer(sigma, sigma) / mu[-1]
        + np.outer(l_a, l_a) * inv_s2sq / mu[-2]
        + (np.outer(l_b, l_b) + np.outer(l_c, l_c)) / mu[-1]
    )
    return shape_norm(ms, sigma) ** 2 * mat


def shape_kinetic(ms: MassSystem, momenta: FloatArray, sigma: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """``T(S, sigma) = S . A(sigma) S / 2``."""
    momenta = np.asarray(momenta, dtype=float)
    return 0.5 * float(momenta @ kinetic_matrix(ms, sigma, floors=floors) @ momenta)


def hamiltonian_shape(
    ms: MassSystem,
    ss: ShapeState,
    Phi: float = 0.0,  # noqa: N803
    Theta: float = 0.0,  # noqa: N803
    Psi: float = 0.0,  # noqa: N803
    angles: EulerTriple | None = None,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> float:
    """Energy in the shape/radius chart for any angular momentum.

    With ``Phi = Theta = Psi = 0`` this is ``R^2/2 + T(S, sigma)/rho^2 - V(sigma)/rho``
    and ``angles`` may be omitted.

    Raises:
        DivisionDegenerateError: If ``sigma_(n-1,2)`` is needed and below the floor.
        ConfigurationError: If the angular momentum is not zero and ``angles`` is missing.
        GimbalDegenerateError: If the angular momentum is not zero and ``sin(theta)`` is below the floor.
    """
    sigma = np.asarray(ss.sigma, dtype=float)
    momenta = np.asarray(ss.momenta, dtype=float)
    spinning = Phi != 0.0 or Theta != 0.0 or Psi != 0.0
    c_frame = np.zeros(3)
    if spinning:
        if angles is None:
            raise ConfigurationError("Euler angles are required when the angular momentum is not zero")
        c_frame = frame_angular_momentum(Phi, Theta, Psi, angles, floors=floors)
    mu = ms.reduced
    mu_hat = frame_masses(ms)[:-1]
    l_a, l_b, l_c, s, inv_s2sq = psi_functionals(
        ms, sigma, need_division=ms.n >= 3 or Psi != 0.0, floors=floors  # noqa: PLR2004
    )
    a, b, c = float(l_a @ momenta), float(l_b @ momenta), float(l_c @ momenta)
    n1 = Psi - a
    n2 = c_frame[1] + s * Psi - b
    n3 = c - c_frame[0]
    quad = (
        float(momenta @ (momenta / mu_hat))
        + float(momenta @ sigma) ** 2 / mu[-1]
        + n1**2 * inv_s2sq / mu[-2]
        + (n2**2 + n3**2) / mu[-1]
    )
    big_n = shape_norm(ms, sigma)
    return 0.5 * ss.radial**2 + big_n**2 * quad / (2.0 * ss.rho**2) - shape_potential(ms, sigma, floors=floors) / ss.rho


def regularize(
    Phi: float,  # noqa: N803
    Theta: float,  # noqa: N803
    Psi: float,  # noqa: N803
    t: EulerTriple,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> RegularizedAngles:
    """Euler block to ``(U, V, A; u, v, alpha)``.

    The chart is chosen by the sign of ``cos(theta)``. The map preserves the
    canonical one-form: ``U du + V dv + A dalpha = Phi dphi + Theta dtheta + Psi dpsi``.

    Raises:
        ChartSeamError: If ``|cos(theta)|`` is below the seam floor.
        ChartDomainError: If ``(u, v)`` is at the origin.

    Example:
        >>> ra = regularize(0.0, 0.0, 0.0, EulerTriple(phi=0.0, theta=math.pi / 3, psi=0.0))
        >>> round(ra.u, 12), ra.v, ra.alpha, ra.chart.value
        (0.866025403784, 0.0, 0.0, 'upper')
    """
    cos_theta = math.cos(t.theta)
    if abs(cos_theta) < floors.seam:
        raise ChartSeamError(cos_theta=cos_theta)
    sin_theta = math.sin(t.theta)
    u = sin_theta * math.cos(t.psi)
    v = sin_theta * math.sin(t.psi)
    radius_sq = u * u + v * v
    if radius_sq < floors.chart_origin:
        raise ChartDomainError(radius=math.sqrt(radius_sq), reason="at the chart origin")
    tan_theta = sin_theta / cos_theta
    return RegularizedAngles(
        u=u,
        v=v,
        alpha=(t.phi + t.psi) % _TWO_PI,
        chart=Chart.from_cos(cos_theta),
        U=(u * Theta * tan_theta + v * (Phi - Psi)) / radius_sq,
        V=(v * Theta * tan_theta - u * (Phi - Psi)) / radius_sq,
        A=Phi,
    )


def deregularize(ra: RegularizedAngles, *, floors: Floors = DEFAULT_FLOORS) -> tuple[float, float, float, EulerTriple]:
    """Inverse of :func:`regularize`.

    Returns:
        ``(Phi, Theta, Psi, angles)``.

    Raises:
        ChartDomainError: If ``(u, v)`` is at the origin or not inside the open unit disk.
    """
    radius_sq = ra.u * ra.u + ra.v * ra.v
    radius = math.sqrt(radius_sq)
    if radius_sq < floors.chart_origin:
        raise ChartDomainError(radius=radius, reason="at the chart origin")
    if radius >= 1.0 - floors.seam:
        raise ChartDomainError(radius=radius, reason="on or outside the unit circle")
    theta = math.asin(radius) if ra.chart is Chart.UPPER else math.pi - math.asin(radius)
    psi = math.atan2(ra.v, ra.u) % _TWO_PI
    phi = (ra.alpha - psi) % _TWO_PI
    cos_theta = math.cos(theta)
    theta_mom = (ra.U * ra.u + ra.V * ra.v) * cos_theta / radius
    psi_mom = ra.V * ra.u - ra.U * ra.v + ra.A
    return ra.A, theta_mom, psi_mom, EulerTriple(phi=phi, theta=theta, psi=psi)


def w_matrix(
    ms: MassSystem,
    sigma: FloatArray,
    u: float,
    v: float,
    chart: Chart = Chart.UPPER,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> FloatArray:
    """Linear map ``S -> (u', v', alpha') / Q`` at zero angular momentum.

    ``Q`` is ``N^2 / rho^2`` in physical time and ``N^2`` in blown-up time.
    The map is continuous on the closed unit disk; on the chart
    ``theta > pi/2`` the ``alpha'`` row is singular at ``u = v = 0``.

    Raises:
        ChartDomainError: On the lower chart at the origin, or outside the unit disk.
        DivisionDegenerateError: If ``sigma_(n-1,2)`` is needed and below the floor.
    """
    radius_sq = u * u + v * v
    if radius_sq > 1.0 + 1e-12:
        raise ChartDomainError(radius=math.sqrt(radius_sq), reason="outside the unit disk")
    root = math.sqrt(max(0.0, 1.0 - radius_sq))
    eps = chart.sign
    if chart is Chart.UPPER:
        g = 1.0 / (1.0 + root)
    else:
        if radius_sq < floors.chart_origin:
            raise ChartDomainError(radius=math.sqrt(radius_sq), reason="at the origin of the lower chart")
        g = (1.0 + root) / radius_sq
    mu = ms.reduced
    l_a, l_b, l_c, s, inv_s2sq = psi_functionals(ms, sigma, floors=floors)
    ka = inv_s2sq / mu[-2]
    row_u = ka * v * l_a + (s * v * l_b - eps * root * l_c) / mu[-1]
    row_v = -ka * u * l_a - (s * u - eps * root) * l_b / mu[-1]
    row_alpha = -ka * l_a - ((u * g + s) * l_b + v * g * l_c) / mu[-1]
    return np.vstack([row_u, row_v, row_alpha])


def w_field(
    ms: MassSystem,
    momenta: FloatArray,
    sigma: FloatArray,
    rho: float,
    u: float,
    v: float,
    chart: Chart = Chart.UPPER,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> FloatArray:
    """Physical-time ``(u', v', alpha')`` at zero angular momentum; linear in ``S``."""
    q = shape_norm(ms, sigma) ** 2 / rho**2
    return q * (w_matrix(ms, sigma, u, v, chart, floors=floors) @ np.asarray(momenta, dtype=float))


def euler_matrix(
    ms: MassSystem,
    sigma: FloatArray,
    angles: EulerTriple,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> FloatArray:
    """Linear map ``S -> (phi', theta', psi') / Q`` at zero angular momentum.

    Raises:
        GimbalDegenerateError: If ``sin(theta)`` is below the gimbal floor.
    """
    sin_theta = math.sin(angles.theta)
    if abs(sin_theta) < floors.gimbal:
        raise GimbalDegenerateError(sin_theta=sin_theta)
    cot = math.cos(angles.theta) / sin_theta
    cpsi, spsi = math.cos(angles.psi), math.sin(angles.psi)
    mu = ms.reduced
    l_a, l_b, l_c, s, inv_s2sq = psi_functionals(ms, sigma, floors=floors)
    row_phi = -(l_b * cpsi + l_c * spsi) / (mu[-1] * sin_theta)
    row_theta = (l_b * spsi - l_c * cpsi) / mu[-1]
    row_psi = -inv_s2sq * l_a / mu[-2] + (-(s - cot * cpsi) * l_b + cot * spsi * l_c) / mu[-1]
    return np.vstack([row_phi, row_theta, row_psi])


def euler_field(
    ms: MassSystem,
    momenta: FloatArray,
    sigma: FloatArray,
    rho: float,
    angles: EulerTriple,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> FloatArray:
    """Physical-time ``(phi', theta', psi')`` at zero angular momentum, singular at ``sin(theta) = 0``."""
    q = shape_norm(ms, sigma) ** 2 / rho**2
    return q * (euler_matrix(ms, sigma, angles, floors=floors) @ np.asarray(momenta, dtype=float))
