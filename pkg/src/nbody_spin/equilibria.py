"""Central configurations as equilibria of the blown-up flow.

A critical shape ``sigma*`` of ``V`` gives the equilibrium
``(rho, R~, S~, sigma) = (0, -sqrt(2 V(sigma*)), 0, sigma*)``. Near it the
flow is linear with ``S^' = -(R~*/2) S^ + B sigma^`` and ``sigma^' = A S^``,
where ``A`` is the kinetic matrix and ``B`` the Hessian of ``V``. With ``alpha``
the positive square root of ``A`` and ``C`` an orthogonal matrix
diagonalizing ``alpha B alpha = C diag(c) C^T``, the change
``sigma^ = alpha C s``, ``S^ = (alpha C)^-T w`` splits the system into the
planar modes ``w' = -(R~*/2) w + c s``, ``s' = w``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import TYPE_CHECKING

import numpy as np

from nbody_spin.collision_chart import (
    kinetic_matrix,
    reflect_shape,
    shape_configuration,
    shape_dimension,
    shape_from_configuration,
    shape_norm,
    shape_potential,
    shape_potential_gradient,
)
from nbody_spin.config import (
    DEFAULT_EXPERIMENT,
    DEFAULT_FLOORS,
    DEFAULT_NEWTON,
    Floors,
    NewtonConfig,
)
from nbody_spin.exceptions import (
    ConfigurationError,
    NoConvergenceError,
    NumericalDomainError,
    SingularConfigurationError,
    SquareRootDomainError,
)
from nbody_spin.jacobi import body_pairs, separation_matrix
from nbody_spin.numerics import central_hessian, richardson_hessian, symmetrize
from nbody_spin.types import (
    BlowupState,
    CenterCoordinates,
    EquilibriumReport,
    LinearizedSolution,
    MassSystem,
    OrbitKernel,
    Spectrum,
    StabilityClass,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Central configurations
    "find_central_config",
    "survey",
    "equilibrium_state",
    # Linearization
    "linearize",
    "classify",
    "eigenvalue_pair",
    "block_matrix",
    "linearized_flow",
    "center_coordinates",
    # Symmetry
    "orbit_kernel",
]

logger = logging.getLogger(__name__)


def _fold(sigma: FloatArray, n: int) -> FloatArray:
    """Representative with ``sigma_(n-1,2) <= 0`` of a shape and its mirror image."""
    if sigma[3 * (n - 2)] > 0:
        return reflect_shape(sigma, n)
    return sigma


def _min_scaled_distance(ms: MassSystem, sigma: FloatArray) -> float:
    """Smallest mutual distance of the configuration ``(sigma, 1)`` scaled to ``rho = 1``."""
    seps = separation_matrix(ms) @ shape_configuration(ms, sigma)
    return float(np.min(np.linalg.norm(seps, axis=1))) / shape_norm(ms, sigma)


def _admissible_gradient(
    ms: MassSystem,
    sigma: FloatArray,
    newton: NewtonConfig,
    floors: Floors,
) -> FloatArray | None:
    """Gradient at ``sigma``, or None when the shape is too close to a collision."""
    try:
        if _min_scaled_distance(ms, sigma) < newton.min_pair_distance:
            return None
        return shape_potential_gradient(ms, sigma, floors=floors)
    except SingularConfigurationError:
        return None


def find_central_config(  # noqa: C901
    ms: MassSystem,
    sigma_guess: Sequence[float] | FloatArray,
    tol: float | None = None,
    *,
    newton: NewtonConfig = DEFAULT_NEWTON,
    zero_threshold: float = DEFAULT_EXPERIMENT.zero_threshold,
    with_orbit_kernel: bool = True,
    floors: Floors = DEFAULT_FLOORS,
) -> EquilibriumReport:
    """Damped Newton search for a critical point of ``V``.

    Newton steps on ``dV/dsigma`` are globalized by backtracking on
    ``|dV/dsigma|^2``; when the Newton direction makes no progress the
    steepest-descent direction of ``|dV/dsigma|^2`` is tried. Iterates are
    folded onto ``sigma_(n-1,2) <= 0``.

    Args:
        ms: The masses.
        sigma_guess: Starting shape, length ``3n - 4``.
        tol: Gradient norm to reach; ``newton.tol`` when omitted.
        newton: Iteration settings.
        zero_threshold: Relative threshold of :func:`classify`.
        with_orbit_kernel: Also compute :func:`orbit_kernel` and record its dimension.
        floors: Numerical floors.

    Returns:
        The equilibrium report.

    Raises:
        ConfigurationError: If the guess has the wrong length.
        SingularConfigurationError: If the guess is a collision shape.
        NoConvergenceError: If the gradient tolerance is not reached.

    Example:
        >>> ms = MassSystem(masses=(1.0, 1.0, 1.0))
        >>> report = find_central_config(ms, [-1.1, 0.05])
        >>> round(report.potential, 10), report.classification.value
        (3.0, 'hyperbolic')
    """
    tol = newton.tol if tol is None else tol
    n = ms.n
    dim = shape_dimension(n)
    sigma = np.asarray(sigma_guess, dtype=float).copy()
    if sigma.size != dim:
        raise ConfigurationError(f"shape guess must have length {dim}", detail=sigma.tolist())
    sigma = _fold(sigma, n)
    grad = shape_potential_gradient(ms, sigma, floors=floors)
    grad_norm = float(np.linalg.norm(grad))

    def gradient(s: FloatArray) -> FloatArray:
        return shape_potential_gradient(ms, s, floors=floors)

    iterations = 0
    while grad_norm >= tol:
        if iterations >= newton.max_iter:
            raise NoConvergenceError(iterations=iterations, grad_norm=grad_norm, detail=sigma.tolist())
        iterations += 1
        hess = symmetrize(central_hessian(gradient, sigma, newton.fd_step))
        try:
            directions = [np.linalg.solve(hess, -grad), -hess @ grad]
        except np.linalg.LinAlgError:
            directions = [-hess @ grad]
        accepted = None
        for direction in directions:
            step = 1.0
            while step >= newton.min_step:
                trial = _fold(sigma + step * direction, n)
                trial_grad = _admissible_gradient(ms, trial, newton, floors)
                if trial_grad is not None and np.linalg.norm(trial_grad) < grad_norm:
                    accepted = (trial, trial_grad)
                    break
                step *= newton.backtrack
            if accepted is not None:
                break
        if accepted is None:
            raise NoConvergenceError(
                iterations=iterations, grad_norm=grad_norm, detail="line search found no decrease of |grad V|"
            )
        sigma, grad = accepted
        grad_norm = float(np.linalg.norm(grad))
        logger.debug("Newton iteration %d: |grad V| = %.3e, step = %.3g", iterations, grad_norm, step)

    logger.info("Central configuration found after %d iterations, |grad V| = %.3e", iterations, grad_norm)
    return _report(ms, sigma, grad_norm, iterations, newton, zero_threshold, with_orbit_kernel, floors)


def _report(
    ms: MassSystem,
    sigma: FloatArray,
    grad_norm: float,
    iterations: int,
    newton: NewtonConfig,
    zero_threshold: float,
    with_orbit_kernel: bool,  # noqa: FBT001
    floors: Floors,
) -> EquilibriumReport:
    n = ms.n
    dim = shape_dimension(n)
    potential = shape_potential(ms, sigma, floors=floors)
    r_star = -math.sqrt(2.0 * potential)
    a_mat, b_mat = linearize(ms, sigma, newton=newton, floors=floors)
    spectrum, diag = classify(r_star, a_mat, b_mat, zero_threshold)
    in_frame_chart = abs(sigma[3 * (n - 2)]) >= floors.division
    notes = [f"linearization uses the {dim} shape coordinates (3n - 4)"]
    if not in_frame_chart:
        notes.append("last two Jacobi vectors are parallel; the moving frame is undefined at this shape")
        logger.warning("Central configuration %s lies outside the moving-frame chart", np.array2string(sigma))
    kernel_dim = None
    if with_orbit_kernel:
        kernel = orbit_kernel(ms, sigma, floors=floors)
        kernel_dim = kernel.dimension
        notes.append(
            "orbit kernel residuals: rotations "
            + ", ".join(f"{r:.2e}" for r in kernel.rotation_residuals)
            + f"; scaling {kernel.scaling_residual:.2e}"
        )
    return EquilibriumReport(
        masses=list(ms.masses),
        sigma_star=sigma.tolist(),
        r_star=r_star,
        potential=potential,
        grad_norm=grad_norm,
        iterations=iterations,
        A=a_mat.tolist(),
        B=b_mat.tolist(),
        D=diag.tolist(),
        spectrum=spectrum,
        center_dim=spectrum.center_dim,
        classification=spectrum.classification,
        dimension=dim,
        in_frame_chart=in_frame_chart,
        orbit_kernel_dim=kernel_dim,
        notes=notes,
    )


def equilibrium_state(report: EquilibriumReport) -> BlowupState:
    """The point ``(0, R~*, 0, sigma*)`` of the collision manifold."""
    return BlowupState(
        rho=0.0,
        radial=report.r_star,
        momenta=np.zeros(report.dimension),
        sigma=report.sigma.copy(),
    )


def linearize(
    ms: MassSystem,
    sigma_star: FloatArray,
    *,
    newton: NewtonConfig = DEFAULT_NEWTON,
    floors: Floors = DEFAULT_FLOORS,
) -> tuple[FloatArray, FloatArray]:
    """Matrices ``A = A(sigma*)`` and ``B = d^2 V(sigma*)``.

    ``B`` is the Richardson-extrapolated difference Jacobian of the closed-form
    gradient.

    Raises:
        AsymmetryError: If ``B`` is asymmetric beyond ``newton.asymmetry_limit`` before symmetrizing.
    """
    sigma_star = np.asarray(sigma_star, dtype=float)
    a_mat = kinetic_matrix(ms, sigma_star, floors=floors)
    hess, estimate = richardson_hessian(
        lambda s: shape_potential_gradient(ms, s, floors=floors), sigma_star, newton.fd_step
    )
    logger.debug("Hessian Richardson estimate %.3e", estimate)
    return symmetrize(a_mat), symmetrize(hess, newton.asymmetry_limit)


def _diagonalize(a_mat: FloatArray, b_mat: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
    """``(alpha, c, C)`` with ``alpha^2 = A`` and ``alpha B alpha = C diag(c) C^T``, ``c`` ascending."""
    evals, vecs = np.linalg.eigh(symmetrize(np.asarray(a_mat, dtype=float)))
    if evals[0] <= 0:
        raise SquareRootDomainError(value=float(evals[0]), quantity="smallest eigenvalue of A")
    alpha = (vecs * np.sqrt(evals)) @ vecs.T
    c, rot = np.linalg.eigh(symmetrize(alpha @ np.asarray(b_mat, dtype=float) @ alpha))
    return alpha, c, rot


def eigenvalue_pair(r_star: float, c: float) -> tuple[complex, complex, bool]:
    """Roots ``lambda+-`` of ``lambda^2 + (R~*/2) lambda - c``.

    Returns:
        ``(lambda+, lambda-, resonant)``; ``resonant`` marks a double root.

    Example:
        >>> eigenvalue_pair(-2.0, 0.0)
        ((1+0j), 0j, False)
    """
    if c == 0:
        return complex(-0.5 * r_star), 0j, False
    disc = r_star * r_star + 16.0 * c
    resonant = abs(disc) <= 1e-14 * r_star * r_star
    root = 0j if resonant else np.sqrt(complex(disc))
    centre = -0.25 * r_star
    return complex(centre + 0.25 * root), complex(centre - 0.25 * root), resonant


def classify(
    r_star: float,
    a_mat: FloatArray,
    b_mat: FloatArray,
    zero_threshold: float = DEFAULT_EXPERIMENT.zero_threshold,
) -> tuple[Spectrum, FloatArray]:
    """Spectrum of the linearization at an equilibrium.

    Entries ``c_j`` with ``|c_j| < zero_threshold * max|c|`` count as zero; their
    eigenvalues are the exact pair ``(-R~*/2, 0)``.

    Returns:
        The spectrum and the diagonal ``c`` of ``D``.

    Raises:
        SquareRootDomainError: If ``A`` has a non-positive eigenvalue.
    """
    _, c, _ = _diagonalize(a_mat, b_mat)
    scale = max(float(np.max(np.abs(c))), np.finfo(float).tiny)
    zero = np.abs(c) < zero_threshold * scale
    pairs = [eigenvalue_pair(r_star, 0.0 if z else float(cj)) for cj, z in zip(c, zero, strict=True)]
    center_dim = int(np.count_nonzero(zero))
    spectrum = Spectrum(
        c=c.tolist(),
        lambda_plus_re=[p[0].real for p in pairs],
        lambda_plus_im=[p[0].imag for p in pairs],
        lambda_minus_re=[p[1].real for p in pairs],
        lambda_minus_im=[p[1].imag for p in pairs],
        resonant=[p[2] for p in pairs],
        center_dim=center_dim,
        classification=StabilityClass.CENTER if center_dim else StabilityClass.HYPERBOLIC,
        zero_threshold=zero_threshold,
    )
    return spectrum, c


def block_matrix(r_star: float, a_mat: FloatArray, b_mat: FloatArray, *, full: bool = False) -> FloatArray:
    """First-order linearized matrix acting on ``(S^, sigma^)``.

    With ``full`` the two leading rows and columns of ``(rho^, R^)`` are
    included; both carry the eigenvalue ``R~*``.
    """
    d = np.asarray(a_mat).shape[0]
    mat = np.block([[-0.5 * r_star * np.eye(d), b_mat], [a_mat, np.zeros((d, d))]])
    if not full:
        return mat
    out = np.zeros((2 * d + 2, 2 * d + 2))
    out[0, 0] = out[1, 1] = r_star
    out[2:, 2:] = mat
    return out


def center_coordinates(report: EquilibriumReport) -> CenterCoordinates:
    """Data of the change ``sigma = sigma* + alpha C s``, ``S~ = (alpha C)^-T w``."""
    alpha, _, rot = _diagonalize(report.kinetic_matrix, report.hessian)
    return CenterCoordinates(sigma_star=report.sigma.copy(), transform=alpha @ rot, r_star=report.r_star)


def linearized_flow(
    r_star: float,
    a_mat: FloatArray,
    b_mat: FloatArray,
    initial: BlowupState,
    tau: Sequence[float] | FloatArray,
) -> LinearizedSolution:
    """Closed-form solution of the linearized flow.

    Args:
        r_star: Equilibrium radial momentum.
        a_mat: Kinetic matrix at the equilibrium.
        b_mat: Hessian of ``V`` at the equilibrium.
        initial: Displacement ``(rho^, R^, S^, sigma^)`` at ``tau = 0``; the angles are ignored.
        tau: Sample times.

    Returns:
        The displacement at every sample time.
    """
    tau = np.asarray(tau, dtype=float)
    alpha, c, rot = _diagonalize(a_mat, b_mat)
    mat = alpha @ rot
    s0 = np.linalg.solve(mat, np.asarray(initial.sigma, dtype=float))
    w0 = mat.T @ np.asarray(initial.momenta, dtype=float)
    s = np.empty((tau.size, c.size))
    w = np.empty((tau.size, c.size))
    for j, cj in enumerate(c):
        lam_p, lam_m, resonant = eigenvalue_pair(r_star, float(cj))
        if resonant:
            slope = w0[j] - lam_p * s0[j]
            growth = np.exp(lam_p * tau)
            s[:, j] = ((s0[j] + slope * tau) * growth).real
            w[:, j] = ((slope + lam_p * (s0[j] + slope * tau)) * growth).real
            continue
        amp_p = (w0[j] - lam_m * s0[j]) / (lam_p - lam_m)
        amp_m = s0[j] - amp_p
        e_p, e_m = np.exp(lam_p * tau), np.exp(lam_m * tau)
        s[:, j] = (amp_p * e_p + amp_m * e_m).real
        w[:, j] = (lam_p * amp_p * e_p + lam_m * amp_m * e_m).real
    scalar = np.exp(r_star * tau)
    return LinearizedSolution(
        tau=tau,
        rho=initial.rho * scalar,
        radial=initial.radial * scalar,
        momenta=np.linalg.solve(mat.T, w.T).T,
        sigma=s @ mat.T,
    )


def _scale_invariant_gradient(ms: MassSystem, x: FloatArray, floors: Floors) -> FloatArray:
    """Gradient of ``|x|_mu sum m_i m_j / r_ij`` over the flat Jacobi configuration ``x``."""
    blocks = x.reshape(ms.n, 3)
    mu = ms.reduced
    seps = separation_matrix(ms) @ blocks
    dist = np.linalg.norm(seps, axis=1)
    k = int(np.argmin(dist))
    if dist[k] < floors.distance:
        raise SingularConfigurationError(pair=body_pairs(ms)[k], distance=float(dist[k]))
    m = ms.values
    weights = np.array([m[i] * m[j] for i, j in body_pairs(ms)])
    inverse_sum = float(np.sum(weights / dist))
    norm = float(np.sqrt(np.sum(mu[:, None] * blocks**2)))
    grad_u = -np.einsum("p,pb,pk->bk", weights / dist**3, separation_matrix(ms), seps)
    return (mu[:, None] * blocks * inverse_sum / norm + norm * grad_u).ravel()


def orbit_kernel(
    ms: MassSystem,
    sigma_star: FloatArray,
    *,
    step: float = 1e-4,
    tolerance: float = 1e-6,
    floors: Floors = DEFAULT_FLOORS,
) -> OrbitKernel:
    """Kernel of the unreduced scale-invariant potential Hessian at a critical shape.

    The configuration is ``(sigma*, 1)`` placed in the moving frame. The three
    rotation generators ``e_k x x`` and the scaling direction ``x`` lie in the
    kernel; their residuals are reported relative to the spectral radius.
    """
    x = shape_configuration(ms, np.asarray(sigma_star, dtype=float))
    flat = x.ravel()
    hess = symmetrize(central_hessian(lambda z: _scale_invariant_gradient(ms, z, floors), flat, step))
    evals = np.linalg.eigvalsh(hess)
    scale = max(float(np.max(np.abs(evals))), np.finfo(float).tiny)

    def residual(direction: FloatArray) -> float:
        size = float(np.linalg.norm(direction))
        if size == 0:
            return 0.0
        return float(np.linalg.norm(hess @ direction)) / (size * scale)

    rotations = [residual(np.cross(np.eye(3)[k], x).ravel()) for k in range(3)]
    return OrbitKernel(
        dimension=int(np.count_nonzero(np.abs(evals) < tolerance * scale)),
        eigenvalues=evals.tolist(),
        rotation_residuals=rotations,
        scaling_residual=residual(flat),
        tolerance=tolerance,
    )


def _survey_task(
    args: tuple[tuple[float, ...], list[float], NewtonConfig, float, Floors],
) -> EquilibriumReport | None:
    """Worker of :func:`survey`; failures come back as None."""
    masses, guess, newton, zero_threshold, floors = args
    try:
        return find_central_config(
            MassSystem(masses=masses),
            guess,
            newton=newton,
            zero_threshold=zero_threshold,
            with_orbit_kernel=False,
            floors=floors,
        )
    except (NoConvergenceError, NumericalDomainError) as exc:
        logger.debug("Survey start %s discarded: %s", guess, exc)
        return None


def survey(
    ms: MassSystem,
    samples: int,
    rng: np.random.Generator | None = None,
    *,
    workers: int | None = None,
    cluster_tol: float = 1e-6,
    newton: NewtonConfig = DEFAULT_NEWTON,
    zero_threshold: float = DEFAULT_EXPERIMENT.zero_threshold,
    floors: Floors = DEFAULT_FLOORS,
) -> list[EquilibriumReport]:
    """Random-restart Newton search for distinct central configurations.

    Starting shapes are read off Gaussian Jacobi vectors on their moving
    frame. Converged shapes closer than ``cluster_tol`` (relative) are merged.

    Args:
        ms: The masses.
        samples: Number of random starts.
        rng: Random generator; a fresh default generator when omitted.
        workers: Process count; the search runs in this process when None or 1.
        cluster_tol: Relative shape distance under which two results are the same.
        newton: Iteration settings.
        zero_threshold: Relative threshold of :func:`classify`.
        floors: Numerical floors.

    Returns:
        One report per distinct critical shape, by increasing potential.
    """
    rng = rng or np.random.default_rng()
    guesses = []
    while len(guesses) < samples:
        try:
            guesses.append(shape_from_configuration(ms, rng.standard_normal((ms.n, 3)), floors=floors).tolist())
        except NumericalDomainError:
            continue
    tasks = [(tuple(ms.masses), g, newton, zero_threshold, floors) for g in guesses]
    if workers is None or workers <= 1:
        results = [_survey_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_survey_task, tasks))

    found: list[EquilibriumReport] = []
    for report in sorted((r for r in results if r is not None), key=lambda r: r.potential):
        sigma = report.sigma
        if any(np.linalg.norm(sigma - f.sigma) <= cluster_tol * (1.0 + np.linalg.norm(f.sigma)) for f in found):
            continue
        found.append(report)
    logger.info("Survey of %d starts found %d distinct central configurations", samples, len(found))
    return found
