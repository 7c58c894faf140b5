"""Invariant suite behind ``nbody-spin verify``.

Each check draws its own admissible points from a seeded generator,
measures one error and compares it with a fixed tolerance. The suite never
raises for a failed check; a check whose state leaves a chart reports the
error as its detail and fails.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import linear_sum_assignment

from nbody_spin.collision_chart import hamiltonian_shape, regularize, shape_split
from nbody_spin.config import DEFAULT_FLOORS, DEFAULT_SOLVER, Floors, SolverConfig
from nbody_spin.equilibria import block_matrix, eigenvalue_pair, equilibrium_state, find_central_config
from nbody_spin.exceptions import NBodySpinError
from nbody_spin.jacobi import angular_momentum_jacobi, hamiltonian_jacobi, to_jacobi
from nbody_spin.mcgehee_flow import field_norm, integrate_blowup
from nbody_spin.nbody_core import angular_momentum_cartesian, hamiltonian_cartesian
from nbody_spin.numerics import central_jacobian, symplectic_defect
from nbody_spin.so3_reduction import hamiltonian_so3, reduce, reduced_coordinates
from nbody_spin.spin_lab import seed_homothetic
from nbody_spin.types import BlowupState, CartesianState, CheckResult, EulerTriple, MassSystem

if TYPE_CHECKING:
    from collections.abc import Callable

    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    "CHECKS",
    "random_state",
    "zero_angular_momentum",
    "check_symplectic_jacobi",
    "check_symplectic_reduction",
    "check_symplectic_shape",
    "check_symplectic_regularization",
    "check_chart_equivalence",
    "check_angular_momentum",
    "check_central_configurations",
    "check_spectrum",
    "check_homothetic",
    "check_energy_relation",
    "run_checks",
]

logger = logging.getLogger(__name__)

_GENERIC = MassSystem(masses=(1.0, 2.0, 3.0))
_EQUAL = MassSystem(masses=(1.0, 1.0, 1.0))
_LAGRANGE_SEED = np.array([-1.1, 0.05])
_EULER_SEED = np.array([-0.01, 0.6])


def _result(name: str, value: float, tolerance: float, detail: str = "") -> CheckResult:
    passed = bool(value <= tolerance)
    return CheckResult(name=name, passed=passed, value=float(value), tolerance=tolerance, detail=detail)


def random_state(ms: MassSystem, rng: np.random.Generator, momentum_scale: float = 0.5) -> CartesianState:
    """Gaussian positions and momenta for every body."""
    nb = len(ms.masses)
    return CartesianState(p=momentum_scale * rng.normal(size=(nb, 3)), q=rng.normal(size=(nb, 3)))


def zero_angular_momentum(ms: MassSystem, s: CartesianState) -> CartesianState:
    """Remove the total momentum and the rigid rotation carrying the angular momentum."""
    m = ms.values[:, None]
    q = np.asarray(s.q, dtype=float)
    p = np.asarray(s.p, dtype=float) - m * np.sum(s.p, axis=0) / ms.total
    r = q - np.sum(m * q, axis=0) / ms.total
    inertia = np.einsum("i,ij,ik->jk", ms.values, r, r)
    inertia = np.trace(inertia) * np.eye(3) - inertia
    omega = np.linalg.solve(inertia, np.sum(np.cross(r, p), axis=0))
    return CartesianState(p=p - m * np.cross(omega, r), q=q)


def _flat(s: CartesianState) -> FloatArray:
    return np.concatenate([np.asarray(s.p).ravel(), np.asarray(s.q).ravel()])


def _unflat(z: FloatArray, nb: int) -> CartesianState:
    return CartesianState(p=z[: 3 * nb].reshape(nb, 3), q=z[3 * nb :].reshape(nb, 3))


def _worst(
    samples: int,
    rng: np.random.Generator,
    draw: Callable[[np.random.Generator], FloatArray],
    func: Callable[[FloatArray], FloatArray],
    periodic: FloatArray | None = None,
) -> float:
    worst = 0.0
    for _ in range(samples):
        z = draw(rng)
        jac = central_jacobian(func, z, 1e-5, periodic=periodic)
        worst = max(worst, symplectic_defect(jac))
    return worst


def check_symplectic_jacobi(rng: np.random.Generator, samples: int = 100, ms: MassSystem = _GENERIC) -> CheckResult:
    """``J^T Omega J = Omega`` for the Cartesian to Jacobi map."""
    nb = len(ms.masses)

    def func(z: FloatArray) -> FloatArray:
        js = to_jacobi(ms, _unflat(z, nb))
        return np.concatenate([js.y.ravel(), js.P, js.x.ravel(), js.B])

    value = _worst(samples, rng, lambda g: _flat(random_state(ms, g)), func)
    return _result("symplectic/jacobi", value, 1e-8)


def check_symplectic_reduction(
    rng: np.random.Generator,
    samples: int = 100,
    ms: MassSystem = _GENERIC,
    floors: Floors = DEFAULT_FLOORS,
) -> CheckResult:
    """``J^T Omega J = Omega`` for the rotation reduction."""
    n = ms.n
    periodic = np.zeros(6 * n, dtype=bool)
    periodic[[3 * n, 3 * n + 2]] = True

    def func(z: FloatArray) -> FloatArray:
        y, x = z[: 3 * n].reshape(n, 3), z[3 * n :].reshape(n, 3)
        return reduced_coordinates(reduce(ms, y, x, floors=floors))

    try:
        value = _worst(samples, rng, lambda g: g.normal(size=6 * n), func, periodic)
    except NBodySpinError as exc:
        return _result("symplectic/reduction", math.inf, 1e-8, str(exc))
    return _result("symplectic/reduction", value, 1e-8)


def check_symplectic_shape(
    rng: np.random.Generator,
    samples: int = 100,
    ms: MassSystem = _GENERIC,
    floors: Floors = DEFAULT_FLOORS,
) -> CheckResult:
    """``J^T Omega J = Omega`` for the split into shape and radius."""
    k = 3 * ms.n - 3

    def draw(g: np.random.Generator) -> FloatArray:
        z = g.normal(size=2 * k)
        z[-1] = 0.5 + abs(z[-1])
        return z

    def func(z: FloatArray) -> FloatArray:
        ss = shape_split(ms, z[:k], z[k:], floors=floors)
        return np.concatenate([ss.momenta, [ss.radial], ss.sigma, [ss.rho]])

    value = _worst(samples, rng, draw, func)
    return _result("symplectic/shape", value, 1e-8)


def check_symplectic_regularization(
    rng: np.random.Generator,
    samples: int = 100,
    floors: Floors = DEFAULT_FLOORS,
) -> CheckResult:
    """``J^T Omega J = Omega`` for the regularized angle block on both charts."""
    periodic = np.zeros(6, dtype=bool)
    periodic[5] = True

    def draw(g: np.random.Generator) -> FloatArray:
        theta = g.uniform(0.2, 1.3)
        if g.random() < 0.5:  # noqa: PLR2004
            theta = math.pi - theta
        return np.array([*g.normal(size=3), g.uniform(0, 2 * math.pi), theta, g.uniform(0, 2 * math.pi)])

    def func(z: FloatArray) -> FloatArray:
        ra = regularize(z[0], z[1], z[2], EulerTriple(phi=z[3], theta=z[4], psi=z[5]), floors=floors)
        return np.array([ra.U, ra.V, ra.A, ra.u, ra.v, ra.alpha])

    value = _worst(samples, rng, draw, func, periodic)
    return _result("symplectic/regularization", value, 1e-8)


def check_chart_equivalence(
    rng: np.random.Generator,
    samples: int = 100,
    ms: MassSystem = _GENERIC,
    floors: Floors = DEFAULT_FLOORS,
) -> CheckResult:
    """One energy in every chart, and the zero angular momentum energy independent of the Euler triple."""
    worst = 0.0
    try:
        for _ in range(samples):
            s = random_state(ms, rng)
            js = to_jacobi(ms, s)
            rs = reduce(ms, js.y, js.x, floors=floors)
            ss = shape_split(ms, rs.eta, rs.xi, floors=floors)
            h_cart = hamiltonian_cartesian(ms, s, floors=floors)
            values = [
                float(js.P @ js.P) / (2.0 * ms.total) + hamiltonian_jacobi(ms, js.y, js.x, floors=floors),
                float(js.P @ js.P) / (2.0 * ms.total) + hamiltonian_so3(ms, rs, floors=floors),
                float(js.P @ js.P) / (2.0 * ms.total)
                + hamiltonian_shape(ms, ss, rs.Phi, rs.Theta, rs.Psi, rs.angles, floors=floors),
            ]
            scale = max(abs(h_cart), 1.0)
            worst = max(worst, *(abs(v - h_cart) / scale for v in values))

            s0 = zero_angular_momentum(ms, s)
            j0 = to_jacobi(ms, s0)
            r0 = reduce(ms, j0.y, j0.x, floors=floors)
            base = hamiltonian_shape(ms, shape_split(ms, r0.eta, r0.xi, floors=floors), floors=floors)
            other = EulerTriple(phi=rng.uniform(0, 2 * math.pi), theta=rng.uniform(0.2, 2.9), psi=rng.uniform(0, 6))
            moved = hamiltonian_shape(
                ms, shape_split(ms, r0.eta, r0.xi, floors=floors), 0.0, 0.0, 0.0, other, floors=floors
            )
            worst = max(worst, abs(moved - base) / max(abs(base), 1.0))
    except NBodySpinError as exc:
        return _result("chart-equivalence", math.inf, 1e-10, str(exc))
    return _result("chart-equivalence", worst, 1e-10)


def check_angular_momentum(
    rng: np.random.Generator,
    samples: int = 100,
    ms: MassSystem = _GENERIC,
    floors: Floors = DEFAULT_FLOORS,
) -> CheckResult:
    """Cartesian and Jacobi angular momenta agree; zero angular momentum maps to a zero Euler and angle block."""
    worst = 0.0
    try:
        for _ in range(samples):
            s = random_state(ms, rng)
            js = to_jacobi(ms, s)
            diff = angular_momentum_cartesian(s) - angular_momentum_jacobi(js.P, js.B, js.y, js.x)
            worst = max(worst, float(np.max(np.abs(diff))))
            j0 = to_jacobi(ms, zero_angular_momentum(ms, s))
            r0 = reduce(ms, j0.y, j0.x, floors=floors)
            worst = max(worst, abs(r0.Phi), abs(r0.Theta), abs(r0.Psi))
            if abs(math.cos(r0.angles.theta)) > floors.seam:
                ra = regularize(r0.Phi, r0.Theta, r0.Psi, r0.angles, floors=floors)
                worst = max(worst, abs(ra.U), abs(ra.V), abs(ra.A))
    except NBodySpinError as exc:
        return _result("angular-momentum", math.inf, 1e-12, str(exc))
    return _result("angular-momentum", worst, 1e-12)


def check_central_configurations(rng: np.random.Generator, floors: Floors = DEFAULT_FLOORS) -> list[CheckResult]:
    """Equal-mass Lagrange and Euler shapes from perturbed seeds; the blown-up field vanishes there."""
    results = []
    for label, seed in (("lagrange", _LAGRANGE_SEED), ("euler", _EULER_SEED)):
        guess = seed + 0.01 * rng.normal(size=seed.size)
        try:
            report = find_central_config(_EQUAL, guess, with_orbit_kernel=False, floors=floors)
        except NBodySpinError as exc:
            results.append(_result(f"cc/{label}/gradient", math.inf, 1e-10, str(exc)))
            continue
        sigma = np.round(report.sigma, 6).tolist()
        results.append(_result(f"cc/{label}/gradient", report.grad_norm, 1e-10, f"sigma*={sigma}"))
        norm = field_norm(_EQUAL, equilibrium_state(report), floors=floors)
        results.append(_result(f"cc/{label}/field", norm, 1e-9))
    return results


def check_spectrum(floors: Floors = DEFAULT_FLOORS) -> list[CheckResult]:
    """Closed-form eigenvalues against a direct eigendecomposition, and the exact zero pair."""
    report = find_central_config(_EQUAL, _LAGRANGE_SEED, floors=floors)
    direct = np.linalg.eigvals(block_matrix(report.r_star, report.kinetic_matrix, report.hessian))
    closed = report.spectrum.eigenvalues()
    rows, cols = linear_sum_assignment(np.abs(direct[:, None] - closed[None, :]))
    mismatch = float(np.max(np.abs(direct[rows] - closed[cols])))
    lam_p, lam_m, _ = eigenvalue_pair(report.r_star, 0.0)
    zero_pair = abs(lam_p - complex(-0.5 * report.r_star)) + abs(lam_m)
    kernel = report.orbit_kernel_dim or 0
    return [
        _result("spectrum/eigenvalues", mismatch, 1e-9),
        _result("spectrum/zero-pair", zero_pair, 0.0),
        _result("spectrum/orbit-kernel", 0.0 if kernel >= 1 else 1.0, 0.0, f"dimension={kernel}"),
    ]


def check_homothetic(solver: SolverConfig = DEFAULT_SOLVER, floors: Floors = DEFAULT_FLOORS) -> list[CheckResult]:
    """Homothetic runs keep the shape, ``R~`` and ``w`` fixed and follow ``rho0 exp(R~* tau)``."""
    report = find_central_config(_EQUAL, _LAGRANGE_SEED, with_orbit_kernel=False, floors=floors)
    bs0 = seed_homothetic(report, 1.0, (0.5, 0.1, 0.0))
    reference = equilibrium_state(report)
    traj = integrate_blowup(_EQUAL, bs0, (0.0, 4.0), 1e-12, reference=reference, floors=floors, solver=solver)
    drift = max(
        float(np.max(np.abs(traj.sigma - report.sigma))),
        float(np.max(np.abs(traj.radial - report.r_star))),
        float(np.max(np.abs(traj.w - bs0.w))),
    )
    expected = np.exp(report.r_star * traj.tau)
    radius = float(np.max(np.abs(traj.rho - expected) / expected))
    return [_result("homothetic/constants", drift, 1e-8), _result("homothetic/radius", radius, 1e-7)]


def check_energy_relation(
    rng: np.random.Generator,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> CheckResult:
    """``E(tau) = E(0) exp(int R~)`` along a perturbed run near the Lagrange shape."""
    report = find_central_config(_EQUAL, _LAGRANGE_SEED, with_orbit_kernel=False, floors=floors)
    bs0 = BlowupState(
        rho=1.0,
        radial=-1.0,
        momenta=0.05 * rng.normal(size=report.dimension),
        sigma=report.sigma + 0.01 * rng.normal(size=report.dimension),
        u=0.5,
    )
    traj = integrate_blowup(_EQUAL, bs0, (0.0, 2.0), floors=floors, solver=solver)
    predicted = traj.energy[0] * np.exp(traj.radial_integral - traj.radial_integral[0])
    value = float(np.max(np.abs(traj.energy - predicted))) / max(abs(float(traj.energy[0])), report.potential)
    return _result("energy-relation", value, 1e-7, f"tau_final={traj.tau[-1]:.3g}")


CHECKS = (
    "symplectic",
    "chart-equivalence",
    "angular-momentum",
    "cc",
    "spectrum",
    "homothetic",
    "energy-relation",
)
"""Check families run by :func:`run_checks`, in order."""


def run_checks(
    rng: np.random.Generator | None = None,
    *,
    samples: int = 100,
    only: tuple[str, ...] = CHECKS,
    floors: Floors = DEFAULT_FLOORS,
) -> list[CheckResult]:
    """Run the invariant suite.

    Args:
        rng: Source of the random points; seed 0 when omitted.
        samples: Random points per sampled check.
        only: Check families to run.
        floors: Numerical floors.

    Returns:
        One result per check, in a fixed order.
    """
    rng = rng or np.random.default_rng(0)
    results: list[CheckResult] = []
    if "symplectic" in only:
        results += [
            check_symplectic_jacobi(rng, samples),
            check_symplectic_reduction(rng, samples, floors=floors),
            check_symplectic_shape(rng, samples, floors=floors),
            check_symplectic_regularization(rng, samples, floors=floors),
        ]
    if "chart-equivalence" in only:
        results.append(check_chart_equivalence(rng, samples, floors=floors))
    if "angular-momentum" in only:
        results.append(check_angular_momentum(rng, samples, floors=floors))
    if "cc" in only:
        results += check_central_configurations(rng, floors=floors)
    if "spectrum" in only:
        results += check_spectrum(floors=floors)
    if "homothetic" in only:
        results += check_homothetic(floors=floors)
    if "energy-relation" in only:
        results.append(check_energy_relation(rng, floors=floors))
    failed = [r.name for r in results if not r.passed]
    logger.info("Verification: %d checks, %d failed %s", len(results), len(failed), failed or "")
    return results
