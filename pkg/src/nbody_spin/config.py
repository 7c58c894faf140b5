"""Numerical settings shared across the coordinate chain.

Floors, integrator tolerances, Newton parameters and experiment defaults are
plain frozen dataclasses. Every public numerical function takes the relevant
object as a keyword argument defaulting to the module-level instance, so a
scenario file or the command line can override any of them without global
state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

__all__ = [
    "GradientMode",
    "IntegratorMethod",
    "Floors",
    "SolverConfig",
    "NewtonConfig",
    "ExperimentDefaults",
    "DEFAULT_FLOORS",
    "DEFAULT_SOLVER",
    "DEFAULT_NEWTON",
    "DEFAULT_EXPERIMENT",
    "with_tolerance",
]

GradientMode = Literal["analytic", "finite_difference", "cross_check"]
"""How the potential gradient is evaluated.

- "analytic": closed form (the kinetic gradient always uses central differences).
- "finite_difference": fourth-order central differences for both terms.
- "cross_check": both ways; a disagreement above ``cross_check_tol`` is logged.
"""

IntegratorMethod = Literal["RK45", "DOP853"]
"""Embedded Runge-Kutta pairs accepted by the integrators."""


@dataclass(frozen=True)
class Floors:
    """Thresholds below which a map or field refuses to evaluate.

    Attributes:
        distance: Smallest admitted mutual distance between bodies.
        frame: Smallest admitted ``|x_n x x_(n-1)|``.
        gimbal: Smallest admitted ``sin(theta)``.
        division: Smallest admitted ``|xi_(n-1,2)|``, ``xi_(n,3)``, ``r`` and ``|sigma_(n-1,2)|``.
        normalization: Smallest admitted mass-weighted norm before normalizing.
        chart_origin: Smallest admitted ``u^2 + v^2`` on the chart ``theta > pi/2``.
        seam: Smallest admitted ``|cos(theta)|`` when choosing a regularizing chart.
    """

    distance: float = 1e-12
    frame: float = 1e-10
    gimbal: float = 1e-10
    division: float = 1e-10
    normalization: float = 1e-12
    chart_origin: float = 1e-10
    seam: float = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Settings for the adaptive integrators.

    Attributes:
        method: scipy Runge-Kutta pair. ``RK45`` is Dormand-Prince 5(4).
        rtol: Relative tolerance.
        atol: Absolute tolerance.
        max_step: Largest admitted step.
        equilibrium_eps: Field norm below which integration stops at an equilibrium.
        seam_band: Width in ``1 - u^2 - v^2`` of the band around the chart seam where the
            angle block is carried in Euler angles.
        gradient_mode: How the potential gradient is evaluated.
        fd_step: Step of the fourth-order central differences.
        cross_check_tol: Largest accepted analytic/finite-difference gradient mismatch.
    """

    method: IntegratorMethod = "RK45"
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = math.inf
    equilibrium_eps: float = 1e-8
    seam_band: float = 1e-3
    gradient_mode: GradientMode = "analytic"
    fd_step: float = 1e-4
    cross_check_tol: float = 1e-6


@dataclass(frozen=True)
class NewtonConfig:
    """Settings for the damped Newton search of central configurations.

    Attributes:
        tol: Gradient norm at which the iteration stops.
        max_iter: Iteration budget.
        fd_step: Step of the finite-difference Hessian.
        backtrack: Step shrink factor of the line search.
        min_step: Smallest line-search step before giving up on descent.
        min_pair_distance: Iterates whose recombined distances fall below this are rejected.
        asymmetry_limit: Largest relative Hessian asymmetry before symmetrizing.
    """

    tol: float = 1e-10
    max_iter: int = 100
    fd_step: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-10
    min_pair_distance: float = 1e-6
    asymmetry_limit: float = 1e-6


@dataclass(frozen=True)
class ExperimentDefaults:
    """Defaults of the spin experiments.

    Attributes:
        zero_threshold: Relative size under which a diagonal entry of D counts as zero.
        convergence_epsilon: Tail bound (radians) under which w is declared convergent.
        neighborhood: Distance to the equilibrium that starts the dyadic windows.
        dyadic_floor: Smallest base time of the dyadic windows.
        tail_window: First dyadic window index entering the tail bound.
        segment: Length in tau of one stabilized segment.
        center_tolerance: Integrator tolerance of center-direction runs.
        descent_floor: Fraction of the largest tail value of W under which W counts as noise.
        descent_resolution: Largest tail value of W below which the run is treated as sitting on the equilibrium.
    """

    zero_threshold: float = 1e-7
    convergence_epsilon: float = 1e-6
    neighborhood: float = 1e-3
    dyadic_floor: float = 0.125
    tail_window: int = 3
    segment: float = 0.5
    center_tolerance: float = 1e-12
    descent_floor: float = 1e-6
    descent_resolution: float = 1e-20


DEFAULT_FLOORS = Floors()
DEFAULT_SOLVER = SolverConfig()
DEFAULT_NEWTON = NewtonConfig()
DEFAULT_EXPERIMENT = ExperimentDefaults()


def with_tolerance(solver: SolverConfig, tol: float | None) -> SolverConfig:
    """Return ``solver`` with both tolerances set to ``tol`` (unchanged when ``tol`` is None)."""
    if tol is None:
        return solver
    return replace(solver, rtol=tol, atol=tol)
