"""Pytest configuration and shared fixtures for nbody-spin tests.

This module provides mass systems, random admissible states and equilibrium
reports reused across the unit, integration and end-to-end suites.
"""

from __future__ import annotations

import numpy as np
import pytest

from nbody_spin import verification
from nbody_spin.collision_chart import regularize, shape_split
from nbody_spin.equilibria import find_central_config
from nbody_spin.jacobi import to_jacobi
from nbody_spin.mcgehee_flow import blow_up
from nbody_spin.nbody_core import center_of_mass
from nbody_spin.so3_reduction import reduce
from nbody_spin.types import BlowupState, CartesianState, EquilibriumReport, MassSystem
from nbody_spin.verification import zero_angular_momentum

LAGRANGE_SIGMA = (-2.0 / np.sqrt(3.0), 0.0)
"""Equal-mass Lagrange shape: the second Jacobi vector is sqrt(3)/2 times the first and orthogonal to it."""

EQUILATERAL_Q = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.4330127018922193, 0.75]])
"""Unit equilateral triangle tilted so that no Euler angle is degenerate."""


@pytest.fixture
def rng() -> np.random.Generator:
    """Provide a seeded generator.

    Returns:
        A fresh generator seeded with 12345.
    """
    return np.random.default_rng(12345)


@pytest.fixture
def equal_three() -> MassSystem:
    """Provide three unit masses.

    Returns:
        The equal-mass three-body system.
    """
    return MassSystem(masses=(1.0, 1.0, 1.0))


@pytest.fixture
def generic_three() -> MassSystem:
    """Provide three distinct masses.

    Returns:
        A three-body system without symmetry.
    """
    return MassSystem(masses=(1.0, 2.0, 3.0))


@pytest.fixture
def generic_four() -> MassSystem:
    """Provide four distinct masses.

    Returns:
        A four-body system without symmetry.
    """
    return MassSystem(masses=(1.0, 1.5, 0.7, 2.2))


@pytest.fixture
def random_state(generic_three: MassSystem, rng: np.random.Generator) -> CartesianState:
    """Provide a random three-body state with non-zero total momentum and angular momentum.

    Returns:
        Gaussian positions and momenta.
    """
    return CartesianState(p=0.5 * rng.normal(size=(3, 3)), q=rng.normal(size=(3, 3)))


@pytest.fixture
def equilateral_state() -> CartesianState:
    """Provide the tilted equilateral triangle with small momenta.

    Returns:
        The state of the ``three-body-equilateral`` preset.
    """
    p = np.array([[0.1, -0.2, 0.05], [-0.05, 0.1, 0.2], [0.0, 0.15, -0.1]])
    return CartesianState(p=p, q=EQUILATERAL_Q.copy())


@pytest.fixture(scope="session")
def lagrange_report() -> EquilibriumReport:
    """Provide the equal-mass Lagrange equilibrium.

    Returns:
        The report found from a nearby seed, orbit kernel included.
    """
    return find_central_config(MassSystem(masses=(1.0, 1.0, 1.0)), [-1.1, 0.05])


@pytest.fixture(scope="session")
def euler_report() -> EquilibriumReport:
    """Provide the equal-mass Euler (collinear) equilibrium.

    Returns:
        The report found from a nearby seed.
    """
    return find_central_config(MassSystem(masses=(1.0, 1.0, 1.0)), [-0.01, 0.6], with_orbit_kernel=False)


def still_state(ms: MassSystem, rng: np.random.Generator) -> CartesianState:
    """Random state with zero momentum, zero angular momentum and the barycenter at the origin."""
    s = zero_angular_momentum(ms, verification.random_state(ms, rng))
    return CartesianState(p=s.p, q=s.q - center_of_mass(ms, s.q))


def blown_up(ms: MassSystem, s: CartesianState) -> BlowupState:
    """Push a Cartesian state through every chart to the blown-up coordinates."""
    js = to_jacobi(ms, s)
    rs = reduce(ms, js.y, js.x)
    ss = shape_split(ms, rs.eta, rs.xi)
    return blow_up(ss, regularize(rs.Phi, rs.Theta, rs.Psi, rs.angles))
