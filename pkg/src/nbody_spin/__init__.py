"""nbody-spin - coordinate chain and collision experiments for the Newtonian n-body problem.

The package carries an (n+1)-body state through Jacobi coordinates, the
rotation reduction by Euler angles, the shape/radius split and the blow-up
of a total collision, and measures how the moving frame turns as the
bodies approach the collision manifold.

Example:
    >>> from nbody_spin import MassSystem, find_central_config
    >>> ms = MassSystem(masses=(1.0, 1.0, 1.0))
    >>> report = find_central_config(ms, [-1.1, 0.05])
    >>> round(report.potential, 10), report.classification.value
    (3.0, 'hyperbolic')
"""

from __future__ import annotations

from nbody_spin.__metadata__ import __version__

# Charts
from nbody_spin.collision_chart import (
    deregularize,
    hamiltonian_shape,
    kinetic_matrix,
    regularize,
    shape_merge,
    shape_potential,
    shape_split,
    w_matrix,
)

# Settings
from nbody_spin.config import (
    DEFAULT_EXPERIMENT,
    DEFAULT_FLOORS,
    DEFAULT_NEWTON,
    DEFAULT_SOLVER,
    ExperimentDefaults,
    Floors,
    NewtonConfig,
    SolverConfig,
)

# Equilibria
from nbody_spin.equilibria import (
    classify,
    equilibrium_state,
    find_central_config,
    linearize,
    linearized_flow,
    orbit_kernel,
    survey,
)

# Exceptions
from nbody_spin.exceptions import (
    ChartDomainError,
    ChartSeamError,
    ConfigurationError,
    DivisionDegenerateError,
    FrameDegenerateError,
    GimbalDegenerateError,
    NBodySpinError,
    NoConvergenceError,
    NoStableModeError,
    NumericalDomainError,
    ScenarioError,
    SingularConfigurationError,
)
from nbody_spin.jacobi import from_jacobi, hamiltonian_jacobi, to_jacobi

# Flows
from nbody_spin.mcgehee_flow import blow_down, blow_up, blowup_field, integrate_blowup, integrate_restricted
from nbody_spin.nbody_core import hamiltonian_cartesian, integrate_cartesian
from nbody_spin.scenario import Scenario, load_scenario, preset
from nbody_spin.so3_reduction import hamiltonian_so3, reconstruct, reduce

# Experiments
from nbody_spin.spin_lab import (
    run_experiment,
    seed_center_direction,
    seed_homothetic,
    seed_stable_direction,
    stabilized_run,
)

# Types
from nbody_spin.types import (
    BlowupState,
    CartesianState,
    Chart,
    EquilibriumReport,
    ExperimentConfig,
    JacobiState,
    MassSystem,
    Recipe,
    ReducedState,
    ShapeState,
    SpinReport,
    Trajectory,
)

__all__ = [
    # Version
    "__version__",
    # Types
    "MassSystem",
    "CartesianState",
    "JacobiState",
    "ReducedState",
    "ShapeState",
    "BlowupState",
    "Chart",
    "Recipe",
    "Trajectory",
    "ExperimentConfig",
    "EquilibriumReport",
    "SpinReport",
    # Settings
    "Floors",
    "SolverConfig",
    "NewtonConfig",
    "ExperimentDefaults",
    "DEFAULT_FLOORS",
    "DEFAULT_SOLVER",
    "DEFAULT_NEWTON",
    "DEFAULT_EXPERIMENT",
    # Exceptions
    "NBodySpinError",
    "ConfigurationError",
    "ScenarioError",
    "NumericalDomainError",
    "SingularConfigurationError",
    "FrameDegenerateError",
    "GimbalDegenerateError",
    "DivisionDegenerateError",
    "ChartSeamError",
    "ChartDomainError",
    "NoStableModeError",
    "NoConvergenceError",
    # Coordinate chain
    "hamiltonian_cartesian",
    "integrate_cartesian",
    "to_jacobi",
    "from_jacobi",
    "hamiltonian_jacobi",
    "reduce",
    "reconstruct",
    "hamiltonian_so3",
    "shape_split",
    "shape_merge",
    "shape_potential",
    "kinetic_matrix",
    "hamiltonian_shape",
    "regularize",
    "deregularize",
    "w_matrix",
    # Flows
    "blow_up",
    "blow_down",
    "blowup_field",
    "integrate_blowup",
    "integrate_restricted",
    # Equilibria
    "find_central_config",
    "equilibrium_state",
    "linearize",
    "classify",
    "linearized_flow",
    "orbit_kernel",
    "survey",
    # Experiments
    "seed_homothetic",
    "seed_stable_direction",
    "seed_center_direction",
    "stabilized_run",
    "run_experiment",
    # Scenarios
    "Scenario",
    "load_scenario",
    "preset",
]
