"""Scenario files.

A scenario is one TOML document with an explicit schema string::

    schema = "nbody-spin/scenario@1"
    masses = [1.0, 1.0, 1.0]

    [find_cc]
    sigma_guess = [-1.1, 0.05]

    [spin]
    recipe = "stable-seed"
    epsilon = 1e-7

    [solver]
    rtol = 1e-10

Every section is optional; a command refuses a scenario that lacks the
section it needs. Decoding goes through ``msgspec.toml`` so a malformed
field is reported with its dotted path.
"""

from __future__ import annotations

import re
from dataclasses import replace
from pathlib import Path
from typing import TYPE_CHECKING

import msgspec
import numpy as np

from nbody_spin.config import DEFAULT_NEWTON, DEFAULT_SOLVER, GradientMode, IntegratorMethod, NewtonConfig, SolverConfig
from nbody_spin.exceptions import ConfigurationError, ScenarioError
from nbody_spin.types import CartesianState, Chart, ExperimentConfig, MassSystem, Recipe

if TYPE_CHECKING:
    import os

__all__ = [
    "SCHEMA",
    "Scenario",
    "StateSection",
    "FindCCSection",
    "SpinSection",
    "SolverSection",
    "NewtonSection",
    "PRESETS",
    "decode_scenario",
    "load_scenario",
    "preset",
]

SCHEMA = "nbody-spin/scenario@1"

_PATH = re.compile(r" - at `\$\.?(?P<path>[^`]*)`$")


class StateSection(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """Explicit Cartesian state, one row per body."""

    q: list[list[float]]
    p: list[list[float]]


class FindCCSection(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """Central configuration search.

    ``samples > 0`` switches to a random-restart survey.
    """

    sigma_guess: list[float] = msgspec.field(default_factory=list)
    samples: int = 0
    workers: int | None = None
    cluster_tol: float = 1e-6
    zero_threshold: float = 1e-7
    orbit_kernel: bool = True


class SpinSection(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """Spin experiment; field meanings follow :class:`~nbody_spin.types.ExperimentConfig`."""

    recipe: Recipe = Recipe.STABLE_SEED
    sigma_guess: tuple[float, ...] = ()
    rho0: float = 0.0
    epsilon: float = 1e-4
    mode_index: int = 0
    tau_max: float = 50.0
    w0: tuple[float, float, float] = (0.5, 0.0, 0.0)
    chart: Chart = Chart.UPPER
    state: tuple[float, ...] | None = None
    convergence_epsilon: float = 1e-6
    tol: float = 1e-10
    equilibrium_eps: float = 1e-10
    neighborhood: float = 1e-3
    dyadic_floor: float = 0.125
    tail_window: int = 3
    segment: float = 0.5
    stabilize: bool = True


class SolverSection(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """Integrator overrides; unset fields keep the defaults."""

    method: IntegratorMethod | None = None
    rtol: float | None = None
    atol: float | None = None
    max_step: float | None = None
    equilibrium_eps: float | None = None
    seam_band: float | None = None
    gradient_mode: GradientMode | None = None


class NewtonSection(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """Newton overrides; unset fields keep the defaults."""

    tol: float | None = None
    max_iter: int | None = None
    min_pair_distance: float | None = None


def _overrides(section: msgspec.Struct) -> dict[str, object]:
    return {k: v for k, v in msgspec.structs.asdict(section).items() if v is not None}


class Scenario(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """A decoded scenario file.

    Attributes:
        schema: Must equal :data:`SCHEMA`.
        masses: The ``n + 1`` masses.
        name: Free label.
        seed: Seed of every random draw.
        output: Default output directory.
        state: Explicit state for ``transform``.
        find_cc: Settings of ``find-cc``.
        spin: Settings of ``spin``.
        solver: Integrator overrides.
        newton: Newton overrides.
    """

    schema: str
    masses: list[float]
    name: str = ""
    seed: int = 0
    output: str | None = None
    state: StateSection | None = None
    find_cc: FindCCSection | None = None
    spin: SpinSection | None = None
    solver: SolverSection = msgspec.field(default_factory=SolverSection)
    newton: NewtonSection = msgspec.field(default_factory=NewtonSection)

    @property
    def mass_system(self) -> MassSystem:
        """The masses as a :class:`MassSystem`."""
        return MassSystem(masses=tuple(self.masses))

    def solver_config(self, base: SolverConfig = DEFAULT_SOLVER) -> SolverConfig:
        """``base`` with the scenario's integrator overrides applied."""
        return replace(base, **_overrides(self.solver))

    def newton_config(self, base: NewtonConfig = DEFAULT_NEWTON) -> NewtonConfig:
        """``base`` with the scenario's Newton overrides applied."""
        return replace(base, **_overrides(self.newton))

    def cartesian_state(self) -> CartesianState:
        """The explicit state.

        Raises:
            ScenarioError: If the scenario has no ``[state]`` section or its shapes do not match the masses.
        """
        if self.state is None:
            raise ScenarioError("this command needs a [state] section", field="state")
        q = np.asarray(self.state.q, dtype=float)
        p = np.asarray(self.state.p, dtype=float)
        expected = (len(self.masses), 3)
        for key, arr in (("state.q", q), ("state.p", p)):
            if arr.shape != expected:
                raise ScenarioError(f"expected shape {expected}, got {arr.shape}", field=key)
        return CartesianState(p=p, q=q)

    def experiment(self, output: str | None = None) -> ExperimentConfig:
        """The ``[spin]`` section as an :class:`ExperimentConfig`.

        Raises:
            ScenarioError: If the section is missing or its values are inconsistent.
        """
        if self.spin is None:
            raise ScenarioError("this command needs a [spin] section", field="spin")
        fields = msgspec.structs.asdict(self.spin)
        if not fields["sigma_guess"] and self.find_cc is not None:
            fields["sigma_guess"] = tuple(self.find_cc.sigma_guess)
        try:
            return ExperimentConfig(masses=tuple(self.masses), output=output or self.output, **fields)
        except ConfigurationError as exc:
            raise ScenarioError(exc.message, field="spin", detail=exc.detail) from exc


def decode_scenario(data: bytes | str) -> Scenario:
    """Decode and validate a scenario document.

    Raises:
        ScenarioError: On TOML syntax errors, schema mismatches, unknown or mistyped fields.

    Example:
        >>> decode_scenario('schema = "nbody-spin/scenario@1"\\nmasses = [1, 2, 3]').masses
        [1.0, 2.0, 3.0]
    """
    try:
        scenario = msgspec.toml.decode(data, type=Scenario)
    except msgspec.ValidationError as exc:
        message = str(exc)
        match = _PATH.search(message)
        reason = _PATH.sub("", message)
        raise ScenarioError(reason, field=match.group("path") if match else None) from exc
    except msgspec.DecodeError as exc:
        raise ScenarioError(str(exc)) from exc
    if scenario.schema != SCHEMA:
        raise ScenarioError(f"unsupported schema {scenario.schema!r}, expected {SCHEMA!r}", field="schema")
    try:
        scenario.mass_system  # noqa: B018
    except ConfigurationError as exc:
        raise ScenarioError(exc.message, field="masses", detail=exc.detail) from exc
    return scenario


def load_scenario(path: str | os.PathLike[str]) -> Scenario:
    """Read and decode a scenario file.

    Raises:
        ScenarioError: If the file cannot be read or does not validate.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from exc
    return decode_scenario(data)


_EQUILATERAL = """
schema = "nbody-spin/scenario@1"
name = "three-body-equilateral"
masses = [1.0, 1.0, 1.0]

[state]
q = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.4330127018922193, 0.75]]
p = [[0.1, -0.2, 0.05], [-0.05, 0.1, 0.2], [0.0, 0.15, -0.1]]
"""

_COLLINEAR = """
schema = "nbody-spin/scenario@1"
name = "three-body-collinear"
masses = [1.0, 1.0, 1.0]

[state]
q = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.5], [2.0, 0.0, 1.0]]
p = [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]]
"""

_LAGRANGE = """
schema = "nbody-spin/scenario@1"
name = "lagrange"
masses = [1.0, 1.0, 1.0]

[find_cc]
sigma_guess = [-1.1, 0.05]
"""

_EULER = """
schema = "nbody-spin/scenario@1"
name = "euler"
masses = [1.0, 1.0, 1.0]

[find_cc]
sigma_guess = [-0.01, 0.6]
orbit_kernel = false
"""

_SURVEY = """
schema = "nbody-spin/scenario@1"
name = "three-body-survey"
masses = [1.0, 1.0, 1.0]

[find_cc]
samples = 24
orbit_kernel = false
"""

_HOMOTHETIC = """
schema = "nbody-spin/scenario@1"
name = "homothetic-lagrange"
masses = [1.0, 1.0, 1.0]

[find_cc]
sigma_guess = [-1.1, 0.05]

[spin]
recipe = "homothetic"
rho0 = 1.0
tau_max = 4.0
w0 = [0.5, 0.1, 0.0]
"""

_STABLE_SEED = """
schema = "nbody-spin/scenario@1"
name = "stable-seed-lagrange"
masses = [1.0, 1.0, 1.0]

[find_cc]
sigma_guess = [-1.1, 0.05]

[spin]
recipe = "stable-seed"
epsilon = 1e-7
mode_index = 0
tau_max = 40.0
w0 = [0.5, 0.1, 0.0]
"""

_TETRAHEDRON = """
schema = "nbody-spin/scenario@1"
name = "four-body-tetrahedron"
masses = [1.0, 1.0, 1.0, 1.0]

[find_cc]
sigma_guess = [-1.2, 0.02, 0.01, -1.05, 0.01]
"""

PRESETS: dict[str, str] = {
    "three-body-equilateral": _EQUILATERAL,
    "three-body-collinear": _COLLINEAR,
    "lagrange": _LAGRANGE,
    "euler": _EULER,
    "three-body-survey": _SURVEY,
    "homothetic-lagrange": _HOMOTHETIC,
    "stable-seed-lagrange": _STABLE_SEED,
    "four-body-tetrahedron": _TETRAHEDRON,
}
"""Built-in scenarios by name, as TOML text."""


def preset(name: str) -> Scenario:
    """Decode a built-in scenario.

    Raises:
        ScenarioError: If no preset has this name.
    """
    try:
        text = PRESETS[name]
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}", field="preset", detail=sorted(PRESETS)) from None
    return decode_scenario(text)
