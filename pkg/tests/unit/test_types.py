"""Unit tests for state and report types."""

from __future__ import annotations

import msgspec
import numpy as np
import pytest
from numpy.testing import assert_allclose

from nbody_spin.exceptions import ConfigurationError
from nbody_spin.types import (
    BlowupState,
    Chart,
    EquilibriumReport,
    Event,
    ExperimentConfig,
    MassSystem,
    Recipe,
    StabilityClass,
    TerminationReason,
    Trajectory,
)


class TestChart:
    """Test suite for the Chart enum."""

    def test_enum_values(self) -> None:
        """Test that enum has expected values."""
        assert Chart.UPPER == "upper"
        assert Chart.LOWER == "lower"

    def test_sign(self) -> None:
        """Test the sign of cos(theta) on each chart."""
        assert Chart.UPPER.sign == 1
        assert Chart.LOWER.sign == -1

    def test_from_cos(self) -> None:
        """Test chart selection from cos(theta)."""
        assert Chart.from_cos(0.3) is Chart.UPPER
        assert Chart.from_cos(-0.3) is Chart.LOWER


class TestMassSystem:
    """Test suite for MassSystem."""

    @pytest.mark.unit
    def test_derived_quantities(self) -> None:
        """Test partial sums and reduced masses."""
        ms = MassSystem(masses=(1.0, 2.0, 3.0))

        assert ms.n == 2
        assert ms.total == 6.0
        assert_allclose(ms.partial_sums, [1.0, 3.0, 6.0])
        assert_allclose(ms.reduced, [2.0 / 3.0, 1.5])

    @pytest.mark.unit
    def test_equal_masses(self) -> None:
        """Test the reduced masses of three unit bodies."""
        ms = MassSystem(masses=(1.0, 1.0, 1.0))

        assert_allclose(ms.reduced, [0.5, 2.0 / 3.0])

    @pytest.mark.unit
    @pytest.mark.parametrize("masses", [(1.0,), (1.0, 0.0), (1.0, -2.0, 3.0), (1.0, float("nan"))])
    def test_invalid_masses(self, masses: tuple[float, ...]) -> None:
        """Test that too few, non-positive or non-finite masses are rejected."""
        with pytest.raises(ConfigurationError):
            MassSystem(masses=masses)


class TestExperimentConfig:
    """Test suite for ExperimentConfig validation."""

    def test_defaults(self) -> None:
        """Test that the defaults describe a stable-seed run."""
        cfg = ExperimentConfig(masses=(1.0, 1.0, 1.0))

        assert cfg.recipe is Recipe.STABLE_SEED
        assert cfg.chart is Chart.UPPER
        assert cfg.stabilize is True
        assert cfg.output is None

    def test_rejects_non_positive_horizon(self) -> None:
        """Test that tau_max must be positive."""
        with pytest.raises(ConfigurationError, match="tau_max"):
            ExperimentConfig(masses=(1.0, 1.0, 1.0), tau_max=0.0)

    def test_rejects_negative_amplitude(self) -> None:
        """Test that epsilon and rho0 must be non-negative."""
        with pytest.raises(ConfigurationError, match="amplitudes"):
            ExperimentConfig(masses=(1.0, 1.0, 1.0), epsilon=-1e-3)

    def test_rejects_wrong_guess_length(self) -> None:
        """Test that the guess must have 3n - 4 entries."""
        with pytest.raises(ConfigurationError, match="length 2"):
            ExperimentConfig(masses=(1.0, 1.0, 1.0), sigma_guess=(1.0, 0.0, 0.0))

    def test_homothetic_needs_radius(self) -> None:
        """Test that the homothetic recipe needs rho0 > 0."""
        with pytest.raises(ConfigurationError, match="rho0"):
            ExperimentConfig(masses=(1.0, 1.0, 1.0), recipe=Recipe.HOMOTHETIC, rho0=0.0)

    def test_user_state_length(self) -> None:
        """Test that a user state carries 2(3n - 4) + 2 numbers."""
        ExperimentConfig(masses=(1.0, 1.0, 1.0), recipe=Recipe.USER_STATE, state=(0.0,) * 6)
        with pytest.raises(ConfigurationError, match="length 6"):
            ExperimentConfig(masses=(1.0, 1.0, 1.0), recipe=Recipe.USER_STATE, state=(0.0,) * 5)

    def test_rejects_bad_masses(self) -> None:
        """Test that mass validation is applied."""
        with pytest.raises(ConfigurationError):
            ExperimentConfig(masses=(1.0,))


def _trajectory(nodes: int = 3) -> Trajectory:
    tau = np.linspace(0.0, 1.0, nodes)
    zeros = np.zeros(nodes)
    return Trajectory(
        tau=tau,
        rho=zeros.copy(),
        radial=np.full(nodes, -np.sqrt(6.0)),
        momenta=np.zeros((nodes, 2)),
        sigma=np.tile([-2.0 / np.sqrt(3.0), 0.0], (nodes, 1)),
        w=np.tile([0.5, 0.1, 0.2], (nodes, 1)),
        charts=(Chart.UPPER,) * nodes,
        kinetic=zeros.copy(),
        potential=np.full(nodes, 3.0),
        energy=zeros.copy(),
        radial_integral=zeros.copy(),
        momentum_integral=zeros.copy(),
        inv_sigma=zeros.copy(),
        sigma_ratio=zeros.copy(),
        events=(Event("projection", 0.5),),
        termination=TerminationReason.EQUILIBRIUM,
    )


class TestTrajectory:
    """Test suite for Trajectory accessors."""

    def test_len(self) -> None:
        """Test that the length counts nodes."""
        assert len(_trajectory(4)) == 4

    def test_state(self) -> None:
        """Test that a node unpacks into a BlowupState."""
        state = _trajectory().state(1)

        assert isinstance(state, BlowupState)
        assert state.rho == 0.0
        assert state.chart is Chart.UPPER
        assert_allclose(state.w, [0.5, 0.1, 0.2])
        assert_allclose(state.sigma, [-2.0 / np.sqrt(3.0), 0.0])

    def test_final(self) -> None:
        """Test that final is the last node."""
        traj = _trajectory()

        assert traj.final.radial == pytest.approx(-np.sqrt(6.0))
        assert traj.termination is TerminationReason.EQUILIBRIUM

    def test_state_copies_arrays(self) -> None:
        """Test that mutating a node does not touch the trajectory."""
        traj = _trajectory()
        traj.state(0).sigma[0] = 99.0

        assert traj.sigma[0, 0] != 99.0


class TestEquilibriumReport:
    """Test suite for EquilibriumReport serialization."""

    def test_json_round_trip(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a report survives JSON encoding unchanged."""
        data = msgspec.json.encode(lagrange_report)
        decoded = msgspec.json.decode(data, type=EquilibriumReport)

        assert decoded == lagrange_report
        assert decoded.classification is StabilityClass.HYPERBOLIC

    def test_array_properties(self, lagrange_report: EquilibriumReport) -> None:
        """Test the array views of the stored lists."""
        n = lagrange_report.dimension

        assert lagrange_report.sigma.shape == (n,)
        assert lagrange_report.kinetic_matrix.shape == (n, n)
        assert lagrange_report.hessian.shape == (n, n)
