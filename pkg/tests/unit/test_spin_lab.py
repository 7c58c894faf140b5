"""Unit tests for spin experiments and their diagnostics."""

from __future__ import annotations

import csv
import math
from typing import TYPE_CHECKING

import msgspec
import numpy as np
import pytest
from numpy.testing import assert_allclose

from nbody_spin.collision_chart import shape_potential, shape_potential_excess
from nbody_spin.exceptions import ConfigurationError, InsufficientTailError, NoStableModeError
from nbody_spin.mcgehee_flow import rescaled_energy
from nbody_spin.nbody_core import angular_momentum_cartesian, center_of_mass, pair_distances
from nbody_spin.spin_lab import (
    collinearity_ratios,
    descent_diagnostic,
    dyadic_windows,
    physical_state,
    run_experiment,
    seed_center_direction,
    seed_homothetic,
    seed_stable_direction,
    stabilized_run,
    write_report,
    write_trajectory_csv,
)
from nbody_spin.types import (
    Chart,
    EquilibriumReport,
    ExperimentConfig,
    MassSystem,
    Recipe,
    TerminationReason,
    Trajectory,
)

if TYPE_CHECKING:
    from pathlib import Path


def _synthetic(
    report: EquilibriumReport,
    tau: np.ndarray,
    *,
    displacement: np.ndarray | None = None,
    speed: float = 0.0,
    offset: float = 0.0,
) -> Trajectory:
    """Trajectory at rest at ``sigma* + offset + displacement e`` with ``|S~|`` integrating to ``speed tau``.

    ``e`` is the unit diagonal direction of the shape space, so ``W = V(sigma) - V(sigma*)``.
    """
    nodes = len(tau)
    zeros = np.zeros(nodes)
    displacement = zeros if displacement is None else np.asarray(displacement, dtype=float)
    direction = np.ones(report.dimension) / math.sqrt(report.dimension)
    sigma = report.sigma + offset + displacement[:, None] * direction
    ms = MassSystem(masses=tuple(report.masses))
    return Trajectory(
        tau=tau,
        rho=zeros.copy(),
        radial=np.full(nodes, report.r_star),
        momenta=np.zeros((nodes, report.dimension)),
        sigma=sigma,
        w=np.tile([0.5, 0.0, 0.0], (nodes, 1)),
        charts=(Chart.UPPER,) * nodes,
        kinetic=zeros.copy(),
        potential=np.array([shape_potential(ms, s) for s in sigma]),
        energy=zeros.copy(),
        radial_integral=report.r_star * tau,
        momentum_integral=speed * tau,
        inv_sigma=zeros.copy(),
        sigma_ratio=zeros.copy(),
    )

class TestSeeds:
    """Test suite for the initial-data recipes."""

    @pytest.mark.unit
    def test_homothetic(self, lagrange_report: EquilibriumReport) -> None:
        """Test the state (rho0, R~*, 0, sigma*) with the requested angles."""
        bs = seed_homothetic(lagrange_report, 0.5, (0.2, 0.1, 0.3), Chart.LOWER)

        assert bs.rho == 0.5
        assert bs.radial == lagrange_report.r_star
        assert_allclose(bs.momenta, 0.0)
        assert_allclose(bs.sigma, lagrange_report.sigma)
        assert (bs.u, bs.v, bs.alpha, bs.chart) == (0.2, 0.1, 0.3, Chart.LOWER)

    def test_homothetic_needs_positive_radius(self, lagrange_report: EquilibriumReport) -> None:
        """Test that rho0 = 0 is refused."""
        with pytest.raises(ConfigurationError, match="rho0"):
            seed_homothetic(lagrange_report, 0.0)

    @pytest.mark.unit
    def test_stable_seed_is_on_zero_energy(self, lagrange_report: EquilibriumReport, equal_three: MassSystem) -> None:
        """Test that the displaced state lies on E = 0 near the equilibrium."""
        bs = seed_stable_direction(lagrange_report, 1e-4, 0)

        assert bs.rho == 0.0
        assert bs.radial < 0
        assert rescaled_energy(equal_three, bs) == pytest.approx(0.0, abs=1e-12)
        assert 0 < np.linalg.norm(bs.sigma - lagrange_report.sigma) < 1e-3

    def test_stable_seed_unknown_mode(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a mode index past the stable modes raises."""
        with pytest.raises(NoStableModeError) as exc_info:
            seed_stable_direction(lagrange_report, 1e-4, 5)

        assert exc_info.value.exit_code == 3

    def test_center_seed_without_kernel(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a hyperbolic equilibrium offers no center direction."""
        with pytest.raises(NoStableModeError):
            seed_center_direction(lagrange_report, 1e-4)


class TestPhysicalState:
    """Test suite for the blow-down to Cartesian coordinates."""

    @pytest.mark.unit
    def test_homothetic_seed_is_equilateral(self, lagrange_report: EquilibriumReport, equal_three: MassSystem) -> None:
        """Test that the Lagrange seed is an equilateral triangle at rest in the barycenter."""
        bs = seed_homothetic(lagrange_report, 1.0)

        state = physical_state(equal_three, bs)

        distances = pair_distances(state.q)[np.triu_indices(3, k=1)]
        assert_allclose(distances, distances[0], rtol=1e-10)
        assert_allclose(center_of_mass(equal_three, state.q), 0.0, atol=1e-12)
        assert_allclose(angular_momentum_cartesian(state), 0.0, atol=1e-12)


class TestCollinearityRatios:
    """Test suite for the non-collinearity ratios of Jacobi vectors."""

    def test_orthogonal(self) -> None:
        """Test orthogonal unit vectors."""
        assert collinearity_ratios(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])) == pytest.approx((0.0, 1.0))

    def test_oblique(self) -> None:
        """Test a 45 degree pair with |x_n| = 2."""
        dot_ratio, norm_ratio = collinearity_ratios(np.array([[1.0, 0.0, 0.0], [2.0, 2.0, 0.0]]))

        assert dot_ratio == pytest.approx(1.0)
        assert norm_ratio == pytest.approx(4.0)

    def test_parallel(self) -> None:
        """Test that parallel vectors give infinite ratios."""
        ratios = collinearity_ratios(np.array([[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]))

        assert all(math.isinf(r) for r in ratios)


class TestDyadicWindows:
    """Test suite for the window integrals of |S~|."""

    @pytest.mark.unit
    def test_unit_speed(self, lagrange_report: EquilibriumReport) -> None:
        """Test window lengths as integrals and the trailing incomplete window."""
        traj = _synthetic(lagrange_report, np.linspace(0.0, 5.0, 51), speed=1.0)

        windows = dyadic_windows(traj, 1.0)

        assert [w.k for w in windows] == [0, 1, 2]
        assert [w.integral for w in windows] == pytest.approx([1.0, 2.0, 1.0])
        assert [w.complete for w in windows] == [True, True, False]
        assert windows[2].end == 8.0

    def test_base_past_final_time(self, lagrange_report: EquilibriumReport) -> None:
        """Test that no window starts after the run."""
        traj = _synthetic(lagrange_report, np.linspace(0.0, 1.0, 5), speed=1.0)

        assert dyadic_windows(traj, 2.0) == []


class TestDescentDiagnostic:
    """Test suite for the decay fit of W = V - T - V(sigma*)."""

    @pytest.mark.unit
    def test_exponential(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a displacement decaying like exp(-tau) gives W decaying at rate 2."""
        tau = np.linspace(0.0, 5.0, 51)
        traj = _synthetic(lagrange_report, tau, displacement=5e-4 * np.exp(-tau))

        fit = descent_diagnostic(traj, lagrange_report)

        assert fit.model == "exponential"
        assert fit.rate == pytest.approx(2.0, rel=1e-2)
        assert fit.prefactor == pytest.approx(traj.potential[0] - lagrange_report.potential, rel=1e-2)
        assert fit.samples == 51
        assert fit.monotonicity_violations == 0

    @pytest.mark.unit
    def test_below_potential_rounding(self, lagrange_report: EquilibriumReport) -> None:
        """Test that W far below the rounding error of V(sigma*) is still fitted."""
        tau = np.linspace(0.0, 8.0, 81)
        traj = _synthetic(lagrange_report, tau, displacement=1e-6 * np.exp(-tau))

        fit = descent_diagnostic(traj, lagrange_report)

        assert fit.min_w > 0
        assert fit.min_w < 1e-10 * lagrange_report.potential
        assert fit.samples > 60
        assert fit.rate == pytest.approx(2.0, rel=1e-3)
        assert fit.monotonicity_violations == 0
        assert fit.tolerance < 1e-16

    def test_power(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a displacement like (1 + tau)^-1 gives exponent 2 under the power model."""
        tau = np.linspace(0.0, 9.0, 46)
        traj = _synthetic(lagrange_report, tau, displacement=5e-4 / (1.0 + tau))

        fit = descent_diagnostic(traj, lagrange_report, model="power")

        assert fit.exponent == pytest.approx(2.0, rel=1e-2)
        assert fit.rate == 0.0

    def test_counts_increases(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a rise of W is reported as a monotonicity violation."""
        displacement = np.array([1e-4, 7e-5, 9e-5, 4e-5, 3e-5, 2e-5])

        fit = descent_diagnostic(
            _synthetic(lagrange_report, np.arange(6.0), displacement=displacement), lagrange_report
        )

        assert fit.monotonicity_violations == 1

    def test_far_from_equilibrium(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a run outside the neighborhood has no tail."""
        traj = _synthetic(lagrange_report, np.linspace(0.0, 1.0, 11), offset=0.1)

        with pytest.raises(InsufficientTailError, match="neighborhood"):
            descent_diagnostic(traj, lagrange_report)

    def test_flat_tail(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a run sitting on the equilibrium is not fitted."""
        with pytest.raises(InsufficientTailError, match="below"):
            descent_diagnostic(_synthetic(lagrange_report, np.linspace(0.0, 1.0, 11)), lagrange_report)

    def test_kinetic_term_counts(self, lagrange_report: EquilibriumReport) -> None:
        """Test that W subtracts T from the potential excess."""
        tau = np.linspace(0.0, 5.0, 51)
        traj = _synthetic(lagrange_report, tau, displacement=5e-4 * np.exp(-tau))
        ms = MassSystem(masses=tuple(lagrange_report.masses))
        excess = np.array([shape_potential_excess(ms, s, lagrange_report.sigma) for s in traj.sigma])
        moving = msgspec.structs.replace(traj, kinetic=0.5 * excess)

        fit = descent_diagnostic(moving, lagrange_report)

        assert fit.prefactor == pytest.approx(0.5 * descent_diagnostic(traj, lagrange_report).prefactor, rel=1e-8)


class TestStabilizedRun:
    """Test suite for the segment-wise projected run on the collision manifold."""

    @pytest.mark.unit
    def test_projects_after_each_segment(self, lagrange_report: EquilibriumReport, equal_three: MassSystem) -> None:
        """Test that a stable seed approaches the equilibrium with one projection per segment."""
        bs0 = seed_stable_direction(lagrange_report, 1e-4, 0)

        traj, defect = stabilized_run(equal_three, lagrange_report, bs0, 1.0, segment=0.5)

        projections = [e for e in traj.events if e.kind == "projection"]
        assert len(projections) == 2
        assert [e.tau for e in projections] == pytest.approx([0.5, 1.0])
        assert 0 <= defect < 1e-6
        assert_allclose(traj.rho, 0.0)
        start = np.linalg.norm(traj.sigma[0] - lagrange_report.sigma)
        end = np.linalg.norm(traj.sigma[-1] - lagrange_report.sigma)
        assert end < start

    def test_off_collision_is_plain_run(self, lagrange_report: EquilibriumReport, equal_three: MassSystem) -> None:
        """Test that rho > 0 skips the projections."""
        bs0 = seed_homothetic(lagrange_report, 1.0)

        traj, defect = stabilized_run(equal_three, lagrange_report, bs0, 1.0, segment=0.5)

        assert defect == 0.0
        assert not [e for e in traj.events if e.kind == "projection"]


class TestRunExperiment:
    """Test suite for run_experiment."""

    @pytest.mark.unit
    def test_homothetic(self, lagrange_report: EquilibriumReport, tmp_path: Path) -> None:
        """Test that the homothetic collision keeps w fixed and writes both result files."""
        cfg = ExperimentConfig(
            masses=(1.0, 1.0, 1.0),
            recipe=Recipe.HOMOTHETIC,
            rho0=1.0,
            tau_max=3.0,
            w0=(0.5, 0.1, 0.0),
            output=str(tmp_path),
        )

        summary, traj = run_experiment(cfg, report=lagrange_report)

        assert summary.termination is TerminationReason.COMPLETED
        assert summary.tau_final == pytest.approx(3.0)
        assert summary.w_limit == pytest.approx([0.5, 0.1, 0.0])
        assert summary.cauchy_tail == pytest.approx(0.0, abs=1e-7)
        assert summary.momentum_integral == pytest.approx(0.0, abs=1e-7)
        assert summary.tail_bound < 1e-6
        assert summary.converged is True
        assert summary.energy_check < 1e-6
        assert summary.rho_max_on_collision is None
        assert summary.angular_momentum_max is not None
        assert summary.angular_momentum_max < 1e-8
        assert summary.descent is None
        assert "below" in summary.descent_note
        assert_allclose(traj.rho, np.exp(lagrange_report.r_star * traj.tau), rtol=1e-6)
        assert (tmp_path / "spin_report.json").exists()
        assert (tmp_path / "trajectory.csv").exists()

    def test_missing_guess(self) -> None:
        """Test that an experiment without equilibrium or guess is refused."""
        cfg = ExperimentConfig(masses=(1.0, 1.0, 1.0), recipe=Recipe.HOMOTHETIC, rho0=1.0)

        with pytest.raises(ConfigurationError, match="sigma_guess"):
            run_experiment(cfg)


class TestWriters:
    """Test suite for the result files."""

    @pytest.mark.unit
    def test_trajectory_csv(self, lagrange_report: EquilibriumReport, tmp_path: Path) -> None:
        """Test the header, the chart column and the full-precision numbers."""
        traj = _synthetic(lagrange_report, np.linspace(0.0, 1.0, 4), speed=1.0)

        path = write_trajectory_csv(tmp_path / "out" / "trajectory.csv", traj)

        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        header = rows[0]
        assert header[:6] == ["tau", "rho", "radial", "momentum_norm", "sigma_1", "sigma_2"]
        assert header[-2:] == ["inv_sigma_sup", "sigma_ratio_sup"]
        assert len(rows) == 5
        assert all(len(row) == len(header) for row in rows)
        assert rows[1][header.index("chart")] == "upper"
        assert float(rows[2][0]) == pytest.approx(1.0 / 3.0, rel=1e-16)
        assert float(rows[3][header.index("energy_residual")]) == 0.0

    def test_report_round_trip(self, lagrange_report: EquilibriumReport, tmp_path: Path) -> None:
        """Test that the JSON report decodes to the same equilibrium and no temporary file is left."""
        path = write_report(tmp_path / "equilibrium.json", lagrange_report)

        back = msgspec.json.decode(path.read_bytes(), type=EquilibriumReport)

        assert back == lagrange_report
        assert [p.name for p in tmp_path.iterdir()] == ["equilibrium.json"]
