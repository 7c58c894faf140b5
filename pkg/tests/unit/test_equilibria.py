"""Unit tests for central configurations and their spectra."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nbody_spin.collision_chart import shape_potential
from nbody_spin.config import NewtonConfig
from nbody_spin.equilibria import (
    block_matrix,
    center_coordinates,
    classify,
    eigenvalue_pair,
    equilibrium_state,
    find_central_config,
    linearize,
    linearized_flow,
    orbit_kernel,
    survey,
)
from nbody_spin.exceptions import ConfigurationError, NoConvergenceError, SingularConfigurationError
from nbody_spin.types import BlowupState, EquilibriumReport, MassSystem, StabilityClass
from tests.conftest import LAGRANGE_SIGMA

EULER_POTENTIAL = 2.5 * math.sqrt(2.0)


class TestEigenvaluePair:
    """Test suite for the roots of lambda^2 + (R~*/2) lambda - c."""

    @pytest.mark.unit
    def test_zero_entry(self) -> None:
        """Test the exact pair (-R~*/2, 0)."""
        plus, minus, resonant = eigenvalue_pair(-math.sqrt(6.0), 0.0)

        assert plus == pytest.approx(math.sqrt(6.0) / 2.0)
        assert minus == 0
        assert resonant is False

    @pytest.mark.unit
    def test_positive_entry_is_saddle(self) -> None:
        """Test that c > 0 gives one negative and one positive real root."""
        plus, minus, _ = eigenvalue_pair(-2.0, 1.5)

        assert minus.real < 0 < plus.real
        assert plus.imag == minus.imag == 0
        assert plus * minus == pytest.approx(-1.5)
        assert plus + minus == pytest.approx(1.0)

    def test_negative_entry_is_unstable(self) -> None:
        """Test that c < 0 gives two roots with positive real part."""
        plus, minus, _ = eigenvalue_pair(-2.0, -3.0)

        assert plus.real > 0
        assert minus.real > 0
        assert plus.imag != 0

    def test_resonance(self) -> None:
        """Test that R~*^2 + 16 c = 0 is flagged as a double root."""
        plus, minus, resonant = eigenvalue_pair(-4.0, -1.0)

        assert resonant is True
        assert plus == minus == pytest.approx(1.0)


class TestFindCentralConfig:
    """Test suite for the Newton search."""

    @pytest.mark.unit
    def test_lagrange(self, lagrange_report: EquilibriumReport) -> None:
        """Test the equal-mass equilateral configuration and its spectrum."""
        assert_allclose(lagrange_report.sigma, LAGRANGE_SIGMA, atol=1e-9)
        assert lagrange_report.potential == pytest.approx(3.0, rel=1e-12)
        assert lagrange_report.r_star == pytest.approx(-math.sqrt(6.0))
        assert lagrange_report.grad_norm < 1e-10
        assert lagrange_report.classification is StabilityClass.HYPERBOLIC
        assert lagrange_report.center_dim == 0
        assert lagrange_report.dimension == 2
        assert lagrange_report.in_frame_chart is True
        assert all(c > 0 for c in lagrange_report.D)
        assert all(lam < 0 for lam in lagrange_report.spectrum.lambda_minus_re)

    @pytest.mark.unit
    def test_euler(self, euler_report: EquilibriumReport) -> None:
        """Test the equal-mass collinear configuration, outside the moving-frame chart."""
        assert euler_report.potential == pytest.approx(EULER_POTENTIAL, rel=1e-10)
        assert abs(euler_report.sigma[0]) < 1e-8
        assert abs(euler_report.sigma[1]) == pytest.approx(2.0 / 3.0, rel=1e-8)
        assert euler_report.in_frame_chart is False
        assert euler_report.orbit_kernel_dim is None
        assert any("moving frame is undefined" in note for note in euler_report.notes)

    def test_result_is_folded(self, equal_three: MassSystem) -> None:
        """Test that a mirrored guess lands on sigma_(n-1,2) <= 0."""
        report = find_central_config(equal_three, [1.1, 0.05], with_orbit_kernel=False)

        assert report.sigma[0] < 0
        assert report.potential == pytest.approx(3.0)

    def test_four_bodies(self) -> None:
        """Test the regular tetrahedron of four unit masses."""
        ms = MassSystem(masses=(1.0, 1.0, 1.0, 1.0))

        report = find_central_config(ms, [-1.2, 0.02, 0.01, -1.05, 0.01])

        assert_allclose(report.sigma, [-1.2247, 0.0, 0.0, -1.0607, 0.0], atol=1e-4)
        assert report.dimension == 5
        assert report.classification is StabilityClass.HYPERBOLIC

    def test_wrong_length(self, equal_three: MassSystem) -> None:
        """Test that a guess of the wrong length is a configuration error."""
        with pytest.raises(ConfigurationError, match="length 2"):
            find_central_config(equal_three, [1.0, 0.0, 0.0])

    def test_collision_guess(self, equal_three: MassSystem) -> None:
        """Test that a collision shape cannot start the search."""
        with pytest.raises(SingularConfigurationError):
            find_central_config(equal_three, [0.0, 0.0])

    def test_iteration_budget(self, equal_three: MassSystem) -> None:
        """Test that an exhausted budget raises with the last gradient norm."""
        with pytest.raises(NoConvergenceError) as exc_info:
            find_central_config(equal_three, [-2.0, 0.7], newton=NewtonConfig(max_iter=1))

        assert exc_info.value.exit_code == 4

    def test_report_is_consistent(self, lagrange_report: EquilibriumReport, equal_three: MassSystem) -> None:
        """Test that the stored potential and R~* match the shape."""
        assert shape_potential(equal_three, lagrange_report.sigma) == pytest.approx(lagrange_report.potential)
        assert lagrange_report.r_star == pytest.approx(-math.sqrt(2.0 * lagrange_report.potential))


class TestLinearization:
    """Test suite for the spectrum and the closed-form linear flow."""

    @pytest.mark.unit
    def test_block_matrix_spectrum(self, lagrange_report: EquilibriumReport) -> None:
        """Test that the eigenvalues of the linear system are the reported pairs."""
        mat = block_matrix(lagrange_report.r_star, lagrange_report.kinetic_matrix, lagrange_report.hessian)

        numeric = np.sort_complex(np.linalg.eigvals(mat))
        reported = np.sort_complex(lagrange_report.spectrum.eigenvalues())

        assert_allclose(numeric, reported, atol=1e-8)

    def test_full_block_matrix(self, lagrange_report: EquilibriumReport) -> None:
        """Test that rho and R~ each add the eigenvalue R~*."""
        mat = block_matrix(lagrange_report.r_star, lagrange_report.kinetic_matrix, lagrange_report.hessian, full=True)

        assert mat.shape == (6, 6)
        assert mat[0, 0] == mat[1, 1] == lagrange_report.r_star

    def test_center_coordinates_diagonalize(self, lagrange_report: EquilibriumReport) -> None:
        """Test M^T B M = diag(c) and M^-1 A M^-T = I for M = alpha C."""
        mat = center_coordinates(lagrange_report).transform

        assert_allclose(mat.T @ lagrange_report.hessian @ mat, np.diag(lagrange_report.D), atol=1e-8)
        assert_allclose(
            np.linalg.solve(mat, lagrange_report.kinetic_matrix) @ np.linalg.inv(mat.T), np.eye(2), atol=1e-10
        )

    @pytest.mark.unit
    def test_linearized_flow_solves_linear_system(self, lagrange_report: EquilibriumReport) -> None:
        """Test that the closed-form solution satisfies the linear equations."""
        initial = BlowupState(rho=0.1, radial=0.05, momenta=np.array([0.01, -0.02]), sigma=np.array([0.03, 0.01]))
        tau = np.array([0.5 - 1e-5, 0.5, 0.5 + 1e-5])
        r_star, a_mat, b_mat = lagrange_report.r_star, lagrange_report.kinetic_matrix, lagrange_report.hessian

        sol = linearized_flow(r_star, a_mat, b_mat, initial, tau)

        mat = block_matrix(r_star, a_mat, b_mat)
        state = np.concatenate([sol.momenta, sol.sigma], axis=1)
        derivative = (state[2] - state[0]) / 2e-5
        assert_allclose(derivative, mat @ state[1], rtol=1e-6, atol=1e-10)
        assert sol.rho[1] == pytest.approx(0.1 * math.exp(lagrange_report.r_star * 0.5))

    def test_linearized_flow_initial_value(self, lagrange_report: EquilibriumReport) -> None:
        """Test that tau = 0 returns the initial displacement."""
        initial = BlowupState(rho=0.0, radial=0.0, momenta=np.array([0.01, -0.02]), sigma=np.array([0.03, 0.01]))
        r_star, a_mat, b_mat = lagrange_report.r_star, lagrange_report.kinetic_matrix, lagrange_report.hessian

        sol = linearized_flow(r_star, a_mat, b_mat, initial, [0.0])

        assert_allclose(sol.momenta[0], initial.momenta, atol=1e-14)
        assert_allclose(sol.sigma[0], initial.sigma, atol=1e-14)

    def test_classify_zero_threshold(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a threshold above every entry turns all modes into center directions."""
        spectrum, _ = classify(
            lagrange_report.r_star, lagrange_report.kinetic_matrix, lagrange_report.hessian, zero_threshold=1.5
        )

        assert spectrum.center_dim == 2
        assert spectrum.lambda_minus_re == [0.0, 0.0]
        assert spectrum.classification is StabilityClass.CENTER

    def test_linearize_shapes(self, equal_three: MassSystem) -> None:
        """Test that A is positive definite and B symmetric."""
        a_mat, b_mat = linearize(equal_three, np.asarray(LAGRANGE_SIGMA))

        assert np.min(np.linalg.eigvalsh(a_mat)) > 0
        assert_allclose(b_mat, b_mat.T, atol=1e-10)

    def test_equilibrium_state(self, lagrange_report: EquilibriumReport) -> None:
        """Test the rest point (0, R~*, 0, sigma*)."""
        eq = equilibrium_state(lagrange_report)

        assert eq.rho == 0.0
        assert eq.radial == lagrange_report.r_star
        assert_allclose(eq.momenta, 0.0)


class TestOrbitKernel:
    """Test suite for the symmetry kernel of the unreduced potential."""

    def test_lagrange(self, lagrange_report: EquilibriumReport) -> None:
        """Test that rotations and scaling lie in the kernel."""
        kernel = orbit_kernel(MassSystem(masses=(1.0, 1.0, 1.0)), lagrange_report.sigma)

        assert kernel.dimension >= 4
        assert max(kernel.rotation_residuals) < 1e-6
        assert kernel.scaling_residual < 1e-6
        assert lagrange_report.orbit_kernel_dim == kernel.dimension


class TestSurvey:
    """Test suite for the random-restart survey."""

    @pytest.mark.slow
    def test_equal_masses(self, equal_three: MassSystem) -> None:
        """Test that every shape found is Lagrange or Euler, Lagrange first."""
        found = survey(equal_three, 16, np.random.default_rng(7))

        assert found
        assert found[0].potential == pytest.approx(3.0)
        for report in found:
            assert report.potential == pytest.approx(3.0) or report.potential == pytest.approx(EULER_POTENTIAL)
        sigmas = [r.sigma for r in found]
        for i, a in enumerate(sigmas):
            for b in sigmas[i + 1 :]:
                assert np.linalg.norm(a - b) > 1e-6
