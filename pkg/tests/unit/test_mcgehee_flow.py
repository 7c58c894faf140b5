"""Unit tests for the blown-up collision flow."""

from __future__ import annotations

import logging
import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nbody_spin.collision_chart import kinetic_matrix
from nbody_spin.config import DEFAULT_SOLVER
from nbody_spin.equilibria import center_coordinates, equilibrium_state
from nbody_spin.exceptions import DivisionDegenerateError, StepFailureError
from nbody_spin.mcgehee_flow import (
    blow_down,
    blow_up,
    blowup_field,
    concatenate,
    field_norm,
    integrate_blowup,
    physical_time,
    potential_gradient,
    rescaled_energy,
    restricted_center_flow,
    sigma_diagnostics,
)
from nbody_spin.types import (
    BlowupState,
    Chart,
    EquilibriumReport,
    MassSystem,
    RegularizedAngles,
    ShapeState,
    TerminationReason,
)
from tests.conftest import LAGRANGE_SIGMA


class TestRescaling:
    """Test suite for blow_up and blow_down."""

    @pytest.mark.unit
    def test_round_trip(self) -> None:
        """Test that blow_down inverts blow_up and keeps the angle triple."""
        ss = ShapeState(momenta=np.array([0.3, -0.4]), radial=-1.5, sigma=np.array([-1.0, 0.2]), rho=0.25)
        ra = RegularizedAngles(u=0.3, v=-0.2, alpha=1.0, chart=Chart.LOWER)

        bs = blow_up(ss, ra)
        back, ra_back = blow_down(bs)

        assert bs.radial == pytest.approx(-0.75)
        assert_allclose(bs.momenta, [0.6, -0.8])
        assert back.radial == pytest.approx(ss.radial)
        assert_allclose(back.momenta, ss.momenta)
        assert ra_back.chart is Chart.LOWER
        assert (ra_back.u, ra_back.v, ra_back.alpha) == pytest.approx((0.3, -0.2, 1.0))

    def test_default_angles(self) -> None:
        """Test that omitted angles start at the upper-chart origin."""
        bs = blow_up(ShapeState(momenta=np.zeros(2), radial=0.0, sigma=np.array([-1.0, 0.0]), rho=1.0))

        assert (bs.u, bs.v, bs.alpha, bs.chart) == (0.0, 0.0, 0.0, Chart.UPPER)

    def test_collision_manifold_cannot_be_blown_down(self) -> None:
        """Test that rho = 0 has no physical counterpart."""
        bs = BlowupState(rho=0.0, radial=-1.0, momenta=np.zeros(2), sigma=np.array([-1.0, 0.0]))

        with pytest.raises(DivisionDegenerateError):
            blow_down(bs)


class TestBlowupField:
    """Test suite for the blown-up vector field."""

    @pytest.mark.unit
    def test_equilibrium_is_rest_point(self, lagrange_report: EquilibriumReport) -> None:
        """Test that (0, R~*, 0, sigma*) is a rest point with E = 0."""
        eq = equilibrium_state(lagrange_report)

        field = blowup_field(MassSystem(masses=(1.0, 1.0, 1.0)), eq)

        assert lagrange_report.r_star == pytest.approx(-math.sqrt(6.0))
        assert field.rho == 0.0
        assert field.radial == pytest.approx(0.0, abs=1e-10)
        assert_allclose(field.momenta, 0.0, atol=1e-10)
        assert_allclose(field.sigma, 0.0, atol=1e-12)
        assert rescaled_energy(MassSystem(masses=(1.0, 1.0, 1.0)), eq) == pytest.approx(0.0, abs=1e-10)
        assert field_norm(MassSystem(masses=(1.0, 1.0, 1.0)), eq) < 1e-9

    def test_homothetic_field(self, equal_three: MassSystem) -> None:
        """Test rho' = rho R~ and R~' = R~^2/2 - V on a homothetic state."""
        bs = BlowupState(rho=0.5, radial=-1.0, momenta=np.zeros(2), sigma=np.asarray(LAGRANGE_SIGMA))

        field = blowup_field(equal_three, bs)

        assert field.rho == pytest.approx(-0.5)
        assert field.radial == pytest.approx(0.5 - 3.0)
        assert_allclose(field.sigma, 0.0)
        assert (field.u, field.v, field.alpha) == (0.0, 0.0, 0.0)

    def test_sigma_rate_is_kinetic_matrix(self, generic_three: MassSystem, rng: np.random.Generator) -> None:
        """Test sigma' = A(sigma) S~."""
        sigma = np.array([-0.9, 0.3])
        momenta = rng.normal(size=2)
        bs = BlowupState(rho=0.0, radial=-2.0, momenta=momenta, sigma=sigma, u=0.2, v=0.1)

        field = blowup_field(generic_three, bs)

        assert_allclose(field.sigma, kinetic_matrix(generic_three, sigma) @ momenta)
        assert field.rho == 0.0


class TestPotentialGradient:
    """Test suite for the gradient modes."""

    @pytest.mark.unit
    def test_modes_agree(self, generic_four: MassSystem, rng: np.random.Generator) -> None:
        """Test that analytic and finite-difference gradients agree."""
        sigma = rng.normal(size=5)

        analytic = potential_gradient(generic_four, sigma, "analytic")
        numeric = potential_gradient(generic_four, sigma, "finite_difference")

        assert_allclose(numeric, analytic, rtol=1e-6, atol=1e-8)

    def test_cross_check_warns_on_mismatch(
        self, generic_three: MassSystem, caplog: pytest.LogCaptureFixture
    ) -> None:
        """Test that a cross-check tighter than the difference error logs a warning."""
        solver = replace(DEFAULT_SOLVER, fd_step=0.2, cross_check_tol=1e-14)

        with caplog.at_level(logging.WARNING, logger="nbody_spin.mcgehee_flow"):
            potential_gradient(generic_three, np.array([-0.9, 0.3]), "cross_check", solver=solver)

        assert "cross-check mismatch" in caplog.text


class TestSigmaDiagnostics:
    """Test suite for the non-collinearity diagnostics."""

    def test_lagrange(self) -> None:
        """Test |1/sigma_(n-1,2)| and the ratio at the equilateral shape."""
        inv, ratio = sigma_diagnostics(2, np.asarray(LAGRANGE_SIGMA))

        assert inv[0] == pytest.approx(math.sqrt(3.0) / 2.0)
        assert ratio[0] == pytest.approx(0.0)

    def test_collinear(self) -> None:
        """Test that a vanishing divisor gives infinity, not an error."""
        inv, ratio = sigma_diagnostics(2, np.array([[0.0, 0.5], [0.0, 0.0]]))

        assert np.all(np.isinf(inv))
        assert math.isinf(ratio[0])
        assert ratio[1] == 0.0


class TestIntegrateBlowup:
    """Test suite for integrate_blowup."""

    @pytest.mark.unit
    def test_homothetic_collision(self, lagrange_report: EquilibriumReport) -> None:
        """Test that the homothetic solution keeps its shape and decays as exp(R~* tau)."""
        ms = MassSystem(masses=(1.0, 1.0, 1.0))
        eq = equilibrium_state(lagrange_report)
        bs0 = BlowupState(
            rho=1.0, radial=lagrange_report.r_star, momenta=np.zeros(2), sigma=lagrange_report.sigma, u=0.5, v=0.1
        )

        traj = integrate_blowup(ms, bs0, (0.0, 4.0), 1e-12, reference=eq)

        assert traj.termination is TerminationReason.COMPLETED
        assert traj.tau[-1] == pytest.approx(4.0)
        assert_allclose(traj.rho, np.exp(lagrange_report.r_star * traj.tau), rtol=1e-7)
        assert_allclose(traj.radial, lagrange_report.r_star, atol=1e-9)
        assert_allclose(traj.sigma, np.tile(lagrange_report.sigma, (len(traj), 1)), atol=1e-9)
        assert_allclose(traj.w[-1], [0.5, 0.1, 0.0], atol=1e-12)
        assert_allclose(traj.radial_integral, lagrange_report.r_star * traj.tau, rtol=1e-8)

    def test_starts_at_equilibrium(self, lagrange_report: EquilibriumReport) -> None:
        """Test that a run started on the rest point stops at once."""
        ms = MassSystem(masses=(1.0, 1.0, 1.0))
        eq = equilibrium_state(lagrange_report)

        traj = integrate_blowup(ms, eq, (0.0, 1.0))

        assert traj.termination is TerminationReason.EQUILIBRIUM
        assert len(traj) == 1
        assert traj.events[0].kind == "equilibrium"

    def test_t_eval(self, lagrange_report: EquilibriumReport) -> None:
        """Test that requested sample times are honoured across chunks."""
        ms = MassSystem(masses=(1.0, 1.0, 1.0))
        bs0 = BlowupState(rho=1.0, radial=lagrange_report.r_star, momenta=np.zeros(2), sigma=lagrange_report.sigma)
        t_eval = np.linspace(0.0, 2.5, 11)

        traj = integrate_blowup(ms, bs0, (0.0, 2.5), t_eval=t_eval, chunk=1.0)

        assert_allclose(traj.tau, t_eval)

    def test_collision_shape_is_refused(self, equal_three: MassSystem) -> None:
        """Test that a start outside the domain is a step failure."""
        bs0 = BlowupState(rho=1.0, radial=-1.0, momenta=np.zeros(2), sigma=np.zeros(2))

        with pytest.raises(StepFailureError, match="outside the domain"):
            integrate_blowup(equal_three, bs0, (0.0, 1.0))

    def test_concatenate_drops_junction(self, lagrange_report: EquilibriumReport) -> None:
        """Test that joining two runs keeps one copy of the shared node."""
        ms = MassSystem(masses=(1.0, 1.0, 1.0))
        bs0 = BlowupState(rho=1.0, radial=lagrange_report.r_star, momenta=np.zeros(2), sigma=lagrange_report.sigma)
        first = integrate_blowup(ms, bs0, (0.0, 1.0), t_eval=np.linspace(0.0, 1.0, 5))
        second = integrate_blowup(ms, first.final, (1.0, 2.0), t_eval=np.linspace(1.0, 2.0, 5))

        joined = concatenate([first, second])

        assert len(joined) == 9
        assert np.all(np.diff(joined.tau) > 0)

    def test_physical_time(self, lagrange_report: EquilibriumReport) -> None:
        """Test t(tau) = int rho^(3/2) dtau on the homothetic solution."""
        ms = MassSystem(masses=(1.0, 1.0, 1.0))
        bs0 = BlowupState(rho=1.0, radial=lagrange_report.r_star, momenta=np.zeros(2), sigma=lagrange_report.sigma)
        traj = integrate_blowup(ms, bs0, (0.0, 2.0), 1e-12, t_eval=np.linspace(0.0, 2.0, 201))

        rate = 1.5 * lagrange_report.r_star
        expected = (np.exp(rate * traj.tau) - 1.0) / rate
        assert_allclose(physical_time(traj), expected, rtol=1e-6, atol=1e-9)


class TestRestrictedFlow:
    """Test suite for the flow restricted to the collision manifold."""

    def test_vanishes_at_equilibrium(self, lagrange_report: EquilibriumReport) -> None:
        """Test that w = s = 0 is a rest point."""
        center = center_coordinates(lagrange_report)

        w_dot, s_dot = restricted_center_flow(MassSystem(masses=(1.0, 1.0, 1.0)), np.zeros(2), np.zeros(2), center)

        assert_allclose(w_dot, 0.0, atol=1e-10)
        assert_allclose(s_dot, 0.0, atol=1e-12)
