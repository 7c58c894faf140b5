"""Unit tests for Jacobi coordinates."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from nbody_spin.jacobi import (
    angular_momentum_jacobi,
    body_pairs,
    from_jacobi,
    hamiltonian_jacobi,
    jacobi_matrix,
    kinetic_jacobi,
    potential_jacobi,
    separation_matrix,
    to_jacobi,
)
from nbody_spin.nbody_core import (
    angular_momentum_cartesian,
    hamiltonian_cartesian,
    kinetic_cartesian,
    potential_cartesian,
)
from nbody_spin.types import CartesianState, MassSystem

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


class TestJacobiMatrix:
    """Test suite for the Jacobi transformation matrix."""

    @pytest.mark.unit
    def test_equal_masses(self, equal_three: MassSystem) -> None:
        """Test the rows for three unit masses."""
        expected = [[1.0, -1.0, 0.0], [0.5, 0.5, -1.0], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]]

        assert_allclose(jacobi_matrix(equal_three), expected)

    @pytest.mark.unit
    def test_first_vector_is_first_separation(self, generic_four: MassSystem, rng: np.random.Generator) -> None:
        """Test x_1 = q_1 - q_2."""
        q = rng.normal(size=(4, 3))

        js = to_jacobi(generic_four, CartesianState(p=np.zeros((4, 3)), q=q))

        assert_allclose(js.x[0], q[0] - q[1])

    def test_barycenter_row(self, generic_three: MassSystem) -> None:
        """Test that the last coordinate is the centre of mass and P the total momentum."""
        q = np.array([[6.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]])
        p = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

        js = to_jacobi(generic_three, CartesianState(p=p, q=q))

        assert_allclose(js.B, [1.0, 1.0, 1.0])
        assert_allclose(js.P, [1.0, 1.0, 1.0])


class TestSeparationMatrix:
    """Test suite for pair separations in Jacobi vectors."""

    def test_pairs_order(self, equal_three: MassSystem) -> None:
        """Test that pairs are listed lexicographically."""
        assert body_pairs(equal_three) == [(0, 1), (0, 2), (1, 2)]

    @pytest.mark.unit
    def test_recombines_separations(self, generic_four: MassSystem, rng: np.random.Generator) -> None:
        """Test q_i - q_j = K x for every pair."""
        q = rng.normal(size=(4, 3))
        js = to_jacobi(generic_four, CartesianState(p=np.zeros((4, 3)), q=q))

        sep = separation_matrix(generic_four) @ js.x

        expected = np.array([q[i] - q[j] for i, j in body_pairs(generic_four)])
        assert_allclose(sep, expected, atol=1e-12)

    def test_is_read_only(self, equal_three: MassSystem) -> None:
        """Test that the cached matrix cannot be mutated."""
        with pytest.raises(ValueError, match="read-only"):
            separation_matrix(equal_three)[0, 0] = 2.0


class TestCanonicalChange:
    """Test suite for the Cartesian to Jacobi change of variables."""

    @pytest.mark.unit
    def test_round_trip(self, generic_four: MassSystem, rng: np.random.Generator) -> None:
        """Test that from_jacobi inverts to_jacobi."""
        s = CartesianState(p=rng.normal(size=(4, 3)), q=rng.normal(size=(4, 3)))

        back = from_jacobi(generic_four, to_jacobi(generic_four, s))

        assert_allclose(back.q, s.q, atol=1e-12)
        assert_allclose(back.p, s.p, atol=1e-12)

    @pytest.mark.unit
    def test_energy_split(self, random_state: CartesianState, generic_three: MassSystem) -> None:
        """Test T = T_jacobi + |P|^2 / 2M and equal potentials."""
        js = to_jacobi(generic_three, random_state)

        assert kinetic_cartesian(generic_three, random_state.p) == pytest.approx(
            kinetic_jacobi(generic_three, js.y) + float(js.P @ js.P) / (2.0 * generic_three.total)
        )
        assert potential_jacobi(generic_three, js.x) == pytest.approx(
            potential_cartesian(generic_three, random_state.q)
        )

    def test_hamiltonian_at_zero_total_momentum(self, equal_three: MassSystem, rng: np.random.Generator) -> None:
        """Test that both Hamiltonians agree when P = 0."""
        p = rng.normal(size=(3, 3))
        p -= p.mean(axis=0)
        s = CartesianState(p=p, q=rng.normal(size=(3, 3)))
        js = to_jacobi(equal_three, s)

        assert hamiltonian_jacobi(equal_three, js.y, js.x) == pytest.approx(hamiltonian_cartesian(equal_three, s))

    @given(
        q=arrays(np.float64, (3, 3), elements=finite),
        p=arrays(np.float64, (3, 3), elements=finite),
    )
    @settings(max_examples=50, deadline=None)
    def test_angular_momentum_is_preserved(self, q: np.ndarray, p: np.ndarray) -> None:
        """Test that the total angular momentum reads the same in both charts."""
        ms = MassSystem(masses=(1.0, 2.0, 3.0))
        s = CartesianState(p=p, q=q)

        js = to_jacobi(ms, s)

        assert_allclose(
            angular_momentum_jacobi(js.P, js.B, js.y, js.x),
            angular_momentum_cartesian(s),
            atol=1e-9 * (1.0 + np.max(np.abs(p)) * np.max(np.abs(q))),
        )
