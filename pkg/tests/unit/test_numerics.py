"""Unit tests for the finite-difference and file helpers."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nbody_spin.exceptions import AsymmetryError
from nbody_spin.numerics import (
    atomic_write,
    central_gradient,
    central_jacobian,
    richardson_hessian,
    symmetrize,
    symplectic_defect,
    symplectic_form,
)

if TYPE_CHECKING:
    from pathlib import Path


class TestCentralJacobian:
    """Test suite for the difference Jacobian."""

    @pytest.mark.unit
    def test_linear_map_is_exact(self) -> None:
        """Test that a linear map is differenced to its matrix."""
        mat = np.array([[1.0, 2.0, -1.0], [0.5, 0.0, 3.0]])

        jac = central_jacobian(lambda z: mat @ z, np.array([0.3, -0.2, 1.1]))

        assert_allclose(jac, mat, atol=1e-10)

    @pytest.mark.unit
    def test_nonlinear_map(self) -> None:
        """Test the Jacobian of a polar-to-Cartesian map."""
        x = np.array([2.0, 0.4])

        jac = central_jacobian(lambda z: np.array([z[0] * np.cos(z[1]), z[0] * np.sin(z[1])]), x)

        expected = [[math.cos(0.4), -2.0 * math.sin(0.4)], [math.sin(0.4), 2.0 * math.cos(0.4)]]
        assert_allclose(jac, expected, atol=1e-9)

    @pytest.mark.unit
    def test_periodic_outputs_are_unwrapped(self) -> None:
        """Test that an angle output jumping across 2 pi still has its true derivative."""

        def angle(z: np.ndarray) -> np.ndarray:
            return np.array([z[0] % (2.0 * math.pi)])

        jac = central_jacobian(angle, np.array([-1e-7]), step=1e-5, periodic=np.array([True]))

        assert_allclose(jac, [[1.0]], atol=1e-8)

    def test_gradient(self) -> None:
        """Test the gradient of a quadratic form."""
        grad = central_gradient(lambda z: float(z[0] ** 2 + 3.0 * z[0] * z[1]), np.array([1.0, 2.0]))

        assert_allclose(grad, [8.0, 3.0], atol=1e-9)


class TestHessian:
    """Test suite for the Hessian helpers."""

    def test_richardson_on_cubic(self) -> None:
        """Test that the extrapolated Hessian of a cubic is accurate and the estimate small."""

        def gradient(z: np.ndarray) -> np.ndarray:
            return np.array([3.0 * z[0] ** 2 + z[1], z[0] + 2.0 * z[1]])

        hess, err = richardson_hessian(gradient, np.array([0.5, -1.0]))

        assert_allclose(hess, [[3.0, 1.0], [1.0, 2.0]], atol=1e-8)
        assert err < 1e-6

    def test_symmetrize(self) -> None:
        """Test that the symmetric part is returned."""
        assert_allclose(symmetrize(np.array([[1.0, 2.0], [4.0, 3.0]])), [[1.0, 3.0], [3.0, 3.0]])

    def test_symmetrize_rejects_asymmetry(self) -> None:
        """Test that an asymmetry above the limit raises."""
        with pytest.raises(AsymmetryError):
            symmetrize(np.array([[1.0, 2.0], [4.0, 3.0]]), limit=1e-6)


class TestSymplectic:
    """Test suite for the symplectic-form helpers."""

    def test_form(self) -> None:
        """Test the block layout for one degree of freedom."""
        assert_allclose(symplectic_form(1), [[0.0, 1.0], [-1.0, 0.0]])

    def test_canonical_scaling_has_no_defect(self) -> None:
        """Test that (p, q) -> (p / 2, 2 q) is symplectic."""
        jac = np.diag([0.5, 0.5, 2.0, 2.0])

        assert symplectic_defect(jac) == pytest.approx(0.0)

    def test_non_canonical_scaling_has_defect(self) -> None:
        """Test that scaling both halves by two is not symplectic."""
        assert symplectic_defect(2.0 * np.eye(4)) == pytest.approx(3.0)


class TestAtomicWrite:
    """Test suite for atomic_write."""

    def test_writes_text(self, tmp_path: Path) -> None:
        """Test that text lands in nested directories and no temporary file remains."""
        target = tmp_path / "nested" / "report.json"

        written = atomic_write(target, '{"ok": true}\n')

        assert written == target
        assert target.read_text() == '{"ok": true}\n'
        assert list(target.parent.iterdir()) == [target]

    def test_overwrites(self, tmp_path: Path) -> None:
        """Test that an existing file is replaced."""
        target = tmp_path / "out.csv"
        target.write_text("old")

        atomic_write(target, b"new")

        assert target.read_bytes() == b"new"

    @pytest.mark.unit
    def test_concurrent_writers(self, tmp_path: Path) -> None:
        """Test that parallel writes to one target leave one whole payload and no temporary files."""
        target = tmp_path / "report.json"
        payloads = [f"{i}".encode() * 100_000 for i in range(8)]

        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(lambda payload: atomic_write(target, payload), payloads))

        assert target.read_bytes() in payloads
        assert list(tmp_path.iterdir()) == [target]

    @pytest.mark.unit
    def test_failed_write_leaves_nothing(self, tmp_path: Path) -> None:
        """Test that a payload that cannot be written removes its temporary file."""
        target = tmp_path / "report.json"

        with pytest.raises(TypeError):
            atomic_write(target, 12)  # type: ignore[arg-type]

        assert list(tmp_path.iterdir()) == []
