"""Finite differences, the symplectic form and atomic file output."""

from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from nbody_spin.exceptions import AsymmetryError

if TYPE_CHECKING:
    from collections.abc import Callable

    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Differentiation
    "central_jacobian",
    "central_gradient",
    "central_hessian",
    "richardson_hessian",
    "symmetrize",
    # Symplectic geometry
    "symplectic_form",
    "symplectic_defect",
    # Output
    "atomic_write",
]

_STENCIL = ((2, -1.0), (1, 8.0), (-1, -8.0), (-2, 1.0))


def _wrap(delta: FloatArray, periodic: FloatArray | None) -> FloatArray:
    if periodic is None:
        return delta
    wrapped = (delta + math.pi) % (2.0 * math.pi) - math.pi
    return np.where(periodic, wrapped, delta)


def central_jacobian(
    func: Callable[[FloatArray], FloatArray],
    x: FloatArray,
    step: float = 1e-5,
    *,
    periodic: FloatArray | None = None,
) -> FloatArray:
    """Fourth-order central-difference Jacobian of a vector function.

    Args:
        func: Map from ``R^d`` to ``R^m``.
        x: Evaluation point.
        step: Difference step.
        periodic: Optional boolean mask over the outputs marking angles; their
            differences are wrapped to ``(-pi, pi]`` before combining.

    Returns:
        The ``(m, d)`` Jacobian.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(func(x), dtype=float))
    jac = np.empty((f0.size, x.size))
    for col in range(x.size):
        acc = np.zeros_like(f0)
        for shift, weight in _STENCIL:
            xs = x.copy()
            xs[col] += shift * step
            acc += weight * _wrap(np.atleast_1d(np.asarray(func(xs), dtype=float)) - f0, periodic)
        jac[:, col] = acc / (12.0 * step)
    return jac


def central_gradient(func: Callable[[FloatArray], float], x: FloatArray, step: float = 1e-5) -> FloatArray:
    """Fourth-order central-difference gradient of a scalar function."""
    return central_jacobian(lambda z: np.array([func(z)]), x, step)[0]


def symmetrize(matrix: FloatArray, limit: float | None = None) -> FloatArray:
    """Return ``(M + M^T) / 2``.

    Raises:
        AsymmetryError: If ``limit`` is given and ``|M - M^T| / |M|`` exceeds it.
    """
    if limit is not None:
        scale = max(float(np.max(np.abs(matrix))), np.finfo(float).tiny)
        asymmetry = float(np.max(np.abs(matrix - matrix.T))) / scale
        if asymmetry > limit:
            raise AsymmetryError(asymmetry=asymmetry, limit=limit)
    return 0.5 * (matrix + matrix.T)


def central_hessian(gradient: Callable[[FloatArray], FloatArray], x: FloatArray, step: float = 1e-4) -> FloatArray:
    """Hessian as the central-difference Jacobian of a gradient, unsymmetrized."""
    return central_jacobian(gradient, x, step)


def richardson_hessian(
    gradient: Callable[[FloatArray], FloatArray],
    x: FloatArray,
    step: float = 1e-4,
) -> tuple[FloatArray, float]:
    """Hessian with a Richardson error estimate.

    The Hessian is differenced at ``step`` and ``step / 2``; for a fourth-order
    stencil the extrapolated value is ``H(h/2) + (H(h/2) - H(h)) / 15``.

    Returns:
        The extrapolated (unsymmetrized) Hessian and ``max |H(h/2) - H(h)|``.
    """
    coarse = central_hessian(gradient, x, step)
    fine = central_hessian(gradient, x, 0.5 * step)
    return fine + (fine - coarse) / 15.0, float(np.max(np.abs(fine - coarse)))


def symplectic_form(dim: int) -> FloatArray:
    """Standard symplectic matrix for coordinates ordered ``(momenta, positions)``.

    Args:
        dim: Number of degrees of freedom.

    Returns:
        ``[[0, I], [-I, 0]]`` of size ``2 dim``.
    """
    eye = np.eye(dim)
    zero = np.zeros((dim, dim))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_defect(jacobian: FloatArray) -> float:
    """Largest entry of ``J^T Omega J - Omega``."""
    dim = jacobian.shape[0] // 2
    omega = symplectic_form(dim)
    return float(np.max(np.abs(jacobian.T @ omega @ jacobian - omega)))


def atomic_write(path: str | os.PathLike[str], data: bytes | str) -> Path:
    """Write ``data`` to ``path`` through a temporary file and a rename.

    Readers never see a partially written file. Every call writes its own
    temporary file next to the target, so concurrent writers do not clobber
    each other's payload; the last rename wins.

    Returns:
        The destination path.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target
