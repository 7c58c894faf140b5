"""Exception hierarchy for the collision coordinate chain.

Every error raised by the library derives from :class:`NBodySpinError`. The
``exit_code`` class attribute is what the command line returns when the error
escapes a subcommand: 2 for schema and configuration problems, 3 for states
outside a chart or any other numerical-domain violation, 4 when an iterative
solver gives up.
"""

from __future__ import annotations

from typing import Any, ClassVar

__all__ = [
    "NBodySpinError",
    # Configuration
    "ConfigurationError",
    "ScenarioError",
    # Numerical domain
    "NumericalDomainError",
    "SingularConfigurationError",
    "DegenerateNormalizationError",
    "FrameDegenerateError",
    "GimbalDegenerateError",
    "DivisionDegenerateError",
    "ChartSeamError",
    "ChartDomainError",
    "SquareRootDomainError",
    "AsymmetryError",
    "NoStableModeError",
    "InsufficientTailError",
    "StepFailureError",
    # Convergence
    "NoConvergenceError",
]


class NBodySpinError(Exception):
    """Base exception for every error raised by ``nbody_spin``.

    Attributes:
        message: A description of the error.
        detail: Optional additional details about the error.
        exit_code: Process exit code used by the command line.

    Example:
        >>> try:
        ...     raise NBodySpinError("chart inversion failed")
        ... except NBodySpinError as e:
        ...     print(f"Error: {e}")
        Error: chart inversion failed
    """

    exit_code: ClassVar[int] = 1

    def __init__(self, message: str, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            message: A description of the error.
            detail: Optional additional details about the error.
        """
        self.message = message
        self.detail = detail
        super().__init__(message)

    def __str__(self) -> str:
        """Return the message, with the detail appended when present."""
        if self.detail is not None:
            return f"{self.message} (detail: {self.detail})"
        return self.message


class ConfigurationError(NBodySpinError):
    """Raised when settings, masses or experiment parameters are invalid.

    Example:
        >>> raise ConfigurationError("masses must be strictly positive")
        Traceback (most recent call last):
        ...
        ConfigurationError: masses must be strictly positive
    """

    exit_code: ClassVar[int] = 2


class ScenarioError(ConfigurationError):
    """Raised when a scenario file fails schema validation.

    Example:
        >>> raise ScenarioError("expected `float`, got `str`", field="solver.rtol")
        Traceback (most recent call last):
        ...
        ScenarioError: Invalid scenario field 'solver.rtol': expected `float`, got `str`
    """

    def __init__(self, reason: str, field: str | None = None, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            reason: What is wrong with the scenario.
            field: Dotted path of the offending field, when known.
            detail: Optional additional details about the error.
        """
        message = f"Invalid scenario: {reason}"
        if field:
            message = f"Invalid scenario field {field!r}: {reason}"
        super().__init__(message=message, detail=detail)
        self.reason = reason
        self.field = field


class NumericalDomainError(NBodySpinError):
    """Raised when a state leaves the domain where a map or field is defined."""

    exit_code: ClassVar[int] = 3


class SingularConfigurationError(NumericalDomainError):
    """Raised when two bodies are closer than the distance floor.

    Example:
        >>> raise SingularConfigurationError(pair=(0, 2), distance=1e-15)
        Traceback (most recent call last):
        ...
        SingularConfigurationError: Bodies 0 and 2 are 1e-15 apart, below the distance floor
    """

    def __init__(
        self,
        pair: tuple[int, int] | None = None,
        distance: float | None = None,
        detail: Any | None = None,
    ) -> None:
        """Initialize the exception.

        Args:
            pair: Zero-based indices of the colliding bodies.
            distance: Their separation.
            detail: Optional additional details about the error.
        """
        message = "Singular configuration"
        if pair is not None:
            message = f"Bodies {pair[0]} and {pair[1]} are {distance:.3g} apart, below the distance floor"
        super().__init__(message=message, detail=detail)
        self.pair = pair
        self.distance = distance


class DegenerateNormalizationError(NumericalDomainError):
    """Raised when a configuration is too close to its center of mass to normalize."""

    def __init__(self, norm: float, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            norm: The mass-weighted norm that fell below the floor.
            detail: Optional additional details about the error.
        """
        super().__init__(message=f"Mass-weighted norm {norm:.3g} is below the normalization floor", detail=detail)
        self.norm = norm


class FrameDegenerateError(NumericalDomainError):
    """Raised when the last two Jacobi vectors are (nearly) parallel or vanish.

    Example:
        >>> raise FrameDegenerateError(cross_norm=0.0)
        Traceback (most recent call last):
        ...
        FrameDegenerateError: Moving frame undefined: |x_n x x_(n-1)| = 0 is below the frame floor
    """

    def __init__(self, cross_norm: float, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            cross_norm: Norm of the cross product of the last two Jacobi vectors.
            detail: Optional additional details about the error.
        """
        super().__init__(
            message=f"Moving frame undefined: |x_n x x_(n-1)| = {cross_norm:.3g} is below the frame floor",
            detail=detail,
        )
        self.cross_norm = cross_norm


class GimbalDegenerateError(NumericalDomainError):
    """Raised when the nutation angle is too close to 0 or pi for Euler angles."""

    def __init__(self, sin_theta: float, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            sin_theta: The offending value of ``sin(theta)``.
            detail: Optional additional details about the error.
        """
        super().__init__(
            message=f"Euler angles undefined: sin(theta) = {sin_theta:.3g} is below the floor", detail=detail
        )
        self.sin_theta = sin_theta


class DivisionDegenerateError(NumericalDomainError):
    """Raised when a reduced coordinate used as a divisor crosses its floor.

    Example:
        >>> raise DivisionDegenerateError("xi[n-1,2]", -1e-14)
        Traceback (most recent call last):
        ...
        DivisionDegenerateError: Division by xi[n-1,2] = -1e-14 below the floor
    """

    def __init__(self, quantity: str, value: float, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            quantity: Name of the divisor.
            value: Its value.
            detail: Optional additional details about the error.
        """
        super().__init__(message=f"Division by {quantity} = {value:.3g} below the floor", detail=detail)
        self.quantity = quantity
        self.value = value


class ChartSeamError(NumericalDomainError):
    """Raised when an Euler triple sits on the seam theta = pi/2 between the two regularizing charts."""

    def __init__(self, cos_theta: float, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            cos_theta: The value of ``cos(theta)`` that is too close to zero.
            detail: Optional additional details about the error.
        """
        super().__init__(message=f"On the chart seam: cos(theta) = {cos_theta:.3g}", detail=detail)
        self.cos_theta = cos_theta


class ChartDomainError(NumericalDomainError):
    """Raised when (u, v) is at a point where the chart cannot be inverted or the field is singular."""

    def __init__(self, radius: float, reason: str = "outside the chart domain", detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            radius: The value of ``sqrt(u^2 + v^2)``.
            reason: Which boundary was hit.
            detail: Optional additional details about the error.
        """
        super().__init__(message=f"(u, v) with radius {radius:.3g} is {reason}", detail=detail)
        self.radius = radius
        self.reason = reason


class SquareRootDomainError(NumericalDomainError):
    """Raised when a square root is requested of a negative quantity (2V - w.A w, or a matrix eigenvalue)."""

    def __init__(self, value: float, quantity: str = "radicand", detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            value: The non-positive value.
            quantity: What was being square-rooted.
            detail: Optional additional details about the error.
        """
        super().__init__(message=f"Square root of non-positive {quantity} {value:.3g}", detail=detail)
        self.value = value
        self.quantity = quantity


class AsymmetryError(NumericalDomainError):
    """Raised when a finite-difference Hessian is too asymmetric to be trusted."""

    def __init__(self, asymmetry: float, limit: float, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            asymmetry: Relative asymmetry ``|M - M^T| / |M|``.
            limit: Largest accepted value.
            detail: Optional additional details about the error.
        """
        super().__init__(message=f"Hessian asymmetry {asymmetry:.3g} exceeds {limit:.3g}", detail=detail)
        self.asymmetry = asymmetry
        self.limit = limit


class NoStableModeError(NumericalDomainError):
    """Raised when a stable-direction seed is requested but the mode does not exist."""

    def __init__(self, mode_index: int, available: int, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            mode_index: Requested mode.
            available: Number of modes with negative real part.
            detail: Optional additional details about the error.
        """
        super().__init__(
            message=f"Stable mode {mode_index} requested but the equilibrium has {available} stable modes",
            detail=detail,
        )
        self.mode_index = mode_index
        self.available = available


class InsufficientTailError(NumericalDomainError):
    """Raised when a trajectory tail has too few usable samples for a decay fit."""

    def __init__(self, samples: int, required: int, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            samples: Number of usable samples.
            required: Minimum needed.
            detail: Optional additional details about the error.
        """
        super().__init__(message=f"Tail has {samples} usable samples, {required} required", detail=detail)
        self.samples = samples
        self.required = required


class StepFailureError(NumericalDomainError):
    """Raised when the adaptive integrator cannot continue."""

    def __init__(self, tau: float, solver_message: str, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            tau: Time at which the integrator stopped.
            solver_message: Message reported by the solver.
            detail: Optional additional details about the error.
        """
        super().__init__(message=f"Integration failed at t={tau:.6g}: {solver_message}", detail=detail)
        self.tau = tau
        self.solver_message = solver_message


class NoConvergenceError(NBodySpinError):
    """Raised when Newton iteration does not reach the gradient tolerance.

    Example:
        >>> raise NoConvergenceError(iterations=100, grad_norm=3.2e-4)
        Traceback (most recent call last):
        ...
        NoConvergenceError: No convergence after 100 iterations (|grad V| = 0.00032)
    """

    exit_code: ClassVar[int] = 4

    def __init__(self, iterations: int, grad_norm: float, detail: Any | None = None) -> None:
        """Initialize the exception.

        Args:
            iterations: Iterations performed.
            grad_norm: Gradient norm at the last iterate.
            detail: Optional additional details about the error.
        """
        super().__init__(
            message=f"No convergence after {iterations} iterations (|grad V| = {grad_norm:.3g})",
            detail=detail,
        )
        self.iterations = iterations
        self.grad_norm = grad_norm
