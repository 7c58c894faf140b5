"""Domain types for the collision coordinate chain.

States carry numpy arrays and are frozen ``msgspec.Struct`` values with
``eq=False``: the arrays are treated as read-only by every function in the
package. Reports carry only plain floats, lists and strings so they
serialize to JSON and decode back without loss.

Flat layouts used throughout:

- Jacobi-frame vectors (``xi``, ``eta``) of length ``3n - 3``: the blocks
  ``j = 1..n-2`` with three components, then components 2 and 3 of block
  ``n-1``, then component 3 of block ``n`` (``r`` for ``xi``, ``R`` for
  ``eta``). The omitted components are the structural zeros of the moving
  frame.
- Shape vectors (``sigma``, ``S``) of length ``3n - 4``: the same layout
  without the last entry.
"""

from __future__ import annotations

from enum import Enum
from typing import TYPE_CHECKING, Literal

import msgspec
import numpy as np

from nbody_spin.exceptions import ConfigurationError

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Enumerations
    "Chart",
    "StabilityClass",
    "TerminationReason",
    "Recipe",
    "FitModel",
    # Physical and Jacobi space
    "MassSystem",
    "CartesianState",
    "CartesianTrajectory",
    "JacobiState",
    # Rotation reduction
    "EulerTriple",
    "ReducedState",
    # Collision charts
    "ShapeState",
    "RegularizedAngles",
    # Blow-up
    "BlowupState",
    "CenterCoordinates",
    "Event",
    "Trajectory",
    "RestrictedTrajectory",
    "LinearizedSolution",
    # Experiments
    "ExperimentConfig",
    # Reports
    "Spectrum",
    "EquilibriumReport",
    "OrbitKernel",
    "DyadicWindow",
    "DescentFit",
    "SpinReport",
    "TransformReport",
    "CheckResult",
]


class Chart(str, Enum):
    """Regularizing chart of the Euler block.

    Attributes:
        UPPER: ``theta < pi/2``, ``cos(theta) = +sqrt(1 - u^2 - v^2)``.
        LOWER: ``theta > pi/2``, ``cos(theta) = -sqrt(1 - u^2 - v^2)``.
    """

    UPPER = "upper"
    LOWER = "lower"

    @property
    def sign(self) -> int:
        """Sign of ``cos(theta)`` on this chart."""
        return 1 if self is Chart.UPPER else -1

    @classmethod
    def from_cos(cls, cos_theta: float) -> Chart:
        """Return the chart containing an angle with the given ``cos(theta)``."""
        return cls.UPPER if cos_theta > 0 else cls.LOWER


class StabilityClass(str, Enum):
    """Spectral class of a collision-manifold equilibrium.

    Attributes:
        HYPERBOLIC: No diagonal entry of D vanishes.
        CENTER: At least one entry vanishes; the center space is non-trivial.
    """

    HYPERBOLIC = "hyperbolic"
    CENTER = "center"


class TerminationReason(str, Enum):
    """Why an integration stopped."""

    COMPLETED = "completed"
    EQUILIBRIUM = "equilibrium"
    SIGMA_FLOOR = "sigma_floor"
    CHART_DOMAIN = "chart_domain"
    COLLISION = "collision"
    ENERGY_LEVEL = "energy_level"


class Recipe(str, Enum):
    """Initial-data recipe of a spin experiment."""

    HOMOTHETIC = "homothetic"
    STABLE_SEED = "stable-seed"
    CENTER_SEED = "center-seed"
    USER_STATE = "user-state"


FitModel = Literal["exponential", "power"]
"""Decay model fitted by the descent diagnostic."""


class MassSystem(msgspec.Struct, frozen=True):
    """Masses of the ``n + 1`` bodies and the quantities derived from them.

    Attributes:
        masses: The ``n + 1`` strictly positive masses ``m_1..m_(n+1)``.

    Example:
        >>> ms = MassSystem(masses=(1.0, 1.0, 1.0))
        >>> ms.n
        2
        >>> ms.reduced.tolist()
        [0.5, 0.6666666666666666]
    """

    masses: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validate the masses."""
        if len(self.masses) < 2:  # noqa: PLR2004
            raise ConfigurationError("at least two bodies are required", detail=len(self.masses))
        if not all(np.isfinite(m) and m > 0 for m in self.masses):
            raise ConfigurationError("masses must be finite and strictly positive", detail=list(self.masses))

    @property
    def n(self) -> int:
        """Number of Jacobi vectors (bodies minus one)."""
        return len(self.masses) - 1

    @property
    def values(self) -> FloatArray:
        """Masses as a float array."""
        return np.asarray(self.masses, dtype=float)

    @property
    def partial_sums(self) -> FloatArray:
        """Partial sums ``M_1..M_(n+1)``; ``M_0 = 0`` is implicit."""
        return np.cumsum(self.values)

    @property
    def total(self) -> float:
        """Total mass ``M_(n+1)``."""
        return float(np.sum(self.values))

    @property
    def reduced(self) -> FloatArray:
        """Reduced masses ``mu_i = m_(i+1) M_i / M_(i+1)`` for ``i = 1..n``."""
        m = self.values
        big_m = self.partial_sums
        return m[1:] * big_m[:-1] / big_m[1:]


class CartesianState(msgspec.Struct, frozen=True, eq=False):
    """Momenta and positions of the bodies in physical space.

    Attributes:
        p: Momenta, shape ``(n + 1, 3)``.
        q: Positions, shape ``(n + 1, 3)``.
    """

    p: FloatArray
    q: FloatArray


class CartesianTrajectory(msgspec.Struct, frozen=True, eq=False):
    """Output of the Cartesian reference integrator.

    Attributes:
        t: Output times.
        p: Momenta per output time, shape ``(len(t), n + 1, 3)``.
        q: Positions per output time.
        collided: Whether the collision event stopped the run.
        collision_time: Time of the collision event, if any.
        nfev: Number of field evaluations.
    """

    t: FloatArray
    p: FloatArray
    q: FloatArray
    collided: bool = False
    collision_time: float | None = None
    nfev: int = 0

    def state(self, index: int) -> CartesianState:
        """Return the state at output ``index``."""
        return CartesianState(p=self.p[index], q=self.q[index])


class JacobiState(msgspec.Struct, frozen=True, eq=False):
    """Translation-reduced canonical coordinates.

    Attributes:
        P: Total linear momentum.
        B: Center of mass.
        y: Momenta conjugate to the Jacobi vectors, shape ``(n, 3)``.
        x: Jacobi vectors, ``x_i`` joining the barycenter of the first ``i`` bodies to body ``i + 1``.
    """

    P: FloatArray  # noqa: N815
    B: FloatArray  # noqa: N815
    y: FloatArray
    x: FloatArray


class EulerTriple(msgspec.Struct, frozen=True):
    """Precession, nutation and proper rotation angles.

    Attributes:
        phi: Precession, in ``[0, 2 pi)``.
        theta: Nutation, strictly inside ``(0, pi)``.
        psi: Proper rotation, in ``[0, 2 pi)``.
    """

    phi: float
    theta: float
    psi: float


class ReducedState(msgspec.Struct, frozen=True, eq=False):
    """Rotation-reduced canonical point ``(Phi, Theta, Psi, eta; phi, theta, psi, xi)``.

    ``eta`` and ``xi`` use the flat Jacobi-frame layout described in the
    module docstring, so the state has ``6n`` coordinates in total.

    Attributes:
        Phi: Momentum conjugate to ``phi`` (angular momentum along ``e_3``).
        Theta: Momentum conjugate to ``theta`` (along the node line).
        Psi: Momentum conjugate to ``psi`` (along ``f_3``).
        eta: Frame momenta, length ``3n - 3``.
        angles: The Euler triple.
        xi: Frame coordinates, length ``3n - 3``.
    """

    Phi: float  # noqa: N815
    Theta: float  # noqa: N815
    Psi: float  # noqa: N815
    eta: FloatArray
    angles: EulerTriple
    xi: FloatArray

    @property
    def n(self) -> int:
        """Number of Jacobi vectors."""
        return (len(self.xi) + 3) // 3

    @property
    def r(self) -> float:
        """The last frame coordinate ``xi_(n,3) = |x_n|``."""
        return float(self.xi[-1])

    @property
    def angular_momentum_block(self) -> tuple[float, float, float]:
        """The triple ``(Phi, Theta, Psi)``."""
        return (self.Phi, self.Theta, self.Psi)


class ShapeState(msgspec.Struct, frozen=True, eq=False):
    """Shape/radius canonical chart.

    Attributes:
        momenta: Shape momenta ``S``, length ``3n - 4``.
        radial: Radial momentum ``R`` conjugate to ``rho``.
        sigma: Shape coordinates, length ``3n - 4``; ``sigma_(n-1,2) < 0``.
        rho: Mass-weighted radius ``|xi|_mu > 0``.
    """

    momenta: FloatArray
    radial: float
    sigma: FloatArray
    rho: float


class RegularizedAngles(msgspec.Struct, frozen=True):
    """Regularized Euler block ``(U, V, A; u, v, alpha)``.

    Attributes:
        u: ``sin(theta) cos(psi)``.
        v: ``sin(theta) sin(psi)``.
        alpha: ``phi + psi`` in ``[0, 2 pi)``.
        chart: Which side of ``theta = pi/2`` the point lies on.
        U: Momentum conjugate to ``u``.
        V: Momentum conjugate to ``v``.
        A: Momentum conjugate to ``alpha``.
    """

    u: float
    v: float
    alpha: float
    chart: Chart = Chart.UPPER
    U: float = 0.0  # noqa: N815
    V: float = 0.0  # noqa: N815
    A: float = 0.0  # noqa: N815


class BlowupState(msgspec.Struct, frozen=True, eq=False):
    """Point of the blown-up phase space with its regularized angle triple.

    Attributes:
        rho: Radius, ``rho >= 0``; ``rho = 0`` is the collision manifold.
        radial: Rescaled radial momentum.
        momenta: Rescaled shape momenta, length ``3n - 4``.
        sigma: Shape coordinates.
        u: First regularized angle.
        v: Second regularized angle.
        alpha: Third regularized angle.
        chart: Chart of ``(u, v, alpha)``.
    """

    rho: float
    radial: float
    momenta: FloatArray
    sigma: FloatArray
    u: float = 0.0
    v: float = 0.0
    alpha: float = 0.0
    chart: Chart = Chart.UPPER

    @property
    def w(self) -> FloatArray:
        """The triple ``(u, v, alpha)``."""
        return np.array([self.u, self.v, self.alpha])


class CenterCoordinates(msgspec.Struct, frozen=True, eq=False):
    """Data of the diagonalizing change ``S = (alpha C)^-T w``, ``sigma = sigma* + alpha C s``.

    Attributes:
        sigma_star: The critical shape.
        transform: The matrix ``alpha C``.
        r_star: Equilibrium radial momentum.
    """

    sigma_star: FloatArray
    transform: FloatArray
    r_star: float


class Event(msgspec.Struct, frozen=True):
    """Something that happened during an integration.

    Attributes:
        kind: ``seam_enter``, ``seam_exit``, ``neighborhood``, ``equilibrium``, ``sigma_floor``,
            ``chart_domain`` or ``projection``.
        tau: When it happened.
        detail: Free text.
    """

    kind: str
    tau: float
    detail: str = ""


class Trajectory(msgspec.Struct, frozen=True, eq=False):
    """Sampled blown-up trajectory with per-node diagnostics.

    Attributes:
        tau: Strictly increasing fictitious times.
        rho: Radius per node.
        radial: Rescaled radial momentum per node.
        momenta: Rescaled shape momenta, shape ``(N, 3n - 4)``.
        sigma: Shape coordinates, shape ``(N, 3n - 4)``.
        w: ``(u, v, alpha)`` per node, shape ``(N, 3)``; ``alpha`` is unwrapped.
        charts: Chart tag per node.
        kinetic: ``T(S~, sigma)`` per node.
        potential: ``V(sigma)`` per node.
        energy: ``R~^2/2 + T - V`` per node.
        radial_integral: ``int_0^tau R~`` per node.
        momentum_integral: ``int_0^tau |S~|`` per node.
        inv_sigma: ``|1 / sigma_(n-1,2)|`` per node.
        sigma_ratio: ``|sigma_(n-1,3) / sigma_(n-1,2)|`` per node.
        events: Events in time order.
        termination: Why the run stopped.
    """

    tau: FloatArray
    rho: FloatArray
    radial: FloatArray
    momenta: FloatArray
    sigma: FloatArray
    w: FloatArray
    charts: tuple[Chart, ...]
    kinetic: FloatArray
    potential: FloatArray
    energy: FloatArray
    radial_integral: FloatArray
    momentum_integral: FloatArray
    inv_sigma: FloatArray
    sigma_ratio: FloatArray
    events: tuple[Event, ...] = ()
    termination: TerminationReason = TerminationReason.COMPLETED

    def __len__(self) -> int:
        """Number of nodes."""
        return len(self.tau)

    def state(self, index: int) -> BlowupState:
        """Return node ``index`` as a :class:`BlowupState`."""
        u, v, alpha = self.w[index]
        return BlowupState(
            rho=float(self.rho[index]),
            radial=float(self.radial[index]),
            momenta=self.momenta[index].copy(),
            sigma=self.sigma[index].copy(),
            u=float(u),
            v=float(v),
            alpha=float(alpha),
            chart=self.charts[index],
        )

    @property
    def final(self) -> BlowupState:
        """The last node."""
        return self.state(len(self.tau) - 1)


class RestrictedTrajectory(msgspec.Struct, frozen=True, eq=False):
    """Sampled flow on ``{rho = 0, E = 0}`` in the diagonalizing coordinates.

    Attributes:
        tau: Strictly increasing fictitious times.
        w: Momentum coordinates ``M^T S~`` per node, shape ``(N, 3n - 4)``.
        s: Shape displacement ``M^-1 (sigma - sigma*)`` per node, shape ``(N, 3n - 4)``.
        potential: ``V(sigma)`` per node.
        kinetic: ``T(S~, sigma)`` per node.
        termination: Why the run stopped.
    """

    tau: FloatArray
    w: FloatArray
    s: FloatArray
    potential: FloatArray
    kinetic: FloatArray
    termination: TerminationReason = TerminationReason.COMPLETED


class LinearizedSolution(msgspec.Struct, frozen=True, eq=False):
    """Closed-form solution of the flow linearized at an equilibrium.

    All fields are displacements from the equilibrium.

    Attributes:
        tau: Sample times.
        rho: ``rho^(tau)``.
        radial: ``R^(tau)``.
        momenta: ``S^(tau)``, shape ``(N, 3n - 4)``.
        sigma: ``sigma^(tau)``, shape ``(N, 3n - 4)``.
    """

    tau: FloatArray
    rho: FloatArray
    radial: FloatArray
    momenta: FloatArray
    sigma: FloatArray


class ExperimentConfig(msgspec.Struct, frozen=True):
    """Everything a spin experiment needs.

    Attributes:
        masses: The ``n + 1`` masses.
        recipe: How the initial data is built.
        sigma_guess: Starting shape of the central configuration search.
        rho0: Initial radius; ``0`` starts on the collision manifold.
        epsilon: Displacement amplitude of the seeded recipes.
        mode_index: Index into the diagonal of ``D`` for seeded recipes.
        tau_max: Integration horizon in fictitious time.
        w0: Initial ``(u, v, alpha)``.
        chart: Initial chart of the angle block.
        state: Flat ``(rho, R~, S~, sigma)`` for the user-state recipe.
        convergence_epsilon: Tail bound under which ``w`` is declared convergent.
        tol: Integrator tolerance (relative and absolute).
        equilibrium_eps: Field norm at which integration stops.
        neighborhood: Distance to the equilibrium that starts the dyadic windows.
        dyadic_floor: Smallest dyadic base time.
        tail_window: First dyadic window counted in the tail bound.
        segment: Segment length of stabilized runs.
        stabilize: Remove unstable linear components after every segment.
        output: Directory for result files, if any.
    """

    masses: tuple[float, ...]
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
    output: str | None = None

    def __post_init__(self) -> None:
        """Validate amplitudes, horizon and recipe parameters."""
        MassSystem(masses=self.masses)
        dim = 3 * len(self.masses) - 7
        if self.tau_max <= 0:
            raise ConfigurationError("tau_max must be positive", detail=self.tau_max)
        if self.rho0 < 0 or self.epsilon < 0:
            detail = {"rho0": self.rho0, "epsilon": self.epsilon}
            raise ConfigurationError("amplitudes must be non-negative", detail=detail)
        if self.tol <= 0 or self.segment <= 0 or self.dyadic_floor <= 0:
            raise ConfigurationError("tol, segment and dyadic_floor must be positive")
        if self.recipe is Recipe.USER_STATE:
            if self.state is None or len(self.state) != 2 * dim + 2:
                raise ConfigurationError(f"user-state recipe needs a state of length {2 * dim + 2}", detail=self.state)
        elif self.sigma_guess and len(self.sigma_guess) != dim:
            raise ConfigurationError(f"sigma_guess must have length {dim}", detail=list(self.sigma_guess))
        if self.recipe is Recipe.HOMOTHETIC and self.rho0 <= 0:
            raise ConfigurationError("the homothetic recipe needs rho0 > 0", detail=self.rho0)


class Spectrum(msgspec.Struct, frozen=True):
    """Eigenvalues of the linearization on the collision manifold.

    Attributes:
        c: Diagonal entries of ``D``, ascending.
        lambda_plus_re: Real parts of ``lambda+_j``.
        lambda_plus_im: Imaginary parts of ``lambda+_j``.
        lambda_minus_re: Real parts of ``lambda-_j``.
        lambda_minus_im: Imaginary parts of ``lambda-_j``.
        resonant: Whether mode ``j`` has a double eigenvalue.
        center_dim: Number of ``c_j`` counted as zero.
        classification: Hyperbolic or center.
        zero_threshold: Relative threshold used to count zeros.
    """

    c: list[float]
    lambda_plus_re: list[float]
    lambda_plus_im: list[float]
    lambda_minus_re: list[float]
    lambda_minus_im: list[float]
    resonant: list[bool]
    center_dim: int
    classification: StabilityClass
    zero_threshold: float

    def eigenvalues(self) -> FloatArray:
        """All ``2(3n - 4)`` eigenvalues as a complex array, plus-branch first."""
        plus = np.asarray(self.lambda_plus_re) + 1j * np.asarray(self.lambda_plus_im)
        minus = np.asarray(self.lambda_minus_re) + 1j * np.asarray(self.lambda_minus_im)
        return np.concatenate([plus, minus])


class EquilibriumReport(msgspec.Struct, frozen=True):
    """A central configuration seen as an equilibrium of the blown-up flow.

    Attributes:
        masses: The masses.
        sigma_star: Critical shape.
        r_star: ``-sqrt(2 V(sigma*))``.
        potential: ``V(sigma*)``.
        grad_norm: ``|d V(sigma*)|``.
        iterations: Newton iterations used.
        A: Kinetic matrix at ``(0, sigma*)``.
        B: Hessian of ``V`` at ``sigma*``.
        D: Diagonal entries of ``C^-1 alpha B alpha C``.
        spectrum: Eigenvalues and classification.
        center_dim: ``dim Ker(D)``.
        classification: Hyperbolic or center.
        dimension: Number of shape coordinates, ``3n - 4``.
        in_frame_chart: False when ``sigma_(n-1,2)`` vanishes (collinear last pair).
        orbit_kernel_dim: Kernel dimension of the unreduced potential Hessian, when computed.
        notes: Free-form remarks attached by the solver.
    """

    masses: list[float]
    sigma_star: list[float]
    r_star: float
    potential: float
    grad_norm: float
    iterations: int
    A: list[list[float]]  # noqa: N815
    B: list[list[float]]  # noqa: N815
    D: list[float]  # noqa: N815
    spectrum: Spectrum
    center_dim: int
    classification: StabilityClass
    dimension: int
    in_frame_chart: bool = True
    orbit_kernel_dim: int | None = None
    notes: list[str] = msgspec.field(default_factory=list)

    @property
    def sigma(self) -> FloatArray:
        """``sigma*`` as an array."""
        return np.asarray(self.sigma_star, dtype=float)

    @property
    def kinetic_matrix(self) -> FloatArray:
        """``A`` as an array."""
        return np.asarray(self.A, dtype=float)

    @property
    def hessian(self) -> FloatArray:
        """``B`` as an array."""
        return np.asarray(self.B, dtype=float)


class OrbitKernel(msgspec.Struct, frozen=True):
    """Symmetry directions of the unreduced scale-invariant potential at a critical shape.

    Attributes:
        dimension: Number of Hessian eigenvalues counted as zero.
        eigenvalues: Hessian eigenvalues, ascending.
        rotation_residuals: ``|H g_k| / |g_k|`` for the three rotation generators.
        scaling_residual: ``|H x*| / |x*|`` for the scaling direction.
        tolerance: Relative threshold used to count zeros.
    """

    dimension: int
    eigenvalues: list[float]
    rotation_residuals: list[float]
    scaling_residual: float
    tolerance: float


class DyadicWindow(msgspec.Struct, frozen=True):
    """``int |S~| dtau`` over ``[2^k T, 2^(k+1) T]``.

    Attributes:
        k: Window index.
        start: ``2^k T``.
        end: ``2^(k+1) T``.
        integral: The integral over the part of the window that was integrated.
        complete: Whether the trajectory covers the whole window.
    """

    k: int
    start: float
    end: float
    integral: float
    complete: bool


class DescentFit(msgspec.Struct, frozen=True):
    """Decay fit of ``W(tau) = V - T - V(sigma*)`` on a trajectory tail.

    Attributes:
        model: ``exponential`` (``W ~ C exp(-rate tau)``) or ``power`` (``W ~ C (tau - tau0 + 1)^-exponent``).
        rate: Fitted exponential rate (exponential model).
        exponent: Fitted power-law exponent (power model).
        prefactor: Fitted ``C``.
        samples: Number of samples used.
        monotonicity_violations: Increases of ``W`` above the tolerance.
        min_w: Smallest sampled ``W``.
        tolerance: Noise tolerance used for the monotonicity and sign checks.
    """

    model: FitModel
    rate: float
    exponent: float
    prefactor: float
    samples: int
    monotonicity_violations: int
    min_w: float
    tolerance: float


class SpinReport(msgspec.Struct, frozen=True):
    """Diagnostics of one spin experiment.

    Attributes:
        recipe: Initial-data recipe.
        masses: The masses.
        sigma_star: Equilibrium shape the run was seeded at.
        r_star: Equilibrium radial momentum.
        tau_final: Last integrated time.
        termination: Why the integration stopped.
        w_initial: ``(u, v, alpha)`` at ``tau = 0``.
        w_limit: ``(u, v, alpha)`` at the last node, the limit estimate.
        cauchy_tail: ``sup_(tau > tau0) |w(tau) - w(tau_final)|`` with ``tau0`` the tail start.
        k_bound: Running sup of the operator norm of ``S~ -> w'``.
        tail_bound: ``K (sum of tail windows + extrapolated remainder)``.
        tail_start: First time counted in the tail bound.
        epsilon: Convergence threshold on the tail bound.
        converged: ``tail_bound < epsilon``.
        dyadic_base: ``T`` of the dyadic windows.
        windows: The dyadic windows.
        momentum_integral: ``int |S~|`` over the whole run.
        inv_sigma_sup: Sup of ``|1 / sigma_(n-1,2)|``; None when a node is collinear.
        sigma_ratio_sup: Sup of ``|sigma_(n-1,3) / sigma_(n-1,2)|``; None when a node is collinear.
        energy_check: Largest ``|E(tau) - E(0) exp(int R~)|`` relative to the energy scale.
        rho_max_on_collision: Largest ``|rho|`` for runs started on ``rho = 0``.
        projection_defect: Total size of the stabilizing projections.
        angular_momentum_max: Largest physical angular momentum norm over ``rho > 0`` nodes.
        descent: Decay fit of ``W``, when the tail allows one.
        solver_tolerance: Integrator tolerance used.
        descent_note: Why ``descent`` is missing, when it is.
    """

    recipe: Recipe
    masses: list[float]
    sigma_star: list[float]
    r_star: float
    tau_final: float
    termination: TerminationReason
    w_initial: list[float]
    w_limit: list[float]
    cauchy_tail: float
    k_bound: float
    tail_bound: float
    tail_start: float
    epsilon: float
    converged: bool
    dyadic_base: float
    windows: list[DyadicWindow]
    momentum_integral: float
    inv_sigma_sup: float | None
    sigma_ratio_sup: float | None
    energy_check: float
    rho_max_on_collision: float | None
    projection_defect: float
    angular_momentum_max: float | None
    descent: DescentFit | None
    solver_tolerance: float
    descent_note: str | None = None


class TransformReport(msgspec.Struct, frozen=True):
    """One state written out in every chart of the coordinate chain.

    Attributes:
        masses: The masses.
        charts: Chart name to named coordinate blocks (vectors are flattened).
        hamiltonians: Energy evaluated in each chart.
        residuals: Round-trip and chart-equivalence errors by name.
        tolerance: Tolerance the residuals are compared against.
        passed: Whether every residual is below the tolerance.
    """

    masses: list[float]
    charts: dict[str, dict[str, list[float]]]
    hamiltonians: dict[str, float]
    residuals: dict[str, float]
    tolerance: float
    passed: bool


class CheckResult(msgspec.Struct, frozen=True):
    """Outcome of one invariant check of the verification suite.

    Attributes:
        name: Check identifier.
        passed: Whether ``value <= tolerance``.
        value: Measured error.
        tolerance: Accepted error.
        detail: Free text.
    """

    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
