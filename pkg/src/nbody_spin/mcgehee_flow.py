"""Blow-up of the total collision.

Momenta are rescaled by powers of the radius and time by ``rho^(3/2)``:
``R = R~ / sqrt(rho)``, ``S = S~ sqrt(rho)``, ``d/dtau = rho^(3/2) d/dt``.
In the fictitious time ``tau`` the collision becomes the invariant set
``rho = 0`` and the flow reads

    rho'   = rho R~
    R~'    = R~^2 / 2 + 2 T - V
    S~'    = -dT/dsigma + dV/dsigma - R~ S~ / 2
    sigma' = A(sigma) S~
    w'     = |(sigma, 1)|_mu^2 W(sigma, w) S~

with ``T = S~ . A S~ / 2`` and ``W`` the matrix of
:func:`~nbody_spin.collision_chart.w_matrix`. The rescaled energy
``E = R~^2/2 + T - V`` equals ``h rho`` and obeys ``E' = R~ E``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid, solve_ivp

from nbody_spin.collision_chart import (
    euler_matrix,
    kinetic_matrix,
    shape_dimension,
    shape_kinetic,
    shape_norm,
    shape_potential,
    shape_potential_gradient,
    w_matrix,
)
from nbody_spin.config import DEFAULT_FLOORS, DEFAULT_SOLVER, Floors, GradientMode, SolverConfig, with_tolerance
from nbody_spin.exceptions import (
    ChartDomainError,
    DivisionDegenerateError,
    SingularConfigurationError,
    SquareRootDomainError,
    StepFailureError,
)
from nbody_spin.numerics import central_gradient
from nbody_spin.types import (
    BlowupState,
    CenterCoordinates,
    Chart,
    Event,
    EulerTriple,
    MassSystem,
    RegularizedAngles,
    RestrictedTrajectory,
    ShapeState,
    TerminationReason,
    Trajectory,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Rescaling
    "blow_up",
    "blow_down",
    # Energy terms
    "kinetic_T",
    "potential_V",
    "kinetic_gradient",
    "potential_gradient",
    "rescaled_energy",
    "energy_residual",
    # Vector fields
    "blowup_field",
    "field_norm",
    "restricted_center_flow",
    # Integration
    "integrate_blowup",
    "integrate_restricted",
    "concatenate",
    "physical_time",
    "sigma_diagnostics",
]

logger = logging.getLogger(__name__)

AngleMode = Literal["regularized", "euler"]


def blow_up(
    ss: ShapeState,
    angles: RegularizedAngles | None = None,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> BlowupState:
    """Rescale a shape/radius state: ``R~ = R sqrt(rho)``, ``S~ = S / sqrt(rho)``.

    Args:
        ss: State with ``rho > 0``.
        angles: Regularized angle triple carried along; ``(0, 0, 0)`` on the upper chart when omitted.
        floors: Numerical floors.

    Returns:
        The blown-up state.

    Raises:
        DivisionDegenerateError: If ``rho`` is below the normalization floor.
    """
    if ss.rho < floors.normalization:
        raise DivisionDegenerateError("rho", float(ss.rho))
    root = math.sqrt(ss.rho)
    ra = angles or RegularizedAngles(u=0.0, v=0.0, alpha=0.0)
    return BlowupState(
        rho=float(ss.rho),
        radial=float(ss.radial) * root,
        momenta=np.asarray(ss.momenta, dtype=float) / root,
        sigma=np.asarray(ss.sigma, dtype=float).copy(),
        u=ra.u,
        v=ra.v,
        alpha=ra.alpha,
        chart=ra.chart,
    )


def blow_down(bs: BlowupState, *, floors: Floors = DEFAULT_FLOORS) -> tuple[ShapeState, RegularizedAngles]:
    """Inverse of :func:`blow_up`; the angle momenta are zero.

    Raises:
        DivisionDegenerateError: If ``rho`` is below the normalization floor.

    Example:
        >>> bs = BlowupState(rho=4.0, radial=-2.0, momenta=np.zeros(2), sigma=np.array([-1.0, 0.0]))
        >>> blow_down(bs)[0].radial
        -1.0
    """
    if bs.rho < floors.normalization:
        raise DivisionDegenerateError("rho", float(bs.rho))
    root = math.sqrt(bs.rho)
    ss = ShapeState(
        momenta=np.asarray(bs.momenta, dtype=float) * root,
        radial=float(bs.radial) / root,
        sigma=np.asarray(bs.sigma, dtype=float).copy(),
        rho=float(bs.rho),
    )
    return ss, RegularizedAngles(u=bs.u, v=bs.v, alpha=bs.alpha % (2.0 * math.pi), chart=bs.chart)


def kinetic_T(  # noqa: N802
    ms: MassSystem,
    momenta: FloatArray,
    sigma: FloatArray,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> float:
    """``T(S~, sigma)``, positive definite in ``S~``."""
    return shape_kinetic(ms, momenta, sigma, floors=floors)


def potential_V(ms: MassSystem, sigma: FloatArray, *, floors: Floors = DEFAULT_FLOORS) -> float:  # noqa: N802
    """``V(sigma) > 0``.

    Raises:
        SingularConfigurationError: If a recombined mutual distance vanishes.
    """
    return shape_potential(ms, sigma, floors=floors)


def kinetic_gradient(
    ms: MassSystem,
    momenta: FloatArray,
    sigma: FloatArray,
    *,
    step: float = DEFAULT_SOLVER.fd_step,
    floors: Floors = DEFAULT_FLOORS,
) -> FloatArray:
    """``dT/dsigma`` at fixed momenta, by fourth-order central differences."""
    momenta = np.asarray(momenta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if not np.any(momenta):
        return np.zeros_like(sigma)
    return central_gradient(lambda s: shape_kinetic(ms, momenta, s, floors=floors), sigma, step)


def potential_gradient(
    ms: MassSystem,
    sigma: FloatArray,
    mode: GradientMode | None = None,
    *,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> FloatArray:
    """``dV/dsigma``.

    Args:
        ms: The masses.
        sigma: Shape.
        mode: Overrides ``solver.gradient_mode``.
        solver: Supplies the difference step and the cross-check tolerance.
        floors: Numerical floors.

    Returns:
        The gradient; in ``cross_check`` mode the closed form, after logging a
        warning if the two evaluations disagree.
    """
    mode = mode or solver.gradient_mode
    sigma = np.asarray(sigma, dtype=float)
    if mode == "finite_difference":
        return central_gradient(lambda s: shape_potential(ms, s, floors=floors), sigma, solver.fd_step)
    grad = shape_potential_gradient(ms, sigma, floors=floors)
    if mode == "cross_check":
        numeric = central_gradient(lambda s: shape_potential(ms, s, floors=floors), sigma, solver.fd_step)
        mismatch = float(np.max(np.abs(numeric - grad)))
        if mismatch > solver.cross_check_tol:
            logger.warning(
                "Potential gradient cross-check mismatch %.3e exceeds %.3e at sigma=%s",
                mismatch,
                solver.cross_check_tol,
                np.array2string(sigma, precision=6),
            )
    return grad


def rescaled_energy(ms: MassSystem, bs: BlowupState, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """``E = R~^2 / 2 + T(S~, sigma) - V(sigma)``."""
    return (
        0.5 * bs.radial**2
        + shape_kinetic(ms, bs.momenta, bs.sigma, floors=floors)
        - shape_potential(ms, bs.sigma, floors=floors)
    )


def energy_residual(ms: MassSystem, bs: BlowupState, h: float, *, floors: Floors = DEFAULT_FLOORS) -> float:
    """``E - h rho``; zero along exact flows of physical energy ``h``."""
    return rescaled_energy(ms, bs, floors=floors) - h * bs.rho


def _shape_terms(
    ms: MassSystem,
    momenta: FloatArray,
    sigma: FloatArray,
    solver: SolverConfig,
    floors: Floors,
) -> tuple[float, float, FloatArray, FloatArray, FloatArray]:
    """``(T, V, A, dT/dsigma, dV/dsigma)``."""
    mat = kinetic_matrix(ms, sigma, floors=floors)
    kin = 0.5 * float(momenta @ mat @ momenta)
    pot = shape_potential(ms, sigma, floors=floors)
    d_kin = kinetic_gradient(ms, momenta, sigma, step=solver.fd_step, floors=floors)
    d_pot = potential_gradient(ms, sigma, solver=solver, floors=floors)
    return kin, pot, mat, d_kin, d_pot


def _physical_field(
    ms: MassSystem,
    rho: float,
    radial: float,
    momenta: FloatArray,
    sigma: FloatArray,
    solver: SolverConfig,
    floors: Floors,
) -> FloatArray:
    """Derivative of ``(rho, R~, S~, sigma)`` as one flat vector."""
    kin, pot, mat, d_kin, d_pot = _shape_terms(ms, momenta, sigma, solver, floors)
    return np.concatenate(
        [
            [rho * radial, 0.5 * radial**2 + 2.0 * kin - pot],
            -d_kin + d_pot - 0.5 * radial * momenta,
            mat @ momenta,
        ]
    )


def blowup_field(
    ms: MassSystem,
    bs: BlowupState,
    *,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> BlowupState:
    """Derivative of a blown-up state with respect to ``tau``.

    Returns:
        A :class:`BlowupState` whose fields hold the derivatives; ``chart`` is unchanged.

    Raises:
        DivisionDegenerateError: If ``sigma_(n-1,2)`` is needed and below the floor.
        ChartDomainError: If ``(u, v)`` leaves the chart domain.
    """
    momenta = np.asarray(bs.momenta, dtype=float)
    sigma = np.asarray(bs.sigma, dtype=float)
    d = sigma.size
    phys = _physical_field(ms, bs.rho, bs.radial, momenta, sigma, solver, floors)
    dw = shape_norm(ms, sigma) ** 2 * (w_matrix(ms, sigma, bs.u, bs.v, bs.chart, floors=floors) @ momenta)
    return BlowupState(
        rho=float(phys[0]),
        radial=float(phys[1]),
        momenta=phys[2 : 2 + d],
        sigma=phys[2 + d :],
        u=float(dw[0]),
        v=float(dw[1]),
        alpha=float(dw[2]),
        chart=bs.chart,
    )


def field_norm(
    ms: MassSystem,
    bs: BlowupState,
    *,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> float:
    """Norm of the ``(rho, R~, S~, sigma)`` part of :func:`blowup_field`."""
    phys = _physical_field(
        ms, bs.rho, bs.radial, np.asarray(bs.momenta, dtype=float), np.asarray(bs.sigma, dtype=float), solver, floors
    )
    return float(np.linalg.norm(phys))


def sigma_diagnostics(n: int, sigma: FloatArray) -> tuple[FloatArray, FloatArray]:
    """``|1 / sigma_(n-1,2)|`` and ``|sigma_(n-1,3) / sigma_(n-1,2)|`` for one shape or a stack of shapes."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    s2 = np.abs(sigma[:, 3 * (n - 2)])
    s3 = np.abs(sigma[:, 3 * (n - 2) + 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(s2 > 0, 1.0 / np.where(s2 > 0, s2, 1.0), np.inf)
        ratio = np.where(s2 > 0, s3 / np.where(s2 > 0, s2, 1.0), np.where(s3 > 0, np.inf, 0.0))
    return inv, ratio


@dataclass(frozen=True)
class _Layout:
    """Slices of the flat integration vector ``(rho, R~, S~, sigma, angles, int R~, int |S~|)``."""

    d: int

    @property
    def momenta(self) -> slice:
        return slice(2, 2 + self.d)

    @property
    def sigma(self) -> slice:
        return slice(2 + self.d, 2 + 2 * self.d)

    @property
    def angles(self) -> slice:
        return slice(2 + 2 * self.d, 5 + 2 * self.d)

    @property
    def physical(self) -> slice:
        return slice(0, 2 + 2 * self.d)

    @property
    def size(self) -> int:
        return 7 + 2 * self.d


def _to_euler(u: float, v: float, alpha: float, chart: Chart) -> FloatArray:
    radius = min(math.hypot(u, v), 1.0)
    theta = math.asin(radius) if chart is Chart.UPPER else math.pi - math.asin(radius)
    psi = math.atan2(v, u)
    return np.array([alpha - psi, theta, psi])


def _to_regularized(phi: float, theta: float, psi: float) -> tuple[FloatArray, Chart]:
    sin_theta = math.sin(theta)
    return np.array([sin_theta * math.cos(psi), sin_theta * math.sin(psi), phi + psi]), Chart.from_cos(math.cos(theta))


def _pack(lay: _Layout, bs: BlowupState, angles: FloatArray, quadratures: Sequence[float]) -> FloatArray:
    out = np.empty(lay.size)
    out[0] = bs.rho
    out[1] = bs.radial
    out[lay.momenta] = np.asarray(bs.momenta, dtype=float)
    out[lay.sigma] = np.asarray(bs.sigma, dtype=float)
    out[lay.angles] = angles
    out[-2:] = quadratures
    return out


def _event(func: Callable[[float, FloatArray], float], *, terminal: bool, direction: float) -> Callable:
    func.terminal = terminal  # type: ignore[attr-defined]
    func.direction = direction  # type: ignore[attr-defined]
    return func


_FAILURES: tuple[tuple[type[Exception], TerminationReason, str], ...] = (
    (DivisionDegenerateError, TerminationReason.SIGMA_FLOOR, "sigma_floor"),
    (ChartDomainError, TerminationReason.CHART_DOMAIN, "chart_domain"),
    (SingularConfigurationError, TerminationReason.COLLISION, "collision"),
)
_DOMAIN_ERRORS: tuple[type[Exception], ...] = (DivisionDegenerateError, ChartDomainError, SingularConfigurationError)
_RADICAND_ERRORS: tuple[type[Exception], ...] = (SquareRootDomainError,)
_RETRY_GAP = 1e-9
"""Relative distance to a failing evaluation below which a chunk is not retried."""


def _guarded(
    func: Callable[[float, FloatArray], Any],
    failures: list[float],
    errors: tuple[type[Exception], ...] = _DOMAIN_ERRORS,
) -> Callable[[float, FloatArray], Any]:
    """Wrap ``func`` so that the time of every listed error it raises is appended to ``failures``."""

    def wrapper(t: float, z: FloatArray) -> Any:
        try:
            return func(t, z)
        except errors:
            failures.append(float(t))
            raise

    return wrapper


def integrate_blowup(  # noqa: C901, PLR0912, PLR0915
    ms: MassSystem,
    bs0: BlowupState,
    tau_span: tuple[float, float],
    tol: float | None = None,
    *,
    t_eval: FloatArray | None = None,
    reference: BlowupState | None = None,
    equilibrium: BlowupState | None = None,
    neighborhood: float | None = None,
    quadratures: tuple[float, float] = (0.0, 0.0),
    chunk: float = 1.0,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> Trajectory:
    """Adaptive integration of the blown-up flow in ``tau``.

    The run proceeds in chunks of length ``chunk``. Inside the band
    ``1 - u^2 - v^2 < seam_band`` the angle block is carried in Euler angles
    and handed back to ``(u, v, alpha)`` on the chart of the side reached.
    The integrals of ``R~`` and ``|S~|`` ride along as extra components.

    Args:
        ms: The masses.
        bs0: Initial state.
        tau_span: Start and end of the fictitious time interval.
        tol: Overrides both solver tolerances.
        t_eval: Output times; the solver's own steps when omitted.
        reference: The state is integrated as a displacement from this one.
        equilibrium: Equilibrium whose neighborhood is watched.
        neighborhood: Radius of the watched neighborhood.
        quadratures: Starting values of ``int R~`` and ``int |S~|``.
        chunk: Length of one integration chunk.
        solver: Integrator settings.
        floors: Numerical floors.

    Returns:
        The trajectory. Floor crossings and chart-domain exits end the run
        with the matching termination reason and an event, not an exception. A chunk that
        fails part way is retried up to halfway to the failing evaluation, so the kept nodes
        reach the failure point and the event is stamped at the last node.

    Raises:
        StepFailureError: If the integrator cannot continue.
    """
    solver = with_tolerance(solver, tol)
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
    n = ms.n
    lay = _Layout(shape_dimension(n))
    sig2 = lay.sigma.start + 3 * (n - 2)
    ref = np.zeros(lay.size)
    if reference is not None:
        ref = _pack(lay, reference, np.zeros(3), (0.0, 0.0))
        ref[lay.angles] = 0.0
    eq_vec = None if equilibrium is None else _pack(lay, equilibrium, np.zeros(3), (0.0, 0.0))[lay.physical]
    band = solver.seam_band

    tau, tau_end = float(tau_span[0]), float(tau_span[1])
    chart = bs0.chart
    mode: AngleMode = "regularized"
    angles = bs0.w.astype(float)
    if 1.0 - bs0.u**2 - bs0.v**2 < band:
        mode = "euler"
        angles = _to_euler(bs0.u, bs0.v, bs0.alpha, chart)
    x = _pack(lay, bs0, angles, quadratures)

    taus: list[float] = []
    states: list[FloatArray] = []
    charts: list[Chart] = []
    events: list[Event] = []
    termination = TerminationReason.COMPLETED

    def record(t: float, xv: FloatArray) -> None:
        row = xv.copy()
        node_chart = chart
        if mode == "euler":
            row[lay.angles], node_chart = _to_regularized(*xv[lay.angles])
        taus.append(t)
        states.append(row)
        charts.append(node_chart)

    def phys_field(xv: FloatArray) -> FloatArray:
        return _physical_field(ms, xv[0], xv[1], xv[lay.momenta], xv[lay.sigma], solver, floors)

    try:
        start_norm = float(np.linalg.norm(phys_field(x)))
    except (DivisionDegenerateError, ChartDomainError, SingularConfigurationError) as exc:
        raise StepFailureError(tau=tau, solver_message=f"initial state outside the domain: {exc}") from exc
    if t_eval is None or (t_eval.size and t_eval[0] == tau):
        record(tau, x)
    if start_norm < solver.equilibrium_eps:
        events.append(Event(kind="equilibrium", tau=tau))
        termination = TerminationReason.EQUILIBRIUM

    retry_end = math.inf
    while termination is TerminationReason.COMPLETED and tau < tau_end:
        seg_end = min(tau + chunk, tau_end, retry_end)
        seg_mode, seg_chart = mode, chart
        failures: list[float] = []

        def rhs(_t: float, z: FloatArray, seg_mode: AngleMode = seg_mode, seg_chart: Chart = seg_chart) -> FloatArray:
            xv = ref + z
            momenta = xv[lay.momenta]
            sigma = xv[lay.sigma]
            q = shape_norm(ms, sigma) ** 2
            if seg_mode == "regularized":
                u, v, _ = xv[lay.angles]
                dang = q * (w_matrix(ms, sigma, u, v, seg_chart, floors=floors) @ momenta)
            else:
                phi, theta, psi = xv[lay.angles]
                triple = EulerTriple(phi=phi, theta=theta, psi=psi)
                dang = q * (euler_matrix(ms, sigma, triple, floors=floors) @ momenta)
            return np.concatenate([phys_field(xv), dang, [xv[1], np.linalg.norm(momenta)]])

        handlers: list[str] = []
        funcs: list[Callable] = []

        def add(kind: str, func: Callable[[float, FloatArray], float], *, terminal: bool, direction: float) -> None:
            handlers.append(kind)
            funcs.append(_event(_guarded(func, failures), terminal=terminal, direction=direction))

        if seg_mode == "regularized":
            add(
                "seam_enter",
                lambda _t, z: 1.0 - (ref + z)[lay.angles][0] ** 2 - (ref + z)[lay.angles][1] ** 2 - band,
                terminal=True,
                direction=-1,
            )
            if seg_chart is Chart.LOWER:
                add(
                    "chart_domain",
                    lambda _t, z: (ref + z)[lay.angles][0] ** 2 + (ref + z)[lay.angles][1] ** 2 - floors.chart_origin,
                    terminal=True,
                    direction=-1,
                )
        else:
            add(
                "seam_exit",
                lambda _t, z: math.cos((ref + z)[lay.angles][1]) ** 2 - 2.0 * band,
                terminal=True,
                direction=1,
            )
        if n >= 3:  # noqa: PLR2004
            add("sigma_floor", lambda _t, z: abs((ref + z)[sig2]) - floors.division, terminal=True, direction=-1)
        add(
            "equilibrium",
            lambda _t, z: float(np.linalg.norm(phys_field(ref + z))) - solver.equilibrium_eps,
            terminal=True,
            direction=-1,
        )
        if eq_vec is not None and neighborhood is not None:
            add(
                "neighborhood",
                lambda _t, z: float(np.linalg.norm((ref + z)[lay.physical] - eq_vec)) - neighborhood,
                terminal=False,
                direction=-1,
            )

        try:
            sol = solve_ivp(
                _guarded(rhs, failures),
                (tau, seg_end),
                x - ref,
                method=solver.method,
                rtol=solver.rtol,
                atol=solver.atol,
                max_step=solver.max_step,
                events=funcs,
                dense_output=t_eval is not None,
            )
        except _DOMAIN_ERRORS as exc:
            failed_at = failures[-1] if failures else tau
            if failed_at - tau > _RETRY_GAP * max(1.0, abs(tau)):
                # integrate up to halfway to the failing evaluation and try again from there
                retry_end = tau + 0.5 * (failed_at - tau)
                continue
            for exc_type, reason, kind in _FAILURES:
                if isinstance(exc, exc_type):
                    termination = reason
                    events.append(Event(kind=kind, tau=tau, detail=str(exc)))
                    break
            logger.info("Blow-up run stopped at tau=%.6g: %s", tau, exc)
            break
        retry_end = math.inf
        if sol.status < 0:
            raise StepFailureError(tau=float(sol.t[-1]) if sol.t.size else tau, solver_message=sol.message)

        last = taus[-1] if taus else -math.inf
        if t_eval is None:
            mask = sol.t > last
            for t, z in zip(sol.t[mask], sol.y.T[mask], strict=True):
                record(float(t), ref + z)
        else:
            inside = t_eval[(t_eval > last) & (t_eval >= tau) & (t_eval <= sol.t[-1])]
            if inside.size:
                for t, z in zip(inside, sol.sol(inside).T, strict=True):
                    record(float(t), ref + z)

        fired = None
        for kind, times in zip(handlers, sol.t_events, strict=True):
            if kind == "neighborhood":
                events.extend(Event(kind=kind, tau=float(t)) for t in times)
            elif times.size and sol.status == 1:
                fired = kind
        tau = float(sol.t[-1])
        x = ref + sol.y[:, -1]

        if fired == "seam_enter":
            x[lay.angles] = _to_euler(*x[lay.angles], chart)
            mode = "euler"
            events.append(Event(kind="seam_enter", tau=tau, detail=chart.value))
            logger.debug("Angle block switched to Euler angles at tau=%.6g", tau)
        elif fired == "seam_exit":
            x[lay.angles], chart = _to_regularized(*x[lay.angles])
            mode = "regularized"
            events.append(Event(kind="seam_exit", tau=tau, detail=chart.value))
            logger.debug("Angle block back on the %s chart at tau=%.6g", chart.value, tau)
        elif fired is not None:
            termination = {
                "equilibrium": TerminationReason.EQUILIBRIUM,
                "sigma_floor": TerminationReason.SIGMA_FLOOR,
                "chart_domain": TerminationReason.CHART_DOMAIN,
            }[fired]
            events.append(Event(kind=fired, tau=tau))

    if termination is not TerminationReason.COMPLETED:
        logger.info("Blow-up run ended at tau=%.6g (%s)", tau, termination.value)
    return _trajectory(ms, lay, taus, states, charts, events, termination, floors)


def _trajectory(
    ms: MassSystem,
    lay: _Layout,
    taus: list[float],
    states: list[FloatArray],
    charts: list[Chart],
    events: list[Event],
    termination: TerminationReason,
    floors: Floors,
) -> Trajectory:
    xs = np.array(states).reshape(len(states), lay.size)
    momenta = xs[:, lay.momenta]
    sigma = xs[:, lay.sigma]
    kinetic = np.array([shape_kinetic(ms, s, g, floors=floors) for s, g in zip(momenta, sigma, strict=True)])
    potential = np.array([shape_potential(ms, g, floors=floors) for g in sigma])
    inv_sigma, sigma_ratio = sigma_diagnostics(ms.n, sigma) if len(xs) else (np.empty(0), np.empty(0))
    return Trajectory(
        tau=np.asarray(taus, dtype=float),
        rho=xs[:, 0],
        radial=xs[:, 1],
        momenta=momenta,
        sigma=sigma,
        w=xs[:, lay.angles],
        charts=tuple(charts),
        kinetic=kinetic,
        potential=potential,
        energy=0.5 * xs[:, 1] ** 2 + kinetic - potential,
        radial_integral=xs[:, -2],
        momentum_integral=xs[:, -1],
        inv_sigma=inv_sigma,
        sigma_ratio=sigma_ratio,
        events=tuple(events),
        termination=termination,
    )


def concatenate(trajectories: Sequence[Trajectory]) -> Trajectory:
    """Join consecutive trajectories, dropping a repeated junction node."""
    parts = [t for t in trajectories if len(t)]
    if not parts:
        return trajectories[0]
    keep = [np.ones(len(parts[0]), dtype=bool)]
    for prev, cur in zip(parts, parts[1:], strict=False):
        mask = np.ones(len(cur), dtype=bool)
        mask[0] = cur.tau[0] > prev.tau[-1]
        keep.append(mask)

    def join(name: str) -> FloatArray:
        return np.concatenate([getattr(t, name)[m] for t, m in zip(parts, keep, strict=True)])

    return Trajectory(
        tau=join("tau"),
        rho=join("rho"),
        radial=join("radial"),
        momenta=join("momenta"),
        sigma=join("sigma"),
        w=join("w"),
        charts=tuple(c for t, m in zip(parts, keep, strict=True) for c, k in zip(t.charts, m, strict=True) if k),
        kinetic=join("kinetic"),
        potential=join("potential"),
        energy=join("energy"),
        radial_integral=join("radial_integral"),
        momentum_integral=join("momentum_integral"),
        inv_sigma=join("inv_sigma"),
        sigma_ratio=join("sigma_ratio"),
        events=tuple(e for t in parts for e in t.events),
        termination=parts[-1].termination,
    )


def physical_time(traj: Trajectory) -> FloatArray:
    """Physical time ``t(tau) = int rho^(3/2) dtau`` at every node, starting from 0."""
    weights = np.asarray(traj.rho, dtype=float) ** 1.5
    if len(traj.tau) < 3:  # noqa: PLR2004
        return cumulative_trapezoid(weights, x=traj.tau, initial=0.0)
    return cumulative_simpson(weights, x=traj.tau, initial=0.0)


def restricted_center_flow(
    ms: MassSystem,
    w: FloatArray,
    s: FloatArray,
    center: CenterCoordinates,
    *,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> tuple[FloatArray, FloatArray]:
    """Flow on ``{rho = 0, E = 0}`` in the coordinates ``sigma = sigma* + M s``, ``S~ = M^-T w``.

    With ``M = alpha C`` and ``R~ = -sqrt(2 (V - T))`` eliminated:

        w' = M^T (dV/dsigma - dT/dsigma) + (w / 2) sqrt(2 (V - T))
        s' = M^-1 A(sigma) S~

    Raises:
        SquareRootDomainError: If ``2 (V - T) <= 0``.
    """
    mat = np.asarray(center.transform, dtype=float)
    w = np.asarray(w, dtype=float)
    sigma = np.asarray(center.sigma_star, dtype=float) + mat @ np.asarray(s, dtype=float)
    momenta = np.linalg.solve(mat.T, w)
    kin, pot, a_mat, d_kin, d_pot = _shape_terms(ms, momenta, sigma, solver, floors)
    radicand = 2.0 * (pot - kin)
    if radicand <= 0:
        raise SquareRootDomainError(value=radicand, quantity="2 (V - T)")
    w_dot = mat.T @ (d_pot - d_kin) + 0.5 * w * math.sqrt(radicand)
    s_dot = np.linalg.solve(mat, a_mat @ momenta)
    return w_dot, s_dot


def integrate_restricted(
    ms: MassSystem,
    center: CenterCoordinates,
    w0: FloatArray,
    s0: FloatArray,
    tau_span: tuple[float, float],
    tol: float | None = None,
    *,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> RestrictedTrajectory:
    """Integrate :func:`restricted_center_flow`.

    The run stops at ``tau_span[1]``, when the field norm drops below
    ``equilibrium_eps`` or when ``2 (V - T)`` reaches zero. The last case ends the branch
    ``R~ = -sqrt(2 (V - T))`` and is reported as ``energy_level``, with the nodes up to it kept.

    Raises:
        StepFailureError: If the integrator cannot continue.
        SquareRootDomainError: If the initial point already violates ``V > T``.
    """
    solver = with_tolerance(solver, tol)
    d = np.asarray(w0).size
    mat = np.asarray(center.transform, dtype=float)

    def rhs(_t: float, z: FloatArray) -> FloatArray:
        w_dot, s_dot = restricted_center_flow(ms, z[:d], z[d:], center, solver=solver, floors=floors)
        return np.concatenate([w_dot, s_dot])

    def point(z: FloatArray) -> tuple[FloatArray, FloatArray]:
        return np.linalg.solve(mat.T, z[:d]), np.asarray(center.sigma_star) + mat @ z[d:]

    def radicand(_t: float, z: FloatArray) -> float:
        momenta, sigma = point(z)
        return shape_potential(ms, sigma, floors=floors) - shape_kinetic(ms, momenta, sigma, floors=floors)

    def resting(t: float, z: FloatArray) -> float:
        return float(np.linalg.norm(rhs(t, z))) - solver.equilibrium_eps

    z0 = np.concatenate([np.asarray(w0, dtype=float), np.asarray(s0, dtype=float)])
    rhs(tau_span[0], z0)
    failures: list[float] = []
    tau, tau_end, z = float(tau_span[0]), float(tau_span[1]), z0
    taus, rows = [tau], [z0]
    limit = tau_end
    termination = TerminationReason.COMPLETED
    while tau < tau_end:
        failures.clear()
        try:
            sol = solve_ivp(
                _guarded(rhs, failures, _RADICAND_ERRORS),
                (tau, limit),
                z,
                method=solver.method,
                rtol=solver.rtol,
                atol=solver.atol,
                max_step=solver.max_step,
                events=[
                    _event(_guarded(radicand, failures, _RADICAND_ERRORS), terminal=True, direction=-1),
                    _event(_guarded(resting, failures, _RADICAND_ERRORS), terminal=True, direction=-1),
                ],
            )
        except _RADICAND_ERRORS:
            failed_at = failures[-1] if failures else tau
            if failed_at - tau > _RETRY_GAP * max(1.0, abs(tau)):
                limit = tau + 0.5 * (failed_at - tau)
                continue
            termination = TerminationReason.ENERGY_LEVEL
            break
        if sol.status < 0:
            raise StepFailureError(tau=float(sol.t[-1]) if sol.t.size else tau, solver_message=sol.message)
        taus.extend(sol.t[1:])
        rows.extend(sol.y.T[1:])
        tau, z = float(sol.t[-1]), sol.y[:, -1]
        if sol.t_events[0].size:
            termination = TerminationReason.ENERGY_LEVEL
            break
        if sol.t_events[1].size:
            termination = TerminationReason.EQUILIBRIUM
            break
        limit = tau_end
    if termination is TerminationReason.ENERGY_LEVEL:
        logger.info("Restricted run reached V = T at tau=%.6g", tau)
    zs = np.array(rows)
    kinetic, potential = [], []
    for z in zs:
        momenta, sigma = point(z)
        kinetic.append(shape_kinetic(ms, momenta, sigma, floors=floors))
        potential.append(shape_potential(ms, sigma, floors=floors))
    return RestrictedTrajectory(
        tau=np.asarray(taus, dtype=float),
        w=zs[:, :d],
        s=zs[:, d:],
        potential=np.asarray(potential),
        kinetic=np.asarray(kinetic),
        termination=termination,
    )
