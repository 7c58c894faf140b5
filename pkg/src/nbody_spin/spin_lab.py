"""Spin experiments near a total collision.

An experiment seeds the blown-up flow at or near a collision-manifold
equilibrium, integrates it, and measures what controls the rotation of the
moving frame: the integral of ``|S~|`` over dyadic windows
``[2^k T, 2^(k+1) T]``, the operator norm ``K`` of ``S~ -> w'`` and the
resulting tail bound ``K int |S~|`` on the oscillation of
``w = (u, v, alpha)``. It also reports the non-collinearity ratios, the
energy relation ``E(tau) = E(0) exp(int R~)`` and the decay of
``W = V - T - V(sigma*)``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import TYPE_CHECKING

import msgspec
import numpy as np

from nbody_spin.collision_chart import (
    deregularize,
    shape_kinetic,
    shape_merge,
    shape_norm,
    shape_potential,
    shape_potential_excess,
    w_matrix,
)
from nbody_spin.config import (
    DEFAULT_EXPERIMENT,
    DEFAULT_FLOORS,
    DEFAULT_SOLVER,
    ExperimentDefaults,
    Floors,
    SolverConfig,
)
from nbody_spin.equilibria import center_coordinates, eigenvalue_pair, equilibrium_state, find_central_config
from nbody_spin.exceptions import (
    ConfigurationError,
    InsufficientTailError,
    NoStableModeError,
    NumericalDomainError,
    SquareRootDomainError,
)
from nbody_spin.jacobi import from_jacobi
from nbody_spin.mcgehee_flow import blow_down, concatenate, integrate_blowup
from nbody_spin.nbody_core import angular_momentum_cartesian
from nbody_spin.numerics import atomic_write
from nbody_spin.so3_reduction import reconstruct
from nbody_spin.types import (
    BlowupState,
    CartesianState,
    Chart,
    DescentFit,
    DyadicWindow,
    EquilibriumReport,
    Event,
    ExperimentConfig,
    FitModel,
    JacobiState,
    MassSystem,
    Recipe,
    ReducedState,
    SpinReport,
    TerminationReason,
    Trajectory,
)

if TYPE_CHECKING:
    import os

    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]

__all__ = [
    # Initial data
    "seed_homothetic",
    "seed_stable_direction",
    "seed_center_direction",
    # Runs
    "stabilized_run",
    "run_experiment",
    # Diagnostics
    "summarize",
    "dyadic_windows",
    "descent_diagnostic",
    "physical_state",
    "collinearity_ratios",
    # Output
    "write_trajectory_csv",
    "write_report",
]

logger = logging.getLogger(__name__)


def _on_energy_zero(
    ms: MassSystem,
    momenta: FloatArray,
    sigma: FloatArray,
    floors: Floors,
) -> float:
    """Radial momentum ``-sqrt(2 (V - T))`` placing ``(S~, sigma)`` on ``E = 0``."""
    radicand = 2.0 * (shape_potential(ms, sigma, floors=floors) - shape_kinetic(ms, momenta, sigma, floors=floors))
    if radicand <= 0:
        raise SquareRootDomainError(value=radicand, quantity="2 (V - T)")
    return -math.sqrt(radicand)


def seed_homothetic(
    report: EquilibriumReport,
    rho0: float,
    w0: tuple[float, float, float] = (0.5, 0.0, 0.0),
    chart: Chart = Chart.UPPER,
) -> BlowupState:
    """Homothetic total collision ``(rho0, R~*, 0, sigma*)`` with a fixed angle triple.

    Raises:
        ConfigurationError: If ``rho0`` is not positive.
    """
    if rho0 <= 0:
        raise ConfigurationError("the homothetic seed needs rho0 > 0", detail=rho0)
    return BlowupState(
        rho=float(rho0),
        radial=report.r_star,
        momenta=np.zeros(report.dimension),
        sigma=report.sigma.copy(),
        u=w0[0],
        v=w0[1],
        alpha=w0[2],
        chart=chart,
    )


def _stable_modes(report: EquilibriumReport) -> list[int]:
    """Indices ``j`` with ``c_j > 0`` beyond the zero threshold: ``lambda-_j < 0``."""
    return [j for j, lam in enumerate(report.spectrum.lambda_minus_re) if lam < 0]


def _center_modes(report: EquilibriumReport) -> list[int]:
    spectrum = report.spectrum
    return [
        j
        for j, (lam, im) in enumerate(zip(spectrum.lambda_minus_re, spectrum.lambda_minus_im, strict=True))
        if lam == 0 and im == 0
    ]


def _seed_along(
    ms: MassSystem,
    report: EquilibriumReport,
    s: FloatArray,
    w: FloatArray,
    rho: float,
    w0: tuple[float, float, float],
    chart: Chart,
    floors: Floors,
) -> BlowupState:
    center = center_coordinates(report)
    sigma = report.sigma + center.transform @ s
    momenta = np.linalg.solve(center.transform.T, w)
    return BlowupState(
        rho=float(rho),
        radial=_on_energy_zero(ms, momenta, sigma, floors),
        momenta=momenta,
        sigma=sigma,
        u=w0[0],
        v=w0[1],
        alpha=w0[2],
        chart=chart,
    )


def seed_stable_direction(
    report: EquilibriumReport,
    epsilon: float,
    mode_index: int,
    rho: float = 0.0,
    w0: tuple[float, float, float] = (0.5, 0.0, 0.0),
    chart: Chart = Chart.UPPER,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> BlowupState:
    """Equilibrium displaced by ``epsilon`` along the stable eigenvector of one mode.

    In the diagonal coordinates the displacement is ``s = epsilon e_j`` and
    ``w = epsilon lambda-_j e_j``; ``R~`` is then chosen so that ``E = 0``.

    Raises:
        NoStableModeError: If mode ``mode_index`` has no eigenvalue with negative real part.
        SquareRootDomainError: If the displaced point has ``V <= T``.
    """
    stable = _stable_modes(report)
    if mode_index not in stable:
        raise NoStableModeError(mode_index=mode_index, available=len(stable), detail={"stable_modes": stable})
    ms = MassSystem(masses=tuple(report.masses))
    e_j = np.zeros(report.dimension)
    e_j[mode_index] = 1.0
    lam = report.spectrum.lambda_minus_re[mode_index]
    return _seed_along(ms, report, epsilon * e_j, epsilon * lam * e_j, rho, w0, chart, floors)


def seed_center_direction(
    report: EquilibriumReport,
    epsilon: float,
    kernel_index: int = 0,
    rho: float = 0.0,
    w0: tuple[float, float, float] = (0.5, 0.0, 0.0),
    chart: Chart = Chart.UPPER,
    *,
    floors: Floors = DEFAULT_FLOORS,
) -> BlowupState:
    """Equilibrium displaced by ``epsilon`` along the ``kernel_index``-th kernel direction of ``D``.

    Raises:
        NoStableModeError: If ``D`` has fewer than ``kernel_index + 1`` zero entries.
    """
    kernel = _center_modes(report)
    if not 0 <= kernel_index < len(kernel):
        raise NoStableModeError(mode_index=kernel_index, available=len(kernel), detail="no such center direction")
    ms = MassSystem(masses=tuple(report.masses))
    s = np.zeros(report.dimension)
    s[kernel[kernel_index]] = epsilon
    return _seed_along(ms, report, s, np.zeros(report.dimension), rho, w0, chart, floors)


def _project(
    ms: MassSystem,
    report: EquilibriumReport,
    bs: BlowupState,
    floors: Floors,
) -> tuple[BlowupState, float]:
    """Remove the linear unstable components of a collision-manifold state and restore ``E = 0``."""
    center = center_coordinates(report)
    mat = center.transform
    s = np.linalg.solve(mat, np.asarray(bs.sigma) - report.sigma)
    w = mat.T @ np.asarray(bs.momenta)
    s_new, w_new = s.copy(), w.copy()
    for j, c in enumerate(report.D):
        zero = report.spectrum.lambda_minus_re[j] == 0 and report.spectrum.lambda_minus_im[j] == 0
        if c >= 0 or zero:
            lam_p, lam_m, _ = eigenvalue_pair(report.r_star, 0.0 if zero else c)
            amp = (w[j] - lam_m.real * s[j]) / (lam_p.real - lam_m.real)
            s_new[j] -= amp
            w_new[j] -= lam_p.real * amp
        else:
            s_new[j] = 0.0
            w_new[j] = 0.0
    sigma = report.sigma + mat @ s_new
    momenta = np.linalg.solve(mat.T, w_new)
    radial = _on_energy_zero(ms, momenta, sigma, floors)
    defect = float(np.linalg.norm(np.concatenate([s - s_new, w - w_new, [radial - bs.radial]])))
    return _with_fields(bs, radial=radial, momenta=momenta, sigma=sigma), defect


def _with_fields(bs: BlowupState, **changes: object) -> BlowupState:
    """Copy of ``bs`` with some fields replaced."""
    return msgspec.structs.replace(bs, **changes)


def stabilized_run(
    ms: MassSystem,
    report: EquilibriumReport,
    bs0: BlowupState,
    tau_max: float,
    *,
    segment: float = DEFAULT_EXPERIMENT.segment,
    neighborhood: float | None = DEFAULT_EXPERIMENT.neighborhood,
    solver: SolverConfig = DEFAULT_SOLVER,
    floors: Floors = DEFAULT_FLOORS,
) -> tuple[Trajectory, float]:
    """Follow the stable manifold of a collision-manifold equilibrium by segments.

    After every segment of length ``segment`` the linear unstable components
    are removed and ``R~`` is reset so that ``E = 0``. Off the collision
    manifold the run is a plain :func:`integrate_blowup`.

    Returns:
        The joined trajectory and the summed size of the projections.
    """
    eq_state = equilibrium_state(report)
    if bs0.rho != 0:
        traj = integrate_blowup(
            ms,
            bs0,
            (0.0, tau_max),
            reference=eq_state,
            equilibrium=eq_state,
            neighborhood=neighborhood,
            solver=solver,
            floors=floors,
        )
        return traj, 0.0
    parts: list[Trajectory] = []
    defect = 0.0
    tau = 0.0
    state = bs0
    quadratures = (0.0, 0.0)
    while tau < tau_max:
        end = min(tau + segment, tau_max)
        part = integrate_blowup(
            ms,
            state,
            (tau, end),
            reference=eq_state,
            equilibrium=eq_state,
            neighborhood=neighborhood,
            quadratures=quadratures,
            chunk=segment,
            solver=solver,
            floors=floors,
        )
        parts.append(part)
        tau = float(part.tau[-1])
        if part.termination is not TerminationReason.COMPLETED:
            break
        state, step_defect = _project(ms, report, part.final, floors)
        defect += step_defect
        quadratures = (float(part.radial_integral[-1]), float(part.momentum_integral[-1]))
        parts[-1] = _with_event(part, Event(kind="projection", tau=tau, detail=f"{step_defect:.3e}"))
        logger.debug("Projection at tau=%.4g removed %.3e", tau, step_defect)
    return concatenate(parts), defect


def _with_event(traj: Trajectory, event: Event) -> Trajectory:
    """Copy of ``traj`` with one more event."""
    return msgspec.structs.replace(traj, events=(*traj.events, event))


def physical_state(ms: MassSystem, bs: BlowupState, *, floors: Floors = DEFAULT_FLOORS) -> CartesianState:
    """Cartesian state of a blown-up state with ``rho > 0``, zero angular momentum and fixed barycenter.

    Raises:
        DivisionDegenerateError: If ``rho`` or a frame divisor is below its floor.
        ChartDomainError: If ``(u, v)`` is at the origin or on the unit circle.
        GimbalDegenerateError: If ``sin(theta)`` is below the floor.
    """
    ss, ra = blow_down(bs, floors=floors)
    eta, xi = shape_merge(ms, ss, floors=floors)
    phi_mom, theta_mom, psi_mom, angles = deregularize(ra, floors=floors)
    rs = ReducedState(Phi=phi_mom, Theta=theta_mom, Psi=psi_mom, eta=eta, angles=angles, xi=xi)
    y, x = reconstruct(ms, rs, floors=floors)
    return from_jacobi(ms, JacobiState(P=np.zeros(3), B=np.zeros(3), y=y, x=x))


def collinearity_ratios(x: FloatArray) -> tuple[float, float]:
    """``|x_n . x_(n-1)| / |x_n x x_(n-1)|`` and ``|x_n|^2 / |x_n x x_(n-1)|`` of Jacobi vectors ``x``.

    In the moving frame they equal ``|sigma_(n-1,3) / sigma_(n-1,2)|`` and ``|1 / sigma_(n-1,2)|``.
    """
    x = np.asarray(x, dtype=float)
    last, prev = x[-1], x[-2]
    cross = float(np.linalg.norm(np.cross(last, prev)))
    if cross == 0:
        return math.inf, math.inf
    return abs(float(last @ prev)) / cross, float(last @ last) / cross


def dyadic_windows(traj: Trajectory, base: float) -> list[DyadicWindow]:
    """Integrals of ``|S~|`` over ``[2^k T, 2^(k+1) T]`` for every window starting inside the run."""
    tau_final = float(traj.tau[-1])
    windows = []
    k = 0
    while base * 2**k < tau_final:
        start, end = base * 2**k, base * 2 ** (k + 1)
        lo, hi = np.interp([start, min(end, tau_final)], traj.tau, traj.momentum_integral)
        windows.append(DyadicWindow(k=k, start=start, end=end, integral=float(hi - lo), complete=end <= tau_final))
        k += 1
    return windows


def _distance_to(traj: Trajectory, report: EquilibriumReport) -> FloatArray:
    return np.sqrt(
        (traj.radial - report.r_star) ** 2
        + np.sum(traj.momenta**2, axis=1)
        + np.sum((traj.sigma - report.sigma) ** 2, axis=1)
    )


def _dyadic_base(traj: Trajectory, report: EquilibriumReport, neighborhood: float, floor: float) -> float:
    if _distance_to(traj, report)[0] < neighborhood:
        entered = float(traj.tau[0])
    else:
        entered = next((e.tau for e in traj.events if e.kind == "neighborhood"), floor)
    return max(entered, floor)


def _k_bound(ms: MassSystem, traj: Trajectory, floors: Floors) -> float:
    """``sup |N^2 W|_2`` over the nodes."""
    best = 0.0
    for i in range(len(traj)):
        sigma = traj.sigma[i]
        u, v, _ = traj.w[i]
        try:
            mat = w_matrix(ms, sigma, u, v, traj.charts[i], floors=floors)
        except NumericalDomainError:
            return math.inf
        best = max(best, shape_norm(ms, sigma) ** 2 * float(np.linalg.norm(mat, ord=2)))
    return best


def descent_diagnostic(
    traj: Trajectory,
    report: EquilibriumReport,
    *,
    model: FitModel | None = None,
    neighborhood: float = DEFAULT_EXPERIMENT.neighborhood,
    min_samples: int = 5,
    relative_floor: float = DEFAULT_EXPERIMENT.descent_floor,
    resolution: float = DEFAULT_EXPERIMENT.descent_resolution,
    tolerance: float | None = None,
    floors: Floors = DEFAULT_FLOORS,
) -> DescentFit:
    """Fit the decay of ``W = V - T - V(sigma*)`` on the part of the run near the equilibrium.

    ``V - V(sigma*)`` comes from :func:`~nbody_spin.collision_chart.shape_potential_excess`, so
    ``W`` keeps its relative accuracy long after it drops below the rounding error of ``V(sigma*)``.

    Args:
        traj: The trajectory.
        report: The equilibrium it approaches.
        model: ``exponential`` or ``power``; exponential for hyperbolic equilibria by default.
        neighborhood: Distance to the equilibrium that defines the tail.
        min_samples: Fewest tail samples accepted.
        relative_floor: Noise level of ``W`` as a fraction of its largest tail value.
        resolution: Smallest largest-tail ``W`` worth fitting.
        tolerance: Absolute noise level; overrides ``relative_floor`` and ``resolution``.
        floors: Numerical floors.

    Returns:
        The fit, with the count of increases of ``W`` above the tolerance.

    Raises:
        InsufficientTailError: If fewer than ``min_samples`` tail nodes have ``W`` above the tolerance.
    """
    model = model or ("exponential" if report.center_dim == 0 else "power")
    near = _distance_to(traj, report) < neighborhood
    if not np.any(near):
        raise InsufficientTailError(samples=0, required=min_samples, detail="the run never enters the neighborhood")
    first = int(np.argmax(near))
    tau = traj.tau[first:]
    ms = MassSystem(masses=tuple(report.masses))
    excess = [shape_potential_excess(ms, sigma, report.sigma, floors=floors) for sigma in traj.sigma[first:]]
    w_values = np.asarray(excess) - traj.kinetic[first:]
    peak = float(np.max(w_values))
    if tolerance is None:
        if peak <= resolution:
            raise InsufficientTailError(
                samples=0, required=min_samples, detail=f"largest tail W {peak:.3e} is below {resolution:.1e}"
            )
        tolerance = relative_floor * peak
    usable = w_values > tolerance
    if np.count_nonzero(usable) < min_samples:
        raise InsufficientTailError(samples=int(np.count_nonzero(usable)), required=min_samples)
    violations = int(np.count_nonzero(np.diff(w_values) > tolerance))
    log_w = np.log(w_values[usable])
    if model == "exponential":
        slope, intercept = np.polyfit(tau[usable], log_w, 1)
        rate, exponent = -float(slope), 0.0
    else:
        slope, intercept = np.polyfit(np.log(tau[usable] - tau[0] + 1.0), log_w, 1)
        rate, exponent = 0.0, -float(slope)
    return DescentFit(
        model=model,
        rate=rate,
        exponent=exponent,
        prefactor=float(np.exp(intercept)),
        samples=int(np.count_nonzero(usable)),
        monotonicity_violations=violations,
        min_w=float(np.min(w_values)),
        tolerance=tolerance,
    )


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def summarize(
    ms: MassSystem,
    report: EquilibriumReport,
    traj: Trajectory,
    recipe: Recipe,
    *,
    epsilon: float = DEFAULT_EXPERIMENT.convergence_epsilon,
    projection_defect: float = 0.0,
    solver_tolerance: float = DEFAULT_SOLVER.rtol,
    defaults: ExperimentDefaults = DEFAULT_EXPERIMENT,
    floors: Floors = DEFAULT_FLOORS,
) -> SpinReport:
    """Compute the diagnostics of a finished run."""
    tau_final = float(traj.tau[-1])
    base = _dyadic_base(traj, report, defaults.neighborhood, defaults.dyadic_floor)
    windows = dyadic_windows(traj, base)
    k_bound = _k_bound(ms, traj, floors)

    tail_start = min(base * 2**defaults.tail_window, tau_final)
    tail_integral = float(traj.momentum_integral[-1] - np.interp(tail_start, traj.tau, traj.momentum_integral))
    end_speed = float(np.linalg.norm(traj.momenta[-1]))
    stable_rates = [-lam for lam in report.spectrum.lambda_minus_re if lam < 0]
    if end_speed == 0:
        remainder = 0.0
    elif stable_rates:
        remainder = end_speed / min(stable_rates)
    else:
        remainder = math.inf
    tail_bound = k_bound * (tail_integral + remainder) if k_bound < math.inf else math.inf

    w_end = traj.w[-1]
    tail_nodes = traj.tau >= tail_start
    cauchy_tail = float(np.max(np.linalg.norm(traj.w[tail_nodes] - w_end, axis=1))) if np.any(tail_nodes) else 0.0

    e0 = float(traj.energy[0])
    predicted = e0 * np.exp(traj.radial_integral - traj.radial_integral[0])
    energy_check = float(np.max(np.abs(traj.energy - predicted))) / max(abs(e0), report.potential)

    on_collision = traj.rho[0] == 0
    descent, descent_note = None, None
    try:
        descent = descent_diagnostic(
            traj,
            report,
            neighborhood=defaults.neighborhood,
            relative_floor=defaults.descent_floor,
            resolution=defaults.descent_resolution,
            floors=floors,
        )
    except NumericalDomainError as exc:
        logger.debug("No descent fit: %s", exc)
        descent_note = str(exc)

    return SpinReport(
        recipe=recipe,
        masses=list(ms.masses),
        sigma_star=list(report.sigma_star),
        r_star=report.r_star,
        tau_final=tau_final,
        termination=traj.termination,
        w_initial=traj.w[0].tolist(),
        w_limit=w_end.tolist(),
        cauchy_tail=cauchy_tail,
        k_bound=k_bound,
        tail_bound=tail_bound,
        tail_start=tail_start,
        epsilon=epsilon,
        converged=tail_bound < epsilon,
        dyadic_base=base,
        windows=windows,
        momentum_integral=float(traj.momentum_integral[-1] - traj.momentum_integral[0]),
        inv_sigma_sup=_finite_or_none(float(np.max(traj.inv_sigma))),
        sigma_ratio_sup=_finite_or_none(float(np.max(traj.sigma_ratio))),
        energy_check=energy_check,
        rho_max_on_collision=float(np.max(np.abs(traj.rho))) if on_collision else None,
        projection_defect=projection_defect,
        angular_momentum_max=None if on_collision else _angular_momentum_max(ms, traj, floors),
        descent=descent,
        solver_tolerance=solver_tolerance,
        descent_note=descent_note,
    )


def _angular_momentum_max(ms: MassSystem, traj: Trajectory, floors: Floors, max_nodes: int = 200) -> float | None:
    """Largest Cartesian angular momentum over (a subsample of) the ``rho > 0`` nodes."""
    positive = np.flatnonzero(traj.rho > floors.normalization)
    if positive.size == 0:
        return None
    picks = positive[np.unique(np.linspace(0, positive.size - 1, min(max_nodes, positive.size)).astype(int))]
    best = None
    for i in picks:
        try:
            state = physical_state(ms, traj.state(int(i)), floors=floors)
        except NumericalDomainError:
            continue
        value = float(np.linalg.norm(angular_momentum_cartesian(state)))
        best = value if best is None else max(best, value)
    return best


def _initial_state(cfg: ExperimentConfig, report: EquilibriumReport, floors: Floors) -> BlowupState:
    if cfg.recipe is Recipe.HOMOTHETIC:
        return seed_homothetic(report, cfg.rho0, cfg.w0, cfg.chart)
    if cfg.recipe is Recipe.STABLE_SEED:
        return seed_stable_direction(report, cfg.epsilon, cfg.mode_index, cfg.rho0, cfg.w0, cfg.chart, floors=floors)
    if cfg.recipe is Recipe.CENTER_SEED:
        return seed_center_direction(report, cfg.epsilon, cfg.mode_index, cfg.rho0, cfg.w0, cfg.chart, floors=floors)
    flat = np.asarray(cfg.state, dtype=float)
    d = report.dimension
    return BlowupState(
        rho=float(flat[0]),
        radial=float(flat[1]),
        momenta=flat[2 : 2 + d],
        sigma=flat[2 + d :],
        u=cfg.w0[0],
        v=cfg.w0[1],
        alpha=cfg.w0[2],
        chart=cfg.chart,
    )


def run_experiment(
    cfg: ExperimentConfig,
    *,
    report: EquilibriumReport | None = None,
    solver: SolverConfig = DEFAULT_SOLVER,
    defaults: ExperimentDefaults = DEFAULT_EXPERIMENT,
    floors: Floors = DEFAULT_FLOORS,
) -> tuple[SpinReport, Trajectory]:
    """Seed, integrate and summarize one experiment.

    Args:
        cfg: The experiment.
        report: Equilibrium to seed at; found from ``cfg.sigma_guess`` when omitted.
        solver: Base integrator settings; tolerances and ``equilibrium_eps`` come from ``cfg``.
        defaults: Base experiment defaults; the ``cfg`` values override them.
        floors: Numerical floors.

    Returns:
        The report and the trajectory. Both are written to ``cfg.output`` when it is set.

    Raises:
        ConfigurationError: If no equilibrium is given and ``cfg.sigma_guess`` is empty.
        NoConvergenceError: If the equilibrium search fails.
        NoStableModeError: If a seeded recipe names an unusable mode.
    """
    ms = MassSystem(masses=cfg.masses)
    if report is None:
        if not cfg.sigma_guess:
            raise ConfigurationError("sigma_guess is required to locate the equilibrium")
        report = find_central_config(ms, cfg.sigma_guess, with_orbit_kernel=False, floors=floors)
    tol = min(cfg.tol, defaults.center_tolerance) if cfg.recipe is Recipe.CENTER_SEED else cfg.tol
    solver = replace(solver, rtol=tol, atol=tol, equilibrium_eps=cfg.equilibrium_eps)
    defaults = replace(
        defaults,
        neighborhood=cfg.neighborhood,
        dyadic_floor=cfg.dyadic_floor,
        tail_window=cfg.tail_window,
        segment=cfg.segment,
        convergence_epsilon=cfg.convergence_epsilon,
    )
    bs0 = _initial_state(cfg, report, floors)
    logger.info("Spin experiment %s on masses %s up to tau=%g", cfg.recipe.value, list(cfg.masses), cfg.tau_max)

    seeded = cfg.recipe in (Recipe.STABLE_SEED, Recipe.CENTER_SEED)
    if seeded and cfg.stabilize and bs0.rho == 0:
        traj, defect = stabilized_run(
            ms,
            report,
            bs0,
            cfg.tau_max,
            segment=cfg.segment,
            neighborhood=cfg.neighborhood,
            solver=solver,
            floors=floors,
        )
    else:
        eq_state = equilibrium_state(report)
        traj = integrate_blowup(
            ms,
            bs0,
            (0.0, cfg.tau_max),
            reference=eq_state,
            equilibrium=eq_state,
            neighborhood=cfg.neighborhood,
            solver=solver,
            floors=floors,
        )
        defect = 0.0

    summary = summarize(
        ms,
        report,
        traj,
        cfg.recipe,
        epsilon=cfg.convergence_epsilon,
        projection_defect=defect,
        solver_tolerance=tol,
        defaults=defaults,
        floors=floors,
    )
    if cfg.output:
        out = Path(cfg.output)
        write_report(out / "spin_report.json", summary)
        write_trajectory_csv(out / "trajectory.csv", traj)
    return summary, traj


def write_report(path: str | os.PathLike[str], report: object) -> Path:
    """Write a report, or a list of reports, as indented JSON, atomically."""
    return atomic_write(path, msgspec.json.format(msgspec.json.encode(report), indent=2) + b"\n")


def write_trajectory_csv(path: str | os.PathLike[str], traj: Trajectory) -> Path:
    """Write the per-node table of a trajectory, atomically, with 17 significant digits.

    Columns: ``tau, rho, radial, momentum_norm, sigma_1..sigma_d, u, v, alpha, chart,
    kinetic, potential, energy, energy_residual, inv_sigma_sup, sigma_ratio_sup``.
    ``energy_residual`` is ``E - E(0) exp(int R~)``; the two sups are running.
    """
    d = traj.sigma.shape[1]
    header = [
        "tau",
        "rho",
        "radial",
        "momentum_norm",
        *(f"sigma_{i + 1}" for i in range(d)),
        "u",
        "v",
        "alpha",
        "chart",
        "kinetic",
        "potential",
        "energy",
        "energy_residual",
        "inv_sigma_sup",
        "sigma_ratio_sup",
    ]
    residual = traj.energy - traj.energy[0] * np.exp(traj.radial_integral - traj.radial_integral[0])
    inv_sup = np.maximum.accumulate(traj.inv_sigma)
    ratio_sup = np.maximum.accumulate(traj.sigma_ratio)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for i in range(len(traj)):
        numbers = [
            traj.tau[i],
            traj.rho[i],
            traj.radial[i],
            float(np.linalg.norm(traj.momenta[i])),
            *traj.sigma[i],
            *traj.w[i],
        ]
        tail = [traj.kinetic[i], traj.potential[i], traj.energy[i], residual[i], inv_sup[i], ratio_sup[i]]
        writer.writerow(
            [format(float(x), ".17g") for x in numbers]
            + [traj.charts[i].value]
            + [format(float(x), ".17g") for x in tail]
        )
    return atomic_write(path, buffer.getvalue())
