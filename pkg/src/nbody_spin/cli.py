"""Command line: ``nbody-spin transform | find-cc | spin | verify``.

Every subcommand reads a scenario (``--scenario path`` or ``--preset name``),
writes its result files atomically under ``--out`` and prints a short
summary. Errors raised by the library map to the exit codes carried by the
exception classes: 2 for scenario and configuration problems, 3 for states
outside a chart and for failed verification checks, 4 for non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import TYPE_CHECKING

import msgspec
import numpy as np

from nbody_spin.__metadata__ import __project__, __version__
from nbody_spin.collision_chart import deregularize, hamiltonian_shape, regularize, shape_merge, shape_split
from nbody_spin.config import with_tolerance
from nbody_spin.equilibria import find_central_config, survey
from nbody_spin.exceptions import NBodySpinError, ScenarioError
from nbody_spin.jacobi import from_jacobi, hamiltonian_jacobi, to_jacobi
from nbody_spin.mcgehee_flow import blow_down, blow_up
from nbody_spin.nbody_core import hamiltonian_cartesian
from nbody_spin.scenario import PRESETS, Scenario, load_scenario, preset
from nbody_spin.so3_reduction import hamiltonian_so3, reconstruct, reduce
from nbody_spin.spin_lab import run_experiment, write_report
from nbody_spin.types import CartesianState, EquilibriumReport, MassSystem, TransformReport
from nbody_spin.verification import run_checks

if TYPE_CHECKING:
    from collections.abc import Sequence

__all__ = [
    "build_parser",
    "transform_state",
    "cmd_transform",
    "cmd_find_cc",
    "cmd_spin",
    "cmd_verify",
    "main",
]

logger = logging.getLogger(__name__)

_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _angle_gap(a: float, b: float) -> float:
    return abs((a - b + math.pi) % (2.0 * math.pi) - math.pi)


def transform_state(ms: MassSystem, s: CartesianState, tol: float = 1e-10) -> TransformReport:
    """Write one Cartesian state in every chart of the chain, with round-trip and energy residuals.

    Raises:
        FrameDegenerateError: If the last two Jacobi vectors are parallel.
        GimbalDegenerateError: If ``x_n`` is parallel to ``e3``.
        ChartSeamError: If ``theta`` is on the seam of the regularizing charts.
        ChartDomainError: If ``(u, v)`` is at the chart origin.
    """
    js = to_jacobi(ms, s)
    rs = reduce(ms, js.y, js.x)
    ss = shape_split(ms, rs.eta, rs.xi)
    ra = regularize(rs.Phi, rs.Theta, rs.Psi, rs.angles)
    bs = blow_up(ss, ra)

    back = from_jacobi(ms, js)
    y, x = reconstruct(ms, rs)
    eta, xi = shape_merge(ms, ss)
    phi_mom, theta_mom, psi_mom, angles = deregularize(ra)
    ss_back, _ = blow_down(bs)
    residuals = {
        "jacobi": float(max(np.max(np.abs(back.q - s.q)), np.max(np.abs(back.p - s.p)))),
        "reduction": float(max(np.max(np.abs(y - js.y)), np.max(np.abs(x - js.x)))),
        "shape": float(max(np.max(np.abs(eta - rs.eta)), np.max(np.abs(xi - rs.xi)))),
        "regularization": max(
            abs(phi_mom - rs.Phi),
            abs(theta_mom - rs.Theta),
            abs(psi_mom - rs.Psi),
            _angle_gap(angles.phi, rs.angles.phi),
            abs(angles.theta - rs.angles.theta),
            _angle_gap(angles.psi, rs.angles.psi),
        ),
        "blowup": float(
            max(
                abs(ss_back.rho - ss.rho),
                abs(ss_back.radial - ss.radial),
                np.max(np.abs(ss_back.momenta - ss.momenta)),
                np.max(np.abs(ss_back.sigma - ss.sigma)),
            )
        ),
    }
    drift = float(js.P @ js.P) / (2.0 * ms.total)
    hamiltonians = {
        "cartesian": hamiltonian_cartesian(ms, s),
        "jacobi": drift + hamiltonian_jacobi(ms, js.y, js.x),
        "so3": drift + hamiltonian_so3(ms, rs),
        "shape": drift + hamiltonian_shape(ms, ss, rs.Phi, rs.Theta, rs.Psi, rs.angles),
    }
    scale = max(abs(hamiltonians["cartesian"]), 1.0)
    residuals["energy"] = max(abs(h - hamiltonians["cartesian"]) for h in hamiltonians.values()) / scale
    charts = {
        "cartesian": {"q": np.ravel(s.q).tolist(), "p": np.ravel(s.p).tolist()},
        "jacobi": {"P": js.P.tolist(), "B": js.B.tolist(), "y": js.y.ravel().tolist(), "x": js.x.ravel().tolist()},
        "reduced": {
            "angular_momentum": [rs.Phi, rs.Theta, rs.Psi],
            "eta": rs.eta.tolist(),
            "angles": [rs.angles.phi, rs.angles.theta, rs.angles.psi],
            "xi": rs.xi.tolist(),
        },
        "shape": {"S": ss.momenta.tolist(), "R": [ss.radial], "sigma": ss.sigma.tolist(), "rho": [ss.rho]},
        "regularized": {
            "momenta": [ra.U, ra.V, ra.A],
            "angles": [ra.u, ra.v, ra.alpha],
            "chart": [float(ra.chart.sign)],
        },
        "blowup": {"rho": [bs.rho], "radial": [bs.radial], "momenta": bs.momenta.tolist(), "sigma": bs.sigma.tolist()},
    }
    return TransformReport(
        masses=list(ms.masses),
        charts=charts,
        hamiltonians=hamiltonians,
        residuals=residuals,
        tolerance=tol,
        passed=all(v < tol for v in residuals.values()),
    )


def cmd_transform(scenario: Scenario, out: Path | None, tol: float | None = None) -> int:
    """Dump the scenario's state in every chart."""
    report = transform_state(scenario.mass_system, scenario.cartesian_state(), tol or 1e-10)
    if out:
        write_report(out / "transform.json", report)
    for name, value in report.residuals.items():
        print(f"{name:<16} {value:.3e}")
    return 0


def _summary_line(report: EquilibriumReport) -> str:
    sigma = ", ".join(f"{v:.10f}" for v in report.sigma_star)
    return (
        f"sigma*=({sigma}) V={report.potential:.12g} |grad|={report.grad_norm:.2e} "
        f"{report.classification.value} center_dim={report.center_dim}"
    )


def cmd_find_cc(scenario: Scenario, out: Path | None, tol: float | None = None, seed: int | None = None) -> int:
    """Locate one central configuration, or survey them from random starts.

    ``tol`` replaces the gradient tolerance of every Newton run, single or surveyed.
    """
    section = scenario.find_cc
    if section is None:
        raise ScenarioError("this command needs a [find_cc] section", field="find_cc")
    ms = scenario.mass_system
    newton = scenario.newton_config()
    if tol is not None:
        newton = replace(newton, tol=tol)
    if section.samples > 0:
        rng = np.random.default_rng(scenario.seed if seed is None else seed)
        reports = survey(
            ms,
            section.samples,
            rng,
            workers=section.workers,
            cluster_tol=section.cluster_tol,
            newton=newton,
            zero_threshold=section.zero_threshold,
        )
    else:
        if not section.sigma_guess:
            raise ScenarioError("sigma_guess is required without samples", field="find_cc.sigma_guess")
        reports = [
            find_central_config(
                ms,
                section.sigma_guess,
                newton=newton,
                zero_threshold=section.zero_threshold,
                with_orbit_kernel=section.orbit_kernel,
            )
        ]
    if out:
        write_report(out / "equilibria.json", reports)
    for report in reports:
        print(_summary_line(report))
    return 0


def cmd_spin(scenario: Scenario, out: Path | None, tol: float | None = None) -> int:
    """Run the scenario's spin experiment."""
    cfg = scenario.experiment(output=str(out) if out else None)
    if tol is not None:
        cfg = msgspec.structs.replace(cfg, tol=tol)
    equilibrium = None
    if scenario.find_cc is not None and scenario.find_cc.sigma_guess:
        equilibrium = find_central_config(
            scenario.mass_system,
            scenario.find_cc.sigma_guess,
            newton=scenario.newton_config(),
            zero_threshold=scenario.find_cc.zero_threshold,
            with_orbit_kernel=False,
        )
    report, traj = run_experiment(cfg, report=equilibrium, solver=with_tolerance(scenario.solver_config(), tol))
    print(
        f"tau_final={report.tau_final:.6g} ({report.termination.value}) nodes={len(traj)}\n"
        f"w_limit={report.w_limit} tail_bound={report.tail_bound:.3e} converged={report.converged}\n"
        f"K={report.k_bound:.4g} energy_check={report.energy_check:.2e}"
    )
    return 0


def cmd_verify(out: Path | None, seed: int | None = None, samples: int = 100) -> int:
    """Run the invariant suite; exit 3 when a check fails."""
    results = run_checks(np.random.default_rng(0 if seed is None else seed), samples=samples)
    if out:
        write_report(out / "verify.json", results)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.value:.3e} <= {r.tolerance:.1e}  {r.detail}".rstrip())
    return 0 if all(r.passed for r in results) else 3


def build_parser() -> argparse.ArgumentParser:
    """Argument parser shared by every subcommand."""
    parser = argparse.ArgumentParser(prog=__project__, description="Collision coordinate chain and spin experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="scenario TOML file")
    common.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    common.add_argument("--out", type=Path, help="directory for result files")
    common.add_argument("--tol", type=float, help="override the integrator or Newton tolerance")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("transform", parents=[common], help="write a state in every chart")
    find_cc = sub.add_parser("find-cc", parents=[common], help="locate central configurations")
    find_cc.add_argument("--seed", type=int, help="seed of the survey starts")
    sub.add_parser("spin", parents=[common], help="run a spin experiment")
    verify = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    verify.add_argument("--samples", type=int, default=100, help="random points per sampled check")
    verify.add_argument("--seed", type=int, help="seed of the sampled states")
    return parser


def _scenario(args: argparse.Namespace) -> Scenario:
    if args.scenario and args.preset:
        raise ScenarioError("give either --scenario or --preset, not both")
    if args.scenario:
        return load_scenario(args.scenario)
    if args.preset:
        return preset(args.preset)
    raise ScenarioError("no scenario given; use --scenario or --preset")


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of ``nbody-spin``.

    Returns:
        The process exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=_LEVELS[min(args.verbose, len(_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "verify":
            return cmd_verify(args.out, args.seed, args.samples)
        scenario = _scenario(args)
        out = args.out or (Path(scenario.output) if scenario.output else None)
        if args.command == "transform":
            return cmd_transform(scenario, out, args.tol)
        if args.command == "find-cc":
            return cmd_find_cc(scenario, out, args.tol, args.seed)
        return cmd_spin(scenario, out, args.tol)
    except NBodySpinError as exc:
        logger.error("%s failed: %s", args.command, exc)  # noqa: TRY400
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
