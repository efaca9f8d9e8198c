"""Command line front end.

Four modes: `simulate` rolls out the variational integrator under a given
(or zero) control history; `optimize` runs the shooting solve; `validate`
executes the numerical self-check battery; `compare` runs the variational
integrator and unprojected RK4 side by side on the free body.

Exit codes: 0 success/converged, 1 not converged (or failed checks),
2 input error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import validation
from .dynamics import BodyState, kinetic_energy, rollout, spatial_momentum
from .problem import ManeuverProblem, ParseError, ValidationError, load_problem
from .shooting import NotConvergedError, solve
from .trajectory_io import (
    write_extremal_csv,
    write_json,
    write_report_json,
    write_trajectory_csv,
)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_INPUT_ERROR = 2


def _load(args) -> ManeuverProblem:
    problem = load_problem(args.config)
    overrides = {}
    if getattr(args, "steps", None) is not None:
        overrides["steps"] = args.steps
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "tol", None) is not None:
        overrides["tolerance"] = args.tol
    return replace(problem, **overrides) if overrides else problem


def _read_controls(path, n_steps: int) -> list[np.ndarray]:
    rows = []
    with open(path, newline="") as fh:
        for line in csv.reader(fh):
            if not line or line[0].strip().startswith("#"):
                continue
            if len(line) != 3:
                raise ValidationError(f"{path}: control rows need 3 columns, got {len(line)}")
            rows.append(np.array([float(x) for x in line]))
    if len(rows) != n_steps:
        raise ValidationError(
            f"{path}: control file has {len(rows)} rows, problem needs {n_steps}"
        )
    return rows


def run_simulate(problem: ManeuverProblem, controls, out_dir: Path) -> int:
    """Roll out the control sequence and write the trajectory plus a
    conservation summary (momentum/energy/orthogonality drift)."""
    traj = rollout(problem.initial_state, controls, problem.inertia, problem.h_initial)
    out_dir.mkdir(parents=True, exist_ok=True)
    has_control = any(np.any(u != 0.0) for u in controls)
    write_trajectory_csv(out_dir / "trajectory.csv", traj, include_controls=has_control)

    inertia = problem.inertia
    pi0 = spatial_momentum(traj.states[0], inertia)
    e0 = kinetic_energy(traj.states[0].omega, inertia)
    eye = np.eye(3)
    momentum_drift = max(
        float(np.linalg.norm(spatial_momentum(s, inertia) - pi0)) for s in traj.states
    )
    ortho_drift = max(
        float(np.linalg.norm(s.rotation.T @ s.rotation - eye)) for s in traj.states
    )
    energy_change = kinetic_energy(traj.states[-1].omega, inertia) - e0
    write_json(
        out_dir / "summary.json",
        {
            "steps": traj.n_steps,
            "h": traj.h,
            "momentum_drift": momentum_drift,
            "orthogonality_drift": ortho_drift,
            "energy_change": energy_change,
        },
    )
    return EXIT_OK


def run_optimize(problem: ManeuverProblem, seed: int, out_dir: Path) -> int:
    """Shooting solve; writes trajectory CSV (states, controls, costates)
    and the solver report. Best-effort files are still written when the
    solve does not converge."""
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        extremal, report = solve(problem, seed)
    except NotConvergedError as e:
        if e.trajectory is not None:
            write_extremal_csv(out_dir / "trajectory.csv", e.trajectory)
        write_report_json(out_dir / "report.json", e.report, e.trajectory)
        print(f"not converged: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    write_extremal_csv(out_dir / "trajectory.csv", extremal)
    write_report_json(out_dir / "report.json", report, extremal)
    print(
        f"converged: maneuver time {report.maneuver_time:.6f} s, "
        f"residual norm {report.final_residual_norm:.3e}, "
        f"restarts {report.restarts_used}"
    )
    return EXIT_OK


def run_validate(out_dir: Path, seed: int) -> int:
    result = validation.run_all(seed=seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "validation.json", result)
    for check in result["checks"]:
        print(f"{'PASS' if check['passed'] else 'FAIL'}  {check['name']}")
    return EXIT_OK if result["passed"] else EXIT_NOT_CONVERGED


def run_compare(problem: ManeuverProblem, steps: int, out_dir: Path) -> int:
    """Free-body drift comparison between the variational integrator and
    unprojected RK4, written as a per-step CSV."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "comparison.csv"
    header = [
        "k", "t",
        "orthogonality_lgvi", "orthogonality_rk4",
        "energy_error_lgvi", "energy_error_rk4",
        "momentum_drift_lgvi", "momentum_drift_rk4",
    ]
    if steps < 1:
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerow(header)
        return EXIT_OK
    state0 = BodyState(problem.attitude_initial, problem.omega_initial)
    rows = validation.integrator_comparison(state0, problem.inertia, problem.h_initial, steps)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, k in enumerate(rows["k"]):
            writer.writerow(
                [
                    str(k),
                    format(k * problem.h_initial, ".17g"),
                ]
                + [
                    format(rows[col][i], ".17g")
                    for col in header[2:]
                ]
            )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attopt",
        description="Time-optimal attitude maneuvers on the rotation group",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="roll out a control history")
    sim.add_argument("--config", required=True)
    sim.add_argument("--controls", help="CSV of ux,uy,uz rows (defaults to zero control)")
    sim.add_argument("--steps", type=int, help="override the problem's step count")
    sim.add_argument("--out", default="out")

    opt = sub.add_parser("optimize", help="solve the minimum-time maneuver")
    opt.add_argument("--config", required=True)
    opt.add_argument("--seed", type=int, help="override the problem's seed")
    opt.add_argument("--steps", type=int, help="override the problem's step count")
    opt.add_argument("--tol", type=float, help="override the convergence tolerance")
    opt.add_argument("--out", default="out")

    val = sub.add_parser("validate", help="run the numerical self-checks")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--out", default="out")

    cmp_ = sub.add_parser("compare", help="variational vs RK4 drift on the free body")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--steps", type=int, required=True)
    cmp_.add_argument("--out", default="out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        if args.command == "validate":
            return run_validate(out_dir, args.seed)
        problem = _load(args)
        if args.command == "simulate":
            n = problem.steps
            controls = (
                _read_controls(args.controls, n)
                if args.controls
                else [np.zeros(3)] * n
            )
            return run_simulate(problem, controls, out_dir)
        if args.command == "optimize":
            seed = args.seed if args.seed is not None else problem.seed
            return run_optimize(problem, seed, out_dir)
        if args.command == "compare":
            return run_compare(problem, args.steps, out_dir)
    except (ParseError, ValidationError, FileNotFoundError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
