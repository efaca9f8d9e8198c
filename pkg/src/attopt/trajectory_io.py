"""Trajectory CSV and report JSON serialization.

CSV layout: one row per state k = 0..N. State columns are always filled;
the control columns hold u_k (applied over the step ending at k, so row 0
is empty) and the costate columns hold the pair at index k (defined for
k <= N-1). Pure simulations leave control/costate columns empty.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .dynamics import BodyState, DiscreteTrajectory
from .optimality import ExtremalTrajectory, Multipliers
from .shooting import SolverReport
from .so3 import require_rotation

CSV_HEADER = [
    "k", "t",
    "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33",
    "wx", "wy", "wz",
    "ux", "uy", "uz",
    "lamR_x", "lamR_y", "lamR_z",
    "lamOmega_x", "lamOmega_y", "lamOmega_z",
]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(
    path,
    trajectory: DiscreteTrajectory,
    multipliers: list[Multipliers] | None = None,
    include_controls: bool = True,
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for k, state in enumerate(trajectory.states):
            row = [str(k), _fmt(k * trajectory.h)]
            row.extend(_fmt(x) for x in state.rotation.ravel())
            row.extend(_fmt(x) for x in state.omega)
            if include_controls and 1 <= k <= len(trajectory.controls):
                row.extend(_fmt(x) for x in trajectory.controls[k - 1])
            else:
                row.extend(["", "", ""])
            if multipliers is not None and k < len(multipliers):
                row.extend(_fmt(x) for x in multipliers[k].lam_r)
                row.extend(_fmt(x) for x in multipliers[k].lam_omega)
            else:
                row.extend([""] * 6)
            writer.writerow(row)


def write_extremal_csv(path, extremal: ExtremalTrajectory) -> None:
    write_trajectory_csv(path, extremal.trajectory, multipliers=extremal.multipliers)


def read_trajectory_csv(path) -> DiscreteTrajectory:
    """Read states (and controls when present) back; every rotation row is
    re-validated against the group invariants."""
    states: list[BodyState] = []
    controls: list[np.ndarray] = []
    times: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header}")
        for row in reader:
            times.append(float(row[1]))
            r = require_rotation(
                np.array([float(x) for x in row[2:11]]).reshape(3, 3),
                name=f"row {row[0]} rotation",
            )
            omega = np.array([float(x) for x in row[11:14]])
            states.append(BodyState(r, omega))
            if row[14] != "":
                controls.append(np.array([float(x) for x in row[14:17]]))
    h = times[1] - times[0] if len(times) > 1 else 0.0
    return DiscreteTrajectory(h=h, states=states, relative_rotations=[], controls=controls)


def report_to_dict(report: SolverReport, extremal: ExtremalTrajectory | None = None) -> dict:
    out = asdict(report)
    if extremal is not None:
        out["residual_attitude"] = [float(x) for x in extremal.boundary_residual_r]
        out["residual_omega"] = [float(x) for x in extremal.boundary_residual_omega]
        out["residual_transversality"] = float(extremal.transversality_residual)
        out["min_lam_omega_norm"] = float(extremal.min_lam_omega_norm)
    return out


def write_report_json(path, report: SolverReport, extremal: ExtremalTrajectory | None = None) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report, extremal), indent=2, sort_keys=True) + "\n")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
