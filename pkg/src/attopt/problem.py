"""Maneuver problem definition and JSON config round-tripping."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import BodyState, InertiaModel
from .so3 import exp_so3, require_rotation


class ParseError(ValueError):
    """Config file is not valid JSON; message carries line information."""


class ValidationError(ValueError):
    """Config parsed but a field is missing, unknown, or invalid."""


@dataclass
class ManeuverProblem:
    """Boundary states, control bound, and solver settings for one maneuver.

    `steps` (N) is held fixed during a solve; the maneuver time N*h varies
    through the step size, which the solver iterates starting from
    `h_initial` within [h_min, h_max].
    """

    inertia: InertiaModel
    attitude_initial: np.ndarray
    attitude_final: np.ndarray
    omega_initial: np.ndarray
    omega_final: np.ndarray
    u_max: float
    steps: int = 1000
    h_initial: float = 0.002
    seed: int = 0
    tolerance: float = 1e-10
    restart_budget: int = 20
    max_iterations: int = 60
    h_min: float = 1e-5
    h_max: float = 0.1

    def __post_init__(self):
        self.attitude_initial = _valid_rotation(self.attitude_initial, "attitude_initial")
        self.attitude_final = _valid_rotation(self.attitude_final, "attitude_final")
        self.omega_initial = _valid_vec3(self.omega_initial, "omega_initial")
        self.omega_final = _valid_vec3(self.omega_final, "omega_final")
        if not (self.u_max > 0.0 and math.isfinite(self.u_max)):
            raise ValidationError(f"u_max must be positive and finite, got {self.u_max!r}")
        if self.steps < 2:
            raise ValidationError(f"steps must be >= 2, got {self.steps!r}")
        if not (self.h_min < self.h_initial < self.h_max):
            raise ValidationError(
                f"h_initial {self.h_initial!r} must lie inside ({self.h_min!r}, {self.h_max!r})"
            )
        if self.tolerance <= 0.0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance!r}")
        if self.restart_budget < 1:
            raise ValidationError(f"restart_budget must be >= 1, got {self.restart_budget!r}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be >= 1, got {self.max_iterations!r}")

    @property
    def initial_state(self) -> BodyState:
        return BodyState(self.attitude_initial, self.omega_initial)

    @property
    def final_state(self) -> BodyState:
        return BodyState(self.attitude_final, self.omega_final)


def _valid_vec3(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValidationError(f"{name} must have 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} components must be finite")
    return v


def _valid_rotation(r, name: str) -> np.ndarray:
    try:
        return require_rotation(r, name=name)
    except ValueError as e:
        raise ValidationError(str(e)) from e


_KNOWN_KEYS = {
    "inertia_diag",
    "inertia_matrix",
    "attitude_initial",
    "attitude_final",
    "omega_initial",
    "omega_final",
    "u_max",
    "steps",
    "h_initial",
    "seed",
    "tolerance",
    "restart_budget",
    "max_iterations",
    "h_min",
    "h_max",
}


def _attitude_from_config(value, name: str) -> np.ndarray:
    """Either {"axis": [...], "angle_deg": x} or 9 entries row-major."""
    if isinstance(value, dict):
        extra = set(value) - {"axis", "angle_deg"}
        if extra:
            raise ValidationError(f"{name}: unknown keys {sorted(extra)}")
        if "axis" not in value or "angle_deg" not in value:
            raise ValidationError(f"{name}: axis-angle form needs both 'axis' and 'angle_deg'")
        axis = _valid_vec3(value["axis"], f"{name}.axis")
        norm = float(np.linalg.norm(axis))
        if norm == 0.0:
            raise ValidationError(f"{name}.axis must be nonzero")
        angle = math.radians(float(value["angle_deg"]))
        return exp_so3((angle / norm) * axis)
    arr = np.asarray(value, dtype=float)
    if arr.size != 9:
        raise ValidationError(f"{name} must be axis-angle or 9 entries row-major, got size {arr.size}")
    return _valid_rotation(arr.reshape(3, 3), name)


def load_problem(path) -> ManeuverProblem:
    """Parse and validate a problem config.

    Raises ParseError for malformed JSON (with line info) and
    ValidationError naming the offending field otherwise.
    """
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")

    if "inertia_diag" in raw and "inertia_matrix" in raw:
        raise ValidationError("give either inertia_diag or inertia_matrix, not both")
    try:
        if "inertia_diag" in raw:
            diag = np.asarray(raw["inertia_diag"], dtype=float)
            if diag.shape != (3,):
                raise ValidationError("inertia_diag must have 3 entries")
            inertia = InertiaModel.diagonal(diag)
        elif "inertia_matrix" in raw:
            mat = np.asarray(raw["inertia_matrix"], dtype=float)
            if mat.size != 9:
                raise ValidationError("inertia_matrix must have 9 entries row-major")
            inertia = InertiaModel(mat.reshape(3, 3))
        else:
            raise ValidationError("missing inertia: give inertia_diag or inertia_matrix")
    except ValidationError:
        raise
    except ValueError as e:
        raise ValidationError(f"inertia: {e}") from e

    for required in ("attitude_initial", "attitude_final", "u_max"):
        if required not in raw:
            raise ValidationError(f"missing required key: {required}")

    kwargs = dict(
        inertia=inertia,
        attitude_initial=_attitude_from_config(raw["attitude_initial"], "attitude_initial"),
        attitude_final=_attitude_from_config(raw["attitude_final"], "attitude_final"),
        omega_initial=raw.get("omega_initial", (0.0, 0.0, 0.0)),
        omega_final=raw.get("omega_final", (0.0, 0.0, 0.0)),
        u_max=float(raw["u_max"]),
    )
    for key in ("steps", "seed", "restart_budget", "max_iterations"):
        if key in raw:
            kwargs[key] = int(raw[key])
    for key in ("h_initial", "tolerance", "h_min", "h_max"):
        if key in raw:
            kwargs[key] = float(raw[key])
    return ManeuverProblem(**kwargs)


def problem_to_dict(problem: ManeuverProblem) -> dict:
    """JSON-ready dict; float values survive the round trip bitwise."""
    return {
        "inertia_matrix": [float(x) for x in problem.inertia.j.ravel()],
        "attitude_initial": [float(x) for x in problem.attitude_initial.ravel()],
        "attitude_final": [float(x) for x in problem.attitude_final.ravel()],
        "omega_initial": [float(x) for x in problem.omega_initial],
        "omega_final": [float(x) for x in problem.omega_final],
        "u_max": problem.u_max,
        "steps": problem.steps,
        "h_initial": problem.h_initial,
        "seed": problem.seed,
        "tolerance": problem.tolerance,
        "restart_budget": problem.restart_budget,
        "max_iterations": problem.max_iterations,
        "h_min": problem.h_min,
        "h_max": problem.h_max,
    }


def save_problem(problem: ManeuverProblem, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=2, sort_keys=True) + "\n")
