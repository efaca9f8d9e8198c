"""Indirect shooting for the minimum-time maneuver.

The unknowns are the 7 shooting variables (initial costate pair, step size
h); the residual is the 7-dimensional terminal mismatch (attitude
skew-part, angular velocity, transversality). The step count N stays fixed
during a solve, so the maneuver time N*h varies only through h.

A damped least-squares (Levenberg-Marquardt) iteration drives the residual
to zero, with random restarts drawn from the problem's seed when a basin
stalls. Three measures keep the iteration out of the traps this problem
sets for a plain solver:

* The skew-part attitude residual vanishes spuriously when the final
  attitude lands a half-turn from the target, and that pseudo-basin has a
  large catchment. The solver therefore homes in with a logarithmic
  attitude error (monotone in the rotation angle, so the half-turn set is
  repellent) and only then polishes the reported skew-form residual.
* The transversality component is exactly linear in the scale of the
  costate pair (controls see only the normalized direction), so the scale
  is eliminated in closed form after every accepted step instead of being
  left to the iteration.
* The step size moves at most a fixed factor per iteration and is clamped
  to [h_min, h_max], with a damping increase on violation; unconstrained
  steps otherwise collapse h toward zero early on, where shrinking the
  maneuver time kills most of the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import IntegrationError
from .optimality import (
    ExtremalTrajectory,
    Multipliers,
    SingularArcError,
    forward_extremal,
)
from .so3 import NearPiRotationError, SingularMatrixError, log_so3

# Residual value reported for variables whose rollout fails; large against
# any feasible residual so the iteration backs away.
PENALTY = 1e3

DAMPING_INITIAL = 1e-3
DAMPING_GROW = 10.0
DAMPING_SHRINK = 10.0
DAMPING_MAX = 1e12

# Residual norm at which the homing phase hands over to the polish phase.
HOMING_TOL = 1e-6
# Per-iteration trust factor for the step size.
H_TRUST_FACTOR = 1.5
# Stagnation: restart when this window improves by less than the fraction.
STAGNATION_WINDOW = 20
STAGNATION_FRACTION = 5e-3


@dataclass(frozen=True)
class ShootingVariables:
    """The 7 unknowns: initial costates and the step size."""

    lam0: Multipliers
    h: float

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.lam0.lam_r, self.lam0.lam_omega, [self.h]])

    @classmethod
    def from_array(cls, x: np.ndarray) -> "ShootingVariables":
        x = np.asarray(x, dtype=float)
        return cls(lam0=Multipliers(x[0:3], x[3:6]), h=float(x[6]))


@dataclass
class ShootingResidual:
    """Terminal mismatch: attitude (3), angular velocity (3),
    transversality (1); flattens to exactly 7 components."""

    attitude: np.ndarray
    omega: np.ndarray
    transversality: float

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.attitude, self.omega, [self.transversality]])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.to_array()))


@dataclass
class SolverReport:
    converged: bool
    iterations: int
    final_residual_norm: float
    maneuver_time: float
    min_lam_omega_norm: float
    restarts_used: int
    steps: int
    h: float
    tolerance: float


class NotConvergedError(RuntimeError):
    """Raised when the restart budget is exhausted; carries the best point
    found as `.trajectory` and `.report`."""

    def __init__(self, message: str, trajectory: ExtremalTrajectory | None, report: SolverReport):
        super().__init__(message)
        self.trajectory = trajectory
        self.report = report


_ROLLOUT_ERRORS = (
    IntegrationError,
    SingularArcError,
    SingularMatrixError,
    NearPiRotationError,
)


def _penalty() -> np.ndarray:
    return np.full(7, PENALTY)


def residual(vars: ShootingVariables, problem) -> ShootingResidual:
    """Terminal residual of the extremal launched from `vars`.

    A rollout failure (step equation divergence, singular-arc floor,
    degenerate costate system, half-turn attitude residual) marks the point
    infeasible: every component is set to PENALTY instead of raising.
    """
    try:
        ext = forward_extremal(
            problem.initial_state,
            vars.lam0,
            problem.inertia,
            problem.u_max,
            problem.steps,
            vars.h,
            target=problem.final_state,
        )
    except _ROLLOUT_ERRORS:
        pen = _penalty()
        return ShootingResidual(attitude=pen[0:3], omega=pen[3:6], transversality=PENALTY)
    return ShootingResidual(
        attitude=ext.boundary_residual_r,
        omega=ext.boundary_residual_omega,
        transversality=ext.transversality_residual,
    )


def _contract_residual(x: np.ndarray, problem) -> np.ndarray:
    return residual(ShootingVariables.from_array(x), problem).to_array()


def _homing_residual(x: np.ndarray, problem) -> np.ndarray:
    """Residual with the attitude error taken through the logarithm map.

    Used only while homing in: unlike the skew form it cannot vanish away
    from the target, so descent never aims at the half-turn set.
    """
    vars = ShootingVariables.from_array(x)
    try:
        ext = forward_extremal(
            problem.initial_state,
            vars.lam0,
            problem.inertia,
            problem.u_max,
            problem.steps,
            vars.h,
            target=None,
        )
        rel = ext.trajectory.states[-1].rotation.T @ problem.attitude_final
        att = log_so3(rel)
    except _ROLLOUT_ERRORS:
        return _penalty()
    om = ext.trajectory.states[-1].omega - problem.omega_final
    return np.concatenate([att, om, [ext.transversality_residual]])


def jacobian_fd(vars: ShootingVariables, problem) -> np.ndarray:
    """Forward finite-difference Jacobian of the flattened residual, one
    evaluation per column with relative step max(1e-7 |x_i|, 1e-9). The
    residual is pure, so columns could be evaluated concurrently; they are
    computed sequentially here."""
    x0 = vars.to_array()
    r0 = _contract_residual(x0, problem)
    return _jacobian(_contract_residual, x0, r0, problem)


def _jacobian(func, x0: np.ndarray, r0: np.ndarray, problem) -> np.ndarray:
    jac = np.empty((7, 7))
    for i in range(7):
        step = max(1e-7 * abs(float(x0[i])), 1e-9)
        x = x0.copy()
        x[i] += step
        jac[:, i] = (func(x, problem) - r0) / step
    return jac


def _rescale_costates(func, x: np.ndarray, r: np.ndarray, problem):
    """Zero the transversality component in closed form.

    The costate recursions are linear and the control law sees only the
    normalized direction, so scaling the initial pair by c scales the
    transversality residual as 1 + c*s while leaving the attitude and
    velocity components unchanged. Applied only when it reduces the norm.
    """
    s = float(r[6]) - 1.0
    if s < -1e-12 and abs(r[6]) > 1e-13:
        x2 = x.copy()
        x2[:6] *= -1.0 / s
        r2 = func(x2, problem)
        if np.linalg.norm(r2) < np.linalg.norm(r):
            return x2, r2
    return x, r


def _lm_phase(func, x, problem, tol, max_iter, it_used):
    """One damped least-squares descent on `func`; returns the improved
    point, its residual, iterations consumed, and why it stopped."""
    r = func(x, problem)
    rn = float(np.linalg.norm(r))
    x, r = _rescale_costates(func, x, r, problem)
    rn = float(np.linalg.norm(r))
    damping = DAMPING_INITIAL
    history = [rn]
    while it_used < max_iter:
        if rn < tol:
            return x, r, rn, it_used, "converged"
        if rn >= PENALTY:
            return x, r, rn, it_used, "infeasible"
        it_used += 1
        jac = _jacobian(func, x, r, problem)
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.maximum(np.diag(jtj), 1e-12)
        accepted = False
        while damping <= DAMPING_MAX:
            try:
                delta = np.linalg.solve(jtj + damping * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                damping *= DAMPING_GROW
                continue
            x_try = x + delta
            clamped = False
            lo = max(problem.h_min, x[6] / H_TRUST_FACTOR)
            hi = min(problem.h_max, x[6] * H_TRUST_FACTOR)
            if x_try[6] < lo:
                x_try[6] = lo
                clamped = True
            elif x_try[6] > hi:
                x_try[6] = hi
                clamped = True
            r_try = func(x_try, problem)
            rn_try = float(np.linalg.norm(r_try))
            if rn_try < rn:
                x, r, rn = x_try, r_try, rn_try
                damping = max(damping / DAMPING_SHRINK, 1e-14)
                if clamped:
                    damping *= DAMPING_GROW
                accepted = True
                break
            damping *= DAMPING_GROW
        if not accepted:
            return x, r, rn, it_used, "damping"
        x, r = _rescale_costates(func, x, r, problem)
        rn = float(np.linalg.norm(r))
        history.append(rn)
        if (
            len(history) > STAGNATION_WINDOW
            and rn > 10.0 * tol
            and (history[-STAGNATION_WINDOW - 1] - rn)
            < STAGNATION_FRACTION * history[-STAGNATION_WINDOW - 1]
        ):
            return x, r, rn, it_used, "stagnation"
    return x, r, rn, it_used, "budget"


def solve(problem, seed: int) -> tuple[ExtremalTrajectory, SolverReport]:
    """Shooting solve by damped least squares with random restarts.

    Costates are initialized with components uniform in [-1, 1] drawn from
    `seed`; h starts at the problem's h_initial. Each draw first homes in on
    the logarithmic attitude residual, then polishes the contracted
    skew-form residual to the problem tolerance. Damping multiplies by 10
    on a rejected trial and divides by 10 on acceptance. A stalled draw
    (stagnation, damping blowout, infeasible region) is abandoned for a
    fresh one, up to restart_budget draws.

    Returns the converged extremal and its report; `iterations` counts
    accepted descent steps across all draws and `restarts_used` is the
    index of the successful draw. Identical (problem, seed) pairs produce
    bitwise-identical results. Raises NotConvergedError carrying the best
    point found when the budget is exhausted.
    """
    rng = np.random.default_rng(seed)
    tol = problem.tolerance
    total_iters = 0
    best_norm = math.inf
    best_x: np.ndarray | None = None

    for restart in range(problem.restart_budget):
        x = np.concatenate([rng.uniform(-1.0, 1.0, size=6), [problem.h_initial]])
        x, r, rn, used, why = _lm_phase(
            _homing_residual, x, problem, HOMING_TOL, problem.max_iterations, 0
        )
        total_iters += used
        if why in ("converged", "budget") or rn < 1.0:
            x, r, rn, used_b, _ = _lm_phase(
                _contract_residual, x, problem, tol, problem.max_iterations, used
            )
            total_iters += used_b - used
            if rn < tol:
                return _finish(problem, x, rn, total_iters, restart)
            if rn < best_norm:
                best_norm, best_x = rn, x.copy()
        else:
            rn_contract = float(np.linalg.norm(_contract_residual(x, problem)))
            if rn_contract < best_norm:
                best_norm, best_x = rn_contract, x.copy()

    report = _report_for(
        problem, best_x, best_norm, total_iters, problem.restart_budget - 1, converged=False
    )
    trajectory = None
    if best_x is not None and best_norm < PENALTY:
        try:
            trajectory = forward_extremal(
                problem.initial_state,
                ShootingVariables.from_array(best_x).lam0,
                problem.inertia,
                problem.u_max,
                problem.steps,
                float(best_x[6]),
                target=problem.final_state,
            )
        except _ROLLOUT_ERRORS:
            trajectory = None
    raise NotConvergedError(
        f"restart budget {problem.restart_budget} exhausted; "
        f"best residual norm {best_norm:.3e}",
        trajectory,
        report,
    )


def _finish(problem, x: np.ndarray, rn: float, iterations: int, restart: int):
    vars = ShootingVariables.from_array(x)
    ext = forward_extremal(
        problem.initial_state,
        vars.lam0,
        problem.inertia,
        problem.u_max,
        problem.steps,
        vars.h,
        target=problem.final_state,
    )
    return ext, _report_for(problem, x, rn, iterations, restart, converged=True, extremal=ext)


def _report_for(
    problem,
    x: np.ndarray | None,
    rn: float,
    iterations: int,
    restart: int,
    converged: bool,
    extremal: ExtremalTrajectory | None = None,
) -> SolverReport:
    h = float(x[6]) if x is not None else float("nan")
    return SolverReport(
        converged=converged,
        iterations=iterations,
        final_residual_norm=rn,
        maneuver_time=problem.steps * h,
        min_lam_omega_norm=extremal.min_lam_omega_norm if extremal is not None else float("nan"),
        restarts_used=restart,
        steps=problem.steps,
        h=h,
        tolerance=problem.tolerance,
    )
