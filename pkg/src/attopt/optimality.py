"""Necessary conditions for the minimum-time attitude maneuver.

The discrete conditions are the solution path: costate recursions matched
to the variational integrator, the bang-bang control law, and the terminal
transversality residual that fixes the costate scale. The continuous-time
costate equations are implemented solely as a cross-validation oracle.

Both costates are 3-vectors: `lam_r` adjoins the attitude kinematics,
`lam_omega` the momentum balance. Their discrete recursions are linear, so
scaling the initial pair scales every later pair; the full extremal is not
scale-invariant because the control law normalizes lam_omega and the
transversality residual carries the unit running cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _core
from .dynamics import (
    BodyState,
    DiscreteTrajectory,
    InertiaModel,
    NoConvergenceError,
    StepTooLargeError,
)
from .so3 import NearPiRotationError, PI_MARGIN, SingularMatrixError, hat, inv3, rotation_angle, vee

_EYE3 = np.eye(3)

SINGULAR_ARC_FLOOR = _core.SINGULAR_ARC_FLOOR


class SingularArcError(RuntimeError):
    """|lam_omega| fell below the floor, so the control direction is
    undefined. The continuous problem admits no singular arc; hitting this
    signals solver pathology, not a valid extremal."""

    step: int | None = None


@dataclass(frozen=True)
class Multipliers:
    """Costate pair (lam_r, lam_omega) at one step."""

    lam_r: np.ndarray
    lam_omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam_r", np.asarray(self.lam_r, dtype=float))
        object.__setattr__(self, "lam_omega", np.asarray(self.lam_omega, dtype=float))


@dataclass
class ExtremalTrajectory:
    """A trajectory satisfying dynamics, costate recursions, and the control
    law by construction, with its terminal residuals attached.

    Boundary residuals are populated when a target state was supplied;
    `transversality_residual` is always evaluated. `min_lam_omega_norm` is
    the singular-arc margin min_k |lam_omega_k|.
    """

    trajectory: DiscreteTrajectory
    multipliers: list[Multipliers]
    transversality_residual: float
    boundary_residual_r: np.ndarray | None
    boundary_residual_omega: np.ndarray | None
    min_lam_omega_norm: float


def variation_transfer_matrix(f: np.ndarray, inertia: InertiaModel, h: float) -> np.ndarray:
    """Matrix mapping J * (omega variation) to the Lie-algebra variation of
    the relative rotation F: h F^T {trace(F Jd) I - F Jd}^{-1}.

    Raises SingularMatrixError when the inner factor is degenerate, which
    cannot happen while step rotations stay below pi/2.
    """
    fjd = f @ inertia.jd
    m = np.trace(fjd) * _EYE3 - fjd
    return h * (f.T @ inv3(m))


def propagate_multipliers(
    lam_prev: Multipliers,
    f_prev: np.ndarray,
    f_curr: np.ndarray,
    omega_curr: np.ndarray,
    inertia: InertiaModel,
    h: float,
) -> Multipliers:
    """One step of the discrete costate recursions.

    lam_r transports through (trace(F)I - F) factors:
        lam_r_k = (tr(F_k)I - F_k)^{-1} F_k^T (tr(F_{k-1})I - F_{k-1}) lam_r_{k-1}
    and lam_omega solves the 3x3 linear system
        J (F_k - B_k^T hat(F_k^T J w_k)) lam_omega_k
            = J lam_omega_{k-1} - 0.5 J B_k^T (tr(F_k)I - F_k) lam_r_k
    with B_k the variation transfer matrix. The system matrix is a
    near-identity perturbation for small h; it is solved directly, with the
    inverse's condition estimate guarding degeneracy.

    """
    status, lam_r, lam_omega = _core.costate_step(
        np.asarray(lam_prev.lam_r, dtype=float),
        np.asarray(lam_prev.lam_omega, dtype=float),
        np.ascontiguousarray(f_prev, dtype=float),
        np.ascontiguousarray(f_curr, dtype=float),
        np.asarray(omega_curr, dtype=float),
        inertia.j,
        inertia.jd,
        h,
    )
    if status != _core.OK:
        raise SingularMatrixError("costate linear system degenerate")
    return Multipliers(lam_r, lam_omega)


def control_law(lam_omega: np.ndarray, u_max: float) -> np.ndarray:
    """Minimum-principle control: -u_max * lam_omega / |lam_omega|, which
    saturates the bound at every step (bang-bang)."""
    n = math.sqrt(float(lam_omega @ lam_omega))
    if n < SINGULAR_ARC_FLOOR:
        raise SingularArcError(f"|lam_omega| = {n:.3e} below {SINGULAR_ARC_FLOOR:.0e}")
    return (-u_max / n) * lam_omega


def transversality_residual(
    lam_last: Multipliers,
    f_last: np.ndarray,
    omega_prev: np.ndarray,
    u_last: np.ndarray,
    inertia: InertiaModel,
    h: float,
) -> float:
    """Terminal condition coupling free final time to the costates:

        1 + lam_omega_{N-1} . (-J w_{N-1} + F_{N-1}^T J w_{N-1} + h u_N)
          + lam_r_{N-1} . 0.25 vee(F_{N-1}^2 - (F_{N-1}^T)^2)

    Zero at an extremal. The constant 1 (the running cost of one step) is
    what pins the costate scale; zero costates always leave residual 1.
    """
    jw = inertia.j @ omega_prev
    momentum_term = -jw + f_last.T @ jw + h * u_last
    f2 = f_last @ f_last
    skew_term = 0.25 * vee(f2 - f2.T)
    return (
        1.0
        + float(lam_last.lam_omega @ momentum_term)
        + float(lam_last.lam_r @ skew_term)
    )


def continuous_transversality_residual(
    lam: Multipliers, omega: np.ndarray, u: np.ndarray, inertia: InertiaModel
) -> float:
    """Continuous-time counterpart, evaluated at the final time:
    1 + lam_omega . (u - w x J w) + lam_r . w. Oracle only."""
    gyro = u - np.cross(omega, inertia.j @ omega)
    return 1.0 + float(lam.lam_omega @ gyro) + float(lam.lam_r @ omega)


def attitude_boundary_residual(r_final: np.ndarray, r_target: np.ndarray) -> np.ndarray:
    """Skew-part mismatch 0.5 * vee(R_f^T R_t - R_t^T R_f), zero exactly when
    the rotations agree, provided their relative angle stays below pi (a
    pi-apart pair has a spurious zero, hence the guard)."""
    rel = r_final.T @ r_target
    if rotation_angle(rel) >= math.pi - PI_MARGIN:
        raise NearPiRotationError(
            "relative rotation within margin of pi; skew-part residual is degenerate"
        )
    return 0.5 * vee(rel - rel.T)


def continuous_multiplier_rhs(
    lam: Multipliers, omega: np.ndarray, inertia: InertiaModel
) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides (dlam_omega/dt, dlam_r/dt) of the continuous costate
    equations:

        J dlam_omega = (J w) x lam_omega - J (w x lam_omega) - lam_r
        dlam_r = -w x lam_r

    The two cross terms are distinct; for J = I they cancel and the first
    equation collapses to dlam_omega = -lam_r.
    """
    j = inertia.j
    dlam_omega = inertia.j_inv @ (
        np.cross(j @ omega, lam.lam_omega) - j @ np.cross(omega, lam.lam_omega) - lam.lam_r
    )
    dlam_r = -np.cross(omega, lam.lam_r)
    return dlam_omega, dlam_r


def forward_extremal(
    initial: BodyState,
    lam0: Multipliers,
    inertia: InertiaModel,
    u_max: float,
    n_steps: int,
    h: float,
    target: BodyState | None = None,
) -> ExtremalTrajectory:
    """Propagate states and costates together from (state_0, lam_0).

    Per step k: solve the implicit equation for F_k from omega_k; advance
    the costates (for k >= 1) using F_{k-1}, F_k, omega_k; read the control
    u_{k+1} off lam_omega_k; advance the state. Step errors are re-raised
    with `.step` set to the failing index.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    status, idx, rs, ws, fs, us, lrs, los = _core.extremal_loop(
        np.ascontiguousarray(initial.rotation, dtype=float),
        np.asarray(initial.omega, dtype=float),
        np.asarray(lam0.lam_r, dtype=float),
        np.asarray(lam0.lam_omega, dtype=float),
        inertia.j,
        inertia.jd,
        inertia.j_inv,
        u_max,
        n_steps,
        h,
    )
    if status != _core.OK:
        err: Exception
        if status == _core.NO_CONVERGENCE:
            err = NoConvergenceError("step equation Newton iteration diverged")
        elif status == _core.STEP_TOO_LARGE:
            err = StepTooLargeError("relative rotation angle >= pi/2")
        elif status == _core.SINGULAR_ARC:
            err = SingularArcError("|lam_omega| below the singular-arc floor")
        else:
            err = SingularMatrixError("costate linear system degenerate")
        err.step = int(idx)
        raise err

    states = [BodyState(rs[k], ws[k]) for k in range(n_steps + 1)]
    rels = [fs[k] for k in range(n_steps)]
    controls = [us[k] for k in range(n_steps)]
    lams = [Multipliers(lrs[k], los[k]) for k in range(n_steps)]
    trajectory = DiscreteTrajectory(
        h=h, states=states, relative_rotations=rels, controls=controls
    )
    trans = transversality_residual(
        lams[-1], rels[-1], states[n_steps - 1].omega, controls[-1], inertia, h
    )
    res_r = None
    res_omega = None
    if target is not None:
        res_r = attitude_boundary_residual(states[-1].rotation, target.rotation)
        res_omega = states[-1].omega - target.omega
    return ExtremalTrajectory(
        trajectory=trajectory,
        multipliers=lams,
        transversality_residual=trans,
        boundary_residual_r=res_r,
        boundary_residual_omega=res_omega,
        min_lam_omega_norm=float(np.sqrt((los * los).sum(axis=1).min())),
    )


def costate_system_matrix(
    f: np.ndarray, omega: np.ndarray, inertia: InertiaModel, h: float
) -> np.ndarray:
    """System matrix of the lam_omega update at one step, exposed so the
    validation suite can report its conditioning along a trajectory."""
    b = variation_transfer_matrix(f, inertia, h)
    return inertia.j @ (f - b.T @ hat(f.T @ (inertia.j @ omega)))
