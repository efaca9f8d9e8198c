"""Rotation-group algebra: hat/vee maps, exponential and logarithm on SO(3),
and the two skew-matrix identities the costate recursions rely on.

Vectors are plain float numpy arrays of shape (3,), matrices of shape (3, 3).
Rotation matrices are validated where they enter the system (user input,
deserialization); internal products rely on group closure, which the drift
test suite measures instead of per-call checks.
"""

from __future__ import annotations

import math

import numpy as np

from . import _core

ROTATION_TOL = 1e-12
SKEW_TOL = 1e-10

# Angle below which sin(t)/t and (1 - cos t)/t^2 switch to series evaluation.
SMALL_ANGLE = 1e-4

# Rotations closer to pi than this have an ill-conditioned axis and are
# rejected by log_so3 and the boundary-residual code.
PI_MARGIN = 1e-6

_EYE3 = np.eye(3)


class NotSkewError(ValueError):
    """Matrix handed to vee() has a symmetric part above tolerance."""


class NearPiRotationError(ValueError):
    """Rotation angle within PI_MARGIN of pi; axis extraction is unreliable."""


class SingularMatrixError(ValueError):
    """3x3 inverse requested for a matrix with |det| below the floor."""


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of v, so that hat(v) @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of hat. Accepts nearly-skew input, extracting the skew part
    0.5 * (m - m.T) after checking the symmetric part against SKEW_TOL.
    """
    sym = 0.5 * (m + m.T)
    if np.max(np.abs(sym)) > SKEW_TOL:
        raise NotSkewError(
            f"symmetric part has magnitude {np.max(np.abs(sym)):.3e}, "
            f"above {SKEW_TOL:.0e}"
        )
    return np.array(
        [0.5 * (m[2, 1] - m[1, 2]), 0.5 * (m[0, 2] - m[2, 0]), 0.5 * (m[1, 0] - m[0, 1])]
    )


def rodrigues_coefficients(theta: float) -> tuple[float, float]:
    """Scalar coefficients a = sin(t)/t and b = (1 - cos t)/t^2.

    For t < SMALL_ANGLE both are evaluated by their 4th-order series to
    avoid cancellation; the implicit step solve iterates through tiny t.
    """
    return _core.rod_ab(theta)


def rodrigues_coefficient_slopes(theta: float) -> tuple[float, float]:
    """a'(t)/t and b'(t)/t for the coefficients above; used by the Newton
    Jacobian of the implicit step equation. Finite at t = 0."""
    return _core.rod_slopes(theta)


def exp_so3(v: np.ndarray) -> np.ndarray:
    """Rodrigues' formula: exp of the skew matrix of v, a rotation by |v|
    about v. Exact group element to rounding; no reprojection needed."""
    return _core.exp3(float(v[0]), float(v[1]), float(v[2]))


def rotation_angle(r: np.ndarray) -> float:
    """Rotation angle in [0, pi], computed from atan2 of the skew-part norm
    against (trace - 1)/2, which stays accurate near both 0 and pi."""
    s = np.array(
        [0.5 * (r[2, 1] - r[1, 2]), 0.5 * (r[0, 2] - r[2, 0]), 0.5 * (r[1, 0] - r[0, 1])]
    )
    return math.atan2(math.sqrt(float(s @ s)), 0.5 * (float(np.trace(r)) - 1.0))


def log_so3(r: np.ndarray) -> np.ndarray:
    """Rotation vector v with exp_so3(v) = r and |v| < pi.

    Raises NearPiRotationError when the angle is within PI_MARGIN of pi.
    Near pi (but outside the margin) the axis is recovered from the
    symmetric part, where the skew part alone loses precision.
    """
    s = np.array(
        [0.5 * (r[2, 1] - r[1, 2]), 0.5 * (r[0, 2] - r[2, 0]), 0.5 * (r[1, 0] - r[0, 1])]
    )
    ns = math.sqrt(float(s @ s))
    c = 0.5 * (float(np.trace(r)) - 1.0)
    theta = math.atan2(ns, c)
    if theta >= math.pi - PI_MARGIN:
        raise NearPiRotationError(
            f"rotation angle {theta:.9f} within {PI_MARGIN:.0e} of pi"
        )
    if theta < SMALL_ANGLE:
        # v = (theta/sin theta) * s with the ratio expanded in series.
        t2 = theta * theta
        return (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * s
    if theta < math.pi - 0.1:
        return (theta / ns) * s
    # Near pi: |s| = sin(theta) is tiny, so take the axis magnitudes from the
    # symmetric part (R + R.T)/2 - c*I = (1 - c) * outer(axis, axis).
    one_minus_c = 1.0 - c
    b = 0.5 * (r + r.T) - c * _EYE3
    i = int(np.argmax(np.diag(b)))
    ai = math.sqrt(max(float(b[i, i]) / one_minus_c, 0.0))
    if s[i] < 0.0:
        ai = -ai
    axis = b[i] / (one_minus_c * ai)
    axis = axis / math.sqrt(float(axis @ axis))
    return theta * axis


def trace_identity(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """hat(x) @ A + A.T @ hat(x), which equals hat((trace(A) I - A) @ x)
    for every 3x3 A and 3-vector x. Returned in the left-hand form; the
    test suite checks the identity itself."""
    xh = hat(x)
    return xh @ a + a.T @ xh


def conjugation_identity(f: np.ndarray, x: np.ndarray) -> np.ndarray:
    """F.T @ hat(x) @ F, which equals hat(F.T @ x) for F in SO(3)."""
    return f.T @ hat(x) @ f


def is_rotation(r: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """True when r is orthonormal with unit determinant, within tol."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    if np.linalg.norm(r.T @ r - _EYE3) > tol:
        return False
    return abs(float(np.linalg.det(r)) - 1.0) <= tol


def require_rotation(r: np.ndarray, tol: float = ROTATION_TOL, name: str = "rotation") -> np.ndarray:
    """Validate and return r as a float array; raises ValueError naming the
    violated property. Called at system boundaries only."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"{name}: expected a 3x3 matrix, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValueError(f"{name}: entries must be finite")
    ortho = np.linalg.norm(r.T @ r - _EYE3)
    if ortho > tol:
        raise ValueError(f"{name}: orthonormality violated, |R^T R - I| = {ortho:.3e}")
    det = float(np.linalg.det(r))
    if abs(det - 1.0) > tol:
        raise ValueError(f"{name}: determinant {det!r} is not 1 (improper rotation)")
    return r


DET_FLOOR = _core.DET_FLOOR
CONDITION_CEILING = _core.CONDITION_CEILING


def inv3(m: np.ndarray) -> np.ndarray:
    """Closed-form 3x3 inverse by adjugate over determinant.

    Exact to rounding and branch-free; raises SingularMatrixError when
    |det| < DET_FLOOR or the Frobenius condition estimate exceeds
    CONDITION_CEILING.
    """
    adj, det, cond = _core.adjugate3(np.ascontiguousarray(m, dtype=float))
    if abs(det) < DET_FLOOR:
        raise SingularMatrixError(f"3x3 determinant {det:.3e} below {DET_FLOOR:.0e}")
    if cond > CONDITION_CEILING:
        raise SingularMatrixError(f"3x3 condition estimate {cond:.3e} above {CONDITION_CEILING:.0e}")
    return adj / det
