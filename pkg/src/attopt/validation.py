"""Numerical self-checks aggregated by the `validate` CLI mode.

Each check returns a dict with a `passed` flag and the measured numbers so
failures are diagnosable from the report alone. The checks mirror the
package's structural claims: exact algebra identities, conservation under
the variational integrator, drift contrast against unprojected Runge-Kutta,
step-equation reduction residuals, and consistency of the discrete costate
recursion with the continuous costate equations as the step size shrinks.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import (
    BodyState,
    InertiaModel,
    kinetic_energy,
    lgvi_step,
    rk4_step,
    solve_step_equation,
    spatial_momentum,
)
from .optimality import (
    Multipliers,
    continuous_multiplier_rhs,
    costate_system_matrix,
    forward_extremal,
    propagate_multipliers,
    variation_transfer_matrix,
)
from .so3 import exp_so3, hat, log_so3, trace_identity, vee

_EYE3 = np.eye(3)


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    v = rng.uniform(-1.0, 1.0, size=3)
    angle = rng.uniform(0.0, math.pi - 0.2)
    n = np.linalg.norm(v)
    if n == 0.0:
        return _EYE3.copy()
    return exp_so3((angle / n) * v)


def _random_spd(rng: np.random.Generator) -> InertiaModel:
    r = _random_rotation(rng)
    eig = rng.uniform(0.02, 0.5, size=3)
    return InertiaModel(r @ np.diag(eig) @ r.T)


def algebra_identity_suite(seed: int = 0, samples: int = 10_000) -> dict:
    """hat/vee and exp/log round trips plus the two hat identities."""
    rng = np.random.default_rng(seed)
    worst = {
        "hat_vee_roundtrip": 0.0,
        "hat_cross": 0.0,
        "exp_orthogonality": 0.0,
        "exp_det": 0.0,
        "exp_transpose": 0.0,
        "log_roundtrip": 0.0,
        "trace_identity": 0.0,
        "conjugation_identity": 0.0,
    }
    for _ in range(samples):
        v = rng.uniform(-2.0, 2.0, size=3)
        w = rng.uniform(-2.0, 2.0, size=3)
        a = rng.uniform(-2.0, 2.0, size=(3, 3))
        worst["hat_vee_roundtrip"] = max(
            worst["hat_vee_roundtrip"], float(np.max(np.abs(vee(hat(v)) - v)))
        )
        worst["hat_cross"] = max(
            worst["hat_cross"], float(np.max(np.abs(hat(v) @ w - np.cross(v, w))))
        )
        r = exp_so3(v)
        worst["exp_orthogonality"] = max(
            worst["exp_orthogonality"], float(np.linalg.norm(r.T @ r - _EYE3))
        )
        worst["exp_det"] = max(worst["exp_det"], abs(float(np.linalg.det(r)) - 1.0))
        worst["exp_transpose"] = max(
            worst["exp_transpose"], float(np.max(np.abs(exp_so3(-v) - r.T)))
        )
        n = float(np.linalg.norm(v))
        if 0.0 < n:
            vb = v * (rng.uniform(0.0, math.pi - 2e-6) / n)
            worst["log_roundtrip"] = max(
                worst["log_roundtrip"], float(np.max(np.abs(log_so3(exp_so3(vb)) - vb)))
            )
        lhs = trace_identity(a, v)
        rhs = hat((np.trace(a) * _EYE3 - a) @ v)
        worst["trace_identity"] = max(worst["trace_identity"], float(np.max(np.abs(lhs - rhs))))
        f = _random_rotation(rng)
        worst["conjugation_identity"] = max(
            worst["conjugation_identity"],
            float(np.max(np.abs(f.T @ hat(v) @ f - hat(f.T @ v)))),
        )
    tolerances = {
        "hat_vee_roundtrip": 0.0,
        "hat_cross": 0.0,
        "exp_orthogonality": 1e-14,
        "exp_det": 1e-14,
        "exp_transpose": 1e-14,
        "log_roundtrip": 1e-11,
        "trace_identity": 1e-13,
        "conjugation_identity": 1e-13,
    }
    passed = all(worst[k] <= tolerances[k] for k in tolerances)
    return {"name": "algebra_identities", "passed": passed, "samples": samples,
            "worst": worst, "tolerances": tolerances}


def step_equation_residual_suite(seed: int = 0, samples: int = 1000) -> dict:
    """Substitute the solved relative rotation back into the matrix form of
    the implicit step equation; the reduction to a 3-vector root problem is
    validated here rather than trusted."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        inertia = _random_spd(rng)
        omega = rng.uniform(-3.0, 3.0, size=3)
        h = rng.uniform(1e-4, 0.05)
        f = solve_step_equation(omega, inertia, h)
        residual = h * hat(inertia.j @ omega) - (f @ inertia.jd - inertia.jd @ f.T)
        worst = max(worst, float(np.linalg.norm(residual)))
    return {"name": "step_equation_residual", "passed": worst < 1e-13,
            "samples": samples, "worst": worst, "tolerance": 1e-13}


def conservation_suite(
    inertia: InertiaModel | None = None,
    omega0=(1.0, 0.5, -0.3),
    h: float = 0.002,
    steps: int = 10_000,
) -> dict:
    """Free-body run: spatial momentum, group closure without reprojection,
    and bounded energy oscillation with no secular drift."""
    if inertia is None:
        inertia = InertiaModel.diagonal([0.04, 0.19, 0.17])
    state = BodyState(_EYE3.copy(), np.asarray(omega0, dtype=float))
    zero = np.zeros(3)
    pi0 = spatial_momentum(state, inertia)
    e0 = kinetic_energy(state.omega, inertia)
    momentum_drift = 0.0
    ortho_drift = 0.0
    energy_first = 0.0
    energy_second = 0.0
    for k in range(steps):
        state, _ = lgvi_step(state, zero, inertia, h)
        momentum_drift = max(
            momentum_drift, float(np.linalg.norm(spatial_momentum(state, inertia) - pi0))
        )
        ortho_drift = max(
            ortho_drift, float(np.linalg.norm(state.rotation.T @ state.rotation - _EYE3))
        )
        err = abs(kinetic_energy(state.omega, inertia) - e0)
        if k < steps // 2:
            energy_first = max(energy_first, err)
        else:
            energy_second = max(energy_second, err)
    energy_ratio = energy_second / energy_first if energy_first > 0 else math.inf
    passed = (
        momentum_drift < 1e-11
        and ortho_drift < 1e-12
        and abs(energy_ratio - 1.0) <= 0.1
    )
    return {
        "name": "conservation",
        "passed": passed,
        "steps": steps,
        "momentum_drift": momentum_drift,
        "orthogonality_drift": ortho_drift,
        "energy_max_first_half": energy_first,
        "energy_max_second_half": energy_second,
        "energy_ratio": energy_ratio,
    }


def integrator_comparison(
    state0: BodyState,
    inertia: InertiaModel,
    h: float,
    steps: int,
) -> dict:
    """Free-body LGVI and unprojected RK4 side by side; per-step
    orthogonality drift, energy error, and spatial momentum drift."""
    zero = np.zeros(3)
    lgvi = state0
    rk4 = state0
    pi0 = spatial_momentum(state0, inertia)
    e0 = kinetic_energy(state0.omega, inertia)
    rows = {
        "k": [],
        "orthogonality_lgvi": [],
        "orthogonality_rk4": [],
        "energy_error_lgvi": [],
        "energy_error_rk4": [],
        "momentum_drift_lgvi": [],
        "momentum_drift_rk4": [],
    }
    for k in range(1, steps + 1):
        lgvi, _ = lgvi_step(lgvi, zero, inertia, h)
        rk4 = rk4_step(rk4, zero, inertia, h)
        rows["k"].append(k)
        rows["orthogonality_lgvi"].append(
            float(np.linalg.norm(lgvi.rotation.T @ lgvi.rotation - _EYE3))
        )
        rows["orthogonality_rk4"].append(
            float(np.linalg.norm(rk4.rotation.T @ rk4.rotation - _EYE3))
        )
        rows["energy_error_lgvi"].append(abs(kinetic_energy(lgvi.omega, inertia) - e0))
        rows["energy_error_rk4"].append(abs(kinetic_energy(rk4.omega, inertia) - e0))
        rows["momentum_drift_lgvi"].append(
            float(np.linalg.norm(spatial_momentum(lgvi, inertia) - pi0))
        )
        rows["momentum_drift_rk4"].append(
            float(np.linalg.norm(spatial_momentum(rk4, inertia) - pi0))
        )
    return rows


def rk4_contrast_check(steps: int = 10_000, h: float = 0.002) -> dict:
    """Unprojected RK4 must leave the group at least 100x faster than the
    variational integrator over the same free-body run."""
    inertia = InertiaModel.diagonal([0.04, 0.19, 0.17])
    state0 = BodyState(_EYE3.copy(), np.array([1.0, 0.5, -0.3]))
    rows = integrator_comparison(state0, inertia, h, steps)
    lgvi_final = rows["orthogonality_lgvi"][-1]
    rk4_final = rows["orthogonality_rk4"][-1]
    ratio = rk4_final / lgvi_final if lgvi_final > 0 else math.inf
    return {
        "name": "rk4_contrast",
        "passed": ratio >= 100.0,
        "steps": steps,
        "orthogonality_lgvi": lgvi_final,
        "orthogonality_rk4": rk4_final,
        "ratio": ratio,
    }


def multiplier_residual_suite(seed: int = 0, samples: int = 200) -> dict:
    """Substitute propagated costate pairs back into the discrete costate
    equations and record the worst residual."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        inertia = _random_spd(rng)
        h = rng.uniform(5e-4, 5e-3)
        omega = rng.uniform(-2.0, 2.0, size=3)
        f_prev = solve_step_equation(rng.uniform(-2.0, 2.0, size=3), inertia, h)
        f_curr = solve_step_equation(omega, inertia, h)
        lam_prev = Multipliers(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
        lam = propagate_multipliers(lam_prev, f_prev, f_curr, omega, inertia, h)
        worst = max(worst, _multiplier_equation_residual(
            lam_prev, lam, f_prev, f_curr, omega, inertia, h))
    return {"name": "multiplier_residuals", "passed": worst < 1e-12,
            "samples": samples, "worst": worst, "tolerance": 1e-12}


def _multiplier_equation_residual(
    lam_prev: Multipliers,
    lam: Multipliers,
    f_prev: np.ndarray,
    f_curr: np.ndarray,
    omega: np.ndarray,
    inertia: InertiaModel,
    h: float,
) -> float:
    """Max norm of the two discrete costate equations at a propagated pair."""
    j = inertia.j
    t_prev = np.trace(f_prev) * _EYE3 - f_prev
    t_curr = np.trace(f_curr) * _EYE3 - f_curr
    res_r = t_prev @ lam_prev.lam_r - f_curr @ (t_curr @ lam.lam_r)
    b = variation_transfer_matrix(f_curr, inertia, h)
    res_omega = (
        -j @ lam_prev.lam_omega
        + j @ ((f_curr - b.T @ hat(f_curr.T @ (j @ omega))) @ lam.lam_omega)
        + 0.5 * (j @ (b.T @ (t_curr @ lam.lam_r)))
    )
    return max(float(np.linalg.norm(res_r)), float(np.linalg.norm(res_omega)))


def rk4_multiplier_path(
    lam0: Multipliers,
    omegas: np.ndarray,
    inertia: InertiaModel,
    h: float,
) -> list[Multipliers]:
    """Integrate the continuous costate equations with RK4, reading the
    angular velocity from the discrete history (linear interpolation at the
    half steps). Returns costates at every step index."""
    n = len(omegas) - 1
    lam_omega = np.asarray(lam0.lam_omega, dtype=float)
    lam_r = np.asarray(lam0.lam_r, dtype=float)
    out = [Multipliers(lam_r, lam_omega)]

    def rhs(lo, lr, w):
        dlo, dlr = continuous_multiplier_rhs(Multipliers(lr, lo), w, inertia)
        return dlo, dlr

    for k in range(n):
        w0 = omegas[k]
        w1 = omegas[k + 1]
        wm = 0.5 * (w0 + w1)
        k1o, k1r = rhs(lam_omega, lam_r, w0)
        k2o, k2r = rhs(lam_omega + 0.5 * h * k1o, lam_r + 0.5 * h * k1r, wm)
        k3o, k3r = rhs(lam_omega + 0.5 * h * k2o, lam_r + 0.5 * h * k2r, wm)
        k4o, k4r = rhs(lam_omega + h * k3o, lam_r + h * k3r, w1)
        lam_omega = lam_omega + (h / 6.0) * (k1o + 2 * k2o + 2 * k3o + k4o)
        lam_r = lam_r + (h / 6.0) * (k1r + 2 * k2r + 2 * k3r + k4r)
        out.append(Multipliers(lam_r, lam_omega))
    return out


def multiplier_convergence_study(
    h_values=(4e-3, 2e-3, 1e-3),
    total_time: float = 0.4,
    inertia: InertiaModel | None = None,
) -> dict:
    """Discrete-vs-continuous costate error under step halving.

    For each h, run a closed-loop extremal from fixed initial data, then
    integrate the continuous costate equations over the same angular
    velocity history and compare at the fixed time t* = total_time - max(h).
    The observed order (three-point estimate) must be >= 1.
    """
    if inertia is None:
        inertia = InertiaModel.diagonal([0.04, 0.19, 0.17])
    lam0 = Multipliers(np.array([0.2, -0.1, 0.3]), np.array([1.0, 0.5, -0.7]))
    state0 = BodyState(_EYE3.copy(), np.array([0.3, -0.2, 0.4]))
    t_star = total_time - max(h_values)
    errors = []
    for h in h_values:
        n = int(round(total_time / h))
        ext = forward_extremal(state0, lam0, inertia, u_max=0.1, n_steps=n, h=h)
        omegas = np.array([s.omega for s in ext.trajectory.states])
        cont = rk4_multiplier_path(lam0, omegas, inertia, h)
        m = int(round(t_star / h))
        err = max(
            float(np.linalg.norm(ext.multipliers[m].lam_omega - cont[m].lam_omega)),
            float(np.linalg.norm(ext.multipliers[m].lam_r - cont[m].lam_r)),
        )
        errors.append(err)
    order = 0.5 * math.log2(errors[0] / errors[2]) if errors[2] > 0 else math.inf
    return {
        "name": "multiplier_convergence",
        "passed": order >= 1.0,
        "h_values": list(h_values),
        "errors": errors,
        "observed_order": order,
    }


def costate_conditioning_check(steps: int = 200) -> dict:
    """Report the worst conditioning of the lam_omega linear system along a
    representative closed-loop extremal."""
    inertia = InertiaModel.diagonal([0.04, 0.19, 0.17])
    lam0 = Multipliers(np.array([0.2, -0.1, 0.3]), np.array([1.0, 0.5, -0.7]))
    state0 = BodyState(_EYE3.copy(), np.array([0.3, -0.2, 0.4]))
    ext = forward_extremal(state0, lam0, inertia, u_max=0.1, n_steps=steps, h=0.002)
    worst = 0.0
    for k in range(steps):
        a = costate_system_matrix(
            ext.trajectory.relative_rotations[k], ext.trajectory.states[k].omega, inertia, 0.002
        )
        worst = max(worst, float(np.linalg.cond(a)))
    return {"name": "costate_conditioning", "passed": worst < 1e6, "worst_condition": worst}


def run_all(seed: int = 0) -> dict:
    """Full validation battery; `passed` is the conjunction of all checks."""
    checks = [
        algebra_identity_suite(seed=seed),
        step_equation_residual_suite(seed=seed),
        conservation_suite(),
        rk4_contrast_check(),
        multiplier_residual_suite(seed=seed),
        multiplier_convergence_study(),
        costate_conditioning_check(),
    ]
    return {"passed": all(c["passed"] for c in checks), "checks": checks}
