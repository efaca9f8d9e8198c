import math

import numpy as np
import pytest

from attopt.dynamics import (
    BodyState,
    InertiaModel,
    NoConvergenceError,
    StepTooLargeError,
    advance,
    continuous_rhs,
    kinetic_energy,
    lgvi_step,
    rk4_step,
    rollout,
    solve_step_equation,
    spatial_momentum,
)
from attopt.so3 import exp_so3, hat

EYE = np.eye(3)
BODY = InertiaModel.diagonal([0.04, 0.19, 0.17])  # elliptic-cylinder example body


def step_equation_residual(f, omega, inertia, h):
    return np.linalg.norm(h * hat(inertia.j @ omega) - (f @ inertia.jd - inertia.jd @ f.T))


class TestInertiaModel:
    def test_shifted_inertia_values(self):
        # jd = 0.5*trace(J)*I - J; for diag(0.04, 0.19, 0.17) the trace is 0.4.
        assert np.allclose(BODY.jd, np.diag([0.16, 0.01, 0.03]), atol=1e-16)

    def test_inverse(self):
        assert np.allclose(BODY.j_inv @ BODY.j, EYE, atol=1e-14)

    def test_rejects_asymmetric(self):
        m = np.diag([1.0, 2.0, 3.0])
        m[0, 1] = 1e-3
        with pytest.raises(ValueError, match="symmetric"):
            InertiaModel(m)

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="positive definite"):
            InertiaModel.diagonal([1.0, -0.1, 0.5])


class TestContinuousRhs:
    def test_equilibrium(self):
        state = BodyState(EYE, np.zeros(3))
        rdot, wdot = continuous_rhs(state, np.zeros(3), BODY)
        assert np.array_equal(rdot, np.zeros((3, 3)))
        assert np.array_equal(wdot, np.zeros(3))

    def test_spherical_body_has_no_gyroscopic_term(self):
        inertia = InertiaModel(np.eye(3))
        state = BodyState(EYE, np.array([0.7, -1.2, 0.4]))
        _, wdot = continuous_rhs(state, np.zeros(3), inertia)
        assert np.allclose(wdot, np.zeros(3), atol=1e-16)

    def test_gyroscopic_torque_hand_computed(self):
        # omega = (1,1,1): J omega = (0.04, 0.19, 0.17),
        # omega x J omega = (-0.02, -0.13, 0.15),
        # wdot = J^{-1} (0.02, 0.13, -0.15) = (1/2, 13/19, -15/17).
        state = BodyState(EYE, np.ones(3))
        rdot, wdot = continuous_rhs(state, np.zeros(3), BODY)
        assert np.allclose(wdot, [0.5, 13.0 / 19.0, -15.0 / 17.0], atol=1e-14)
        assert np.allclose(rdot, hat(np.ones(3)), atol=1e-16)


class TestStepEquation:
    def test_zero_omega_gives_identity(self):
        assert np.array_equal(solve_step_equation(np.zeros(3), BODY, 0.002), EYE)

    def test_residual_specific(self):
        omega = np.array([1.0, 0.5, -0.3])
        f = solve_step_equation(omega, BODY, 0.002)
        assert step_equation_residual(f, omega, BODY, 0.002) < 1e-13

    def test_residual_random(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            axis = rng.standard_normal(3)
            inertia = InertiaModel(
                exp_so3(axis / np.linalg.norm(axis))
                @ np.diag(rng.uniform(0.02, 0.5, 3))
                @ exp_so3(axis / np.linalg.norm(axis)).T
            )
            omega = rng.uniform(-3.0, 3.0, 3)
            h = rng.uniform(1e-4, 0.05)
            f = solve_step_equation(omega, inertia, h)
            assert step_equation_residual(f, omega, inertia, h) < 1e-13

    def test_spherical_body_rotation_axis_parallel_to_omega(self):
        # For J = I the cross term vanishes, so f must be parallel to omega.
        inertia = InertiaModel(np.eye(3))
        omega = np.array([0.4, -0.2, 0.8])
        f = solve_step_equation(omega, inertia, 0.01)
        from attopt.so3 import log_so3

        v = log_so3(f)
        cosine = v @ omega / (np.linalg.norm(v) * np.linalg.norm(omega))
        assert abs(cosine - 1.0) < 1e-12
        assert step_equation_residual(f, omega, inertia, 0.01) < 1e-13

    def test_small_step_limit_recovers_omega(self):
        from attopt.so3 import log_so3

        omega = np.array([1.0, 0.5, -0.3])
        for h in [1e-3, 1e-4, 1e-5]:
            v = log_so3(solve_step_equation(omega, BODY, h))
            assert np.linalg.norm(v / h - omega) < 5.0 * h

    def test_finite_difference_jacobian_reaches_same_root(self):
        omega = np.array([1.3, -0.7, 0.2])
        fa = solve_step_equation(omega, BODY, 0.004, jacobian="analytic")
        fd = solve_step_equation(omega, BODY, 0.004, jacobian="finite-difference")
        assert np.max(np.abs(fa - fd)) < 1e-12

    def test_no_convergence_for_oversized_step(self):
        with pytest.raises(NoConvergenceError):
            solve_step_equation(np.array([200.0, 0.0, 0.0]), InertiaModel(np.eye(3)), 0.01)

    def test_step_angle_guard(self):
        # Empirically found input whose Newton root has angle >= pi/2.
        omega = np.array([8.85062256, 3.35486746, 7.72845349])
        with pytest.raises(StepTooLargeError):
            solve_step_equation(omega, BODY, 0.0857469625578887)

    def test_rejects_unknown_jacobian_mode(self):
        with pytest.raises(ValueError, match="jacobian"):
            solve_step_equation(np.zeros(3), BODY, 0.002, jacobian="nope")


class TestLgviStep:
    def test_equilibrium_fixed_point(self):
        state = BodyState(EYE, np.zeros(3))
        new, f = lgvi_step(state, np.zeros(3), BODY, 0.002)
        assert np.array_equal(new.rotation, EYE)
        assert np.array_equal(new.omega, np.zeros(3))
        assert np.array_equal(f, EYE)

    def test_single_step_momentum_exact(self):
        state = BodyState(exp_so3(np.array([0.2, -0.4, 0.9])), np.array([1.0, 0.5, -0.3]))
        new, _ = lgvi_step(state, np.zeros(3), BODY, 0.002)
        assert np.linalg.norm(
            spatial_momentum(new, BODY) - spatial_momentum(state, BODY)
        ) < 1e-12

    def test_long_run_group_closure(self):
        # 1e5 unforced steps with no reprojection anywhere.
        state = BodyState(EYE, np.array([1.0, 0.5, -0.3]))
        zero = np.zeros(3)
        for _ in range(100_000):
            state, _ = lgvi_step(state, zero, BODY, 0.002)
        assert np.linalg.norm(state.rotation.T @ state.rotation - EYE) < 1e-12


class TestRk4:
    def test_equilibrium_fixed_point(self):
        state = BodyState(EYE, np.zeros(3))
        new = rk4_step(state, np.zeros(3), BODY, 0.002)
        assert np.allclose(new.rotation, EYE, atol=1e-16)
        assert np.array_equal(new.omega, np.zeros(3))

    def test_agrees_with_lgvi_to_second_order(self):
        # The single-step difference shrinks at observed order 2 (the
        # finite-h estimate approaches 2 from below, hence the margin).
        state = BodyState(exp_so3(np.array([0.3, 0.1, -0.2])), np.array([0.8, -0.5, 0.3]))
        u = np.array([0.05, -0.02, 0.01])
        diffs = []
        for h in [4e-3, 2e-3, 1e-3]:
            a = rk4_step(state, u, BODY, h)
            b, _ = lgvi_step(state, u, BODY, h)
            diffs.append(
                np.linalg.norm(a.rotation - b.rotation) + np.linalg.norm(a.omega - b.omega)
            )
        order_01 = math.log2(diffs[0] / diffs[1])
        order_12 = math.log2(diffs[1] / diffs[2])
        assert order_01 >= 1.9
        assert order_12 >= 1.9

    def test_unprojected_drift_grows_past_1e10(self):
        # The per-step orthogonality defect of flat RK4 scales like
        # (h |omega|)^6, so a moderately fast spin makes the drift signal
        # dominate rounding noise within 1e4 steps.
        state = BodyState(EYE, np.array([5.0, 2.5, -1.5]))
        zero = np.zeros(3)
        checkpoints = []
        for k in range(1, 10_001):
            state = rk4_step(state, zero, BODY, 0.002)
            if k % 2000 == 0:
                checkpoints.append(np.linalg.norm(state.rotation.T @ state.rotation - EYE))
        assert checkpoints[-1] > 1e-10
        assert all(b > a for a, b in zip(checkpoints, checkpoints[1:]))


class TestRollout:
    def test_zero_controls_from_rest_is_constant(self):
        traj = rollout(BodyState(EYE, np.zeros(3)), [np.zeros(3)] * 50, BODY, 0.002)
        for s in traj.states:
            assert np.array_equal(s.rotation, EYE)
            assert np.array_equal(s.omega, np.zeros(3))

    def test_states_linked_by_relative_rotations(self):
        rng = np.random.default_rng(11)
        controls = rng.uniform(-0.1, 0.1, size=(100, 3))
        traj = rollout(BodyState(EYE, np.array([0.3, -0.1, 0.2])), controls, BODY, 0.002)
        for k in range(traj.n_steps):
            linked = traj.states[k].rotation @ traj.relative_rotations[k]
            assert np.max(np.abs(traj.states[k + 1].rotation - linked)) < 1e-13

    def test_single_axis_work_energy_bookkeeping(self):
        # Constant torque on the first axis of the diagonal body spins it up
        # with no cross coupling; the energy gained must match the summed
        # work terms h*u.w_{k+1} - 0.5*h^2*u.J^{-1}u exactly.
        u = np.array([0.1, 0.0, 0.0])
        n, h = 1000, 0.002
        traj = rollout(BodyState(EYE, np.zeros(3)), [u] * n, BODY, h)
        e0 = kinetic_energy(traj.states[0].omega, BODY)
        e_final = kinetic_energy(traj.states[-1].omega, BODY)
        work = sum(
            h * float(u @ traj.states[k + 1].omega) - 0.5 * h * h * float(u @ (BODY.j_inv @ u))
            for k in range(n)
        )
        assert abs(e_final - (e0 + work)) < 1e-8 * abs(e_final)

    def test_general_control_energy_bookkeeping(self):
        # Generic controls: include the free-step energy exchange term
        # 0.5 pi^T (F J^{-1} F^T - J^{-1}) pi so the identity is exact.
        rng = np.random.default_rng(12)
        n, h = 400, 0.002
        controls = rng.uniform(-0.1, 0.1, size=(n, 3))
        traj = rollout(BodyState(EYE, np.array([0.5, -0.2, 0.1])), controls, BODY, h)
        e0 = kinetic_energy(traj.states[0].omega, BODY)
        e_final = kinetic_energy(traj.states[-1].omega, BODY)
        total = e0
        for k in range(n):
            u = traj.controls[k]
            f = traj.relative_rotations[k]
            pi_k = BODY.j @ traj.states[k].omega
            free_exchange = 0.5 * float(pi_k @ ((f @ (BODY.j_inv @ (f.T @ pi_k))) - BODY.j_inv @ pi_k))
            total += (
                h * float(u @ traj.states[k + 1].omega)
                - 0.5 * h * h * float(u @ (BODY.j_inv @ u))
                + free_exchange
            )
        assert abs(e_final - total) < 1e-12 * max(1.0, abs(e_final))

    def test_error_carries_step_index(self):
        controls = [np.zeros(3)] * 3 + [np.array([1e6, 0.0, 0.0])] + [np.zeros(3)] * 3
        with pytest.raises(NoConvergenceError) as excinfo:
            rollout(BodyState(EYE, np.zeros(3)), controls, InertiaModel(np.eye(3)), 0.1)
        assert excinfo.value.step == 4

    def test_rejects_empty_controls(self):
        with pytest.raises(ValueError):
            rollout(BodyState(EYE, np.zeros(3)), [], BODY, 0.002)


class TestConservation:
    def test_momentum_and_closure_10k_steps(self):
        state = BodyState(EYE, np.array([1.0, 0.5, -0.3]))
        zero = np.zeros(3)
        pi0 = spatial_momentum(state, BODY)
        worst_mom, worst_orth = 0.0, 0.0
        for _ in range(10_000):
            state, _ = lgvi_step(state, zero, BODY, 0.002)
            worst_mom = max(worst_mom, np.linalg.norm(spatial_momentum(state, BODY) - pi0))
            worst_orth = max(
                worst_orth, np.linalg.norm(state.rotation.T @ state.rotation - EYE)
            )
        assert worst_mom < 1e-11
        assert worst_orth < 1e-12

    def test_free_energy_conserved_to_rounding(self):
        # The discrete free-body flow stays on the exact intersection of the
        # momentum sphere and the energy ellipsoid, so the kinetic energy is
        # conserved exactly: the only residual is accumulated rounding, far
        # below any h^2-sized oscillation.
        state = BodyState(EYE, np.array([1.0, 0.5, -0.3]))
        zero = np.zeros(3)
        e0 = kinetic_energy(state.omega, BODY)
        worst = 0.0
        for _ in range(10_000):
            state, _ = lgvi_step(state, zero, BODY, 0.002)
            worst = max(worst, abs(kinetic_energy(state.omega, BODY) - e0))
        assert worst < 1e-12

    def test_free_energy_error_is_h_independent(self):
        # Exact conservation means no h^2 signal: a 25x larger step must not
        # produce a measurably larger energy error over the same duration.
        def max_energy_err(h, steps):
            state = BodyState(EYE, np.array([1.0, 0.5, -0.3]))
            e0 = kinetic_energy(state.omega, BODY)
            worst = 0.0
            for _ in range(steps):
                state, _ = lgvi_step(state, np.zeros(3), BODY, h)
                worst = max(worst, abs(kinetic_energy(state.omega, BODY) - e0))
            return worst

        assert max_energy_err(0.05, 400) < 1e-13
        assert max_energy_err(0.002, 10_000) < 1e-12


def test_advance_matches_update_equations():
    state = BodyState(exp_so3(np.array([0.1, 0.2, -0.3])), np.array([0.4, -0.1, 0.6]))
    f = solve_step_equation(state.omega, BODY, 0.002)
    u = np.array([0.03, -0.05, 0.02])
    new = advance(state, f, u, BODY, 0.002)
    assert np.allclose(new.rotation, state.rotation @ f, atol=1e-16)
    expected_momentum = f.T @ (BODY.j @ state.omega) + 0.002 * u
    assert np.allclose(BODY.j @ new.omega, expected_momentum, atol=1e-15)
