import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attopt.so3 import (
    NearPiRotationError,
    NotSkewError,
    SingularMatrixError,
    conjugation_identity,
    exp_so3,
    hat,
    inv3,
    is_rotation,
    log_so3,
    require_rotation,
    rotation_angle,
    trace_identity,
    vee,
)

EYE = np.eye(3)

finite_component = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite_component, finite_component, finite_component).map(np.array)


def random_rotation(rng, max_angle=math.pi - 0.2):
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    return exp_so3(v * rng.uniform(0.0, max_angle))


def test_hat_zero():
    assert np.array_equal(hat(np.zeros(3)), np.zeros((3, 3)))


def test_hat_basis_vector():
    expected = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    assert np.array_equal(hat(np.array([1.0, 0.0, 0.0])), expected)


def test_hat_matches_cross_product():
    rng = np.random.default_rng(1)
    for _ in range(200):
        v, w = rng.standard_normal(3), rng.standard_normal(3)
        assert np.allclose(hat(v) @ w, np.cross(v, w), atol=1e-15)


def test_vee_inverts_hat_exactly():
    v = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(vee(hat(v)), v)


def test_vee_zero():
    assert np.array_equal(vee(np.zeros((3, 3))), np.zeros(3))


def test_vee_of_antisymmetrized_matrix():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a = rng.standard_normal((3, 3))
        m = a - a.T
        v = vee(m)
        assert np.allclose(hat(v), m, atol=1e-14)


def test_vee_rejects_symmetric_part():
    m = hat(np.array([1.0, 0.0, 0.0]))
    m[0, 0] = 1e-6
    with pytest.raises(NotSkewError):
        vee(m)


def test_exp_identity():
    assert np.array_equal(exp_so3(np.zeros(3)), EYE)


def test_exp_120deg_about_diagonal_axis():
    # 120 degrees about (1,1,1)/sqrt(3) permutes the body axes cyclically.
    axis = np.ones(3) / math.sqrt(3.0)
    r = exp_so3(axis * (2.0 * math.pi / 3.0))
    expected = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert np.allclose(r, expected, atol=1e-14)


def test_exp_orthogonality_random():
    rng = np.random.default_rng(3)
    for _ in range(300):
        r = exp_so3(rng.uniform(-4.0, 4.0, size=3))
        assert np.linalg.norm(r.T @ r - EYE) < 1e-14
        assert abs(np.linalg.det(r) - 1.0) < 1e-14


def test_exp_of_negative_is_transpose():
    rng = np.random.default_rng(4)
    for _ in range(200):
        v = rng.uniform(-3.0, 3.0, size=3)
        assert np.max(np.abs(exp_so3(-v) - exp_so3(v).T)) < 1e-14


def test_log_identity():
    assert np.array_equal(log_so3(EYE), np.zeros(3))


def test_log_roundtrip_specific():
    v = np.array([0.1, -0.2, 0.3])
    assert np.max(np.abs(log_so3(exp_so3(v)) - v)) < 1e-12


def test_log_roundtrip_across_angle_range():
    rng = np.random.default_rng(5)
    for angle in [1e-9, 1e-6, 1e-4, 0.1, 1.0, 2.0, 3.0, math.pi - 1e-3, math.pi - 2e-6]:
        for _ in range(20):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            v = axis * angle
            assert np.max(np.abs(log_so3(exp_so3(v)) - v)) < 1e-11


def test_log_rejects_near_pi():
    axis = np.array([0.0, 1.0, 0.0])
    with pytest.raises(NearPiRotationError):
        log_so3(exp_so3(axis * (math.pi - 5e-7)))


def test_rotation_angle():
    axis = np.array([1.0, 0.0, 0.0])
    for angle in [0.0, 0.3, 1.5, 3.0, math.pi]:
        assert abs(rotation_angle(exp_so3(axis * angle)) - angle) < 1e-12


def test_trace_identity_for_identity_matrix():
    x = np.array([0.4, -0.7, 1.1])
    assert np.allclose(trace_identity(EYE, x), hat(2.0 * x), atol=1e-15)


def test_trace_identity_zero_matrix():
    assert np.array_equal(trace_identity(np.zeros((3, 3)), np.array([1.0, 2.0, 3.0])), np.zeros((3, 3)))


def test_trace_identity_random():
    rng = np.random.default_rng(6)
    for _ in range(300):
        a = rng.standard_normal((3, 3))
        x = rng.standard_normal(3)
        lhs = trace_identity(a, x)
        rhs = hat((np.trace(a) * EYE - a) @ x)
        assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_conjugation_identity_trivial_cases():
    x = np.array([0.2, 0.5, -0.9])
    assert np.allclose(conjugation_identity(EYE, x), hat(x), atol=1e-15)
    f = random_rotation(np.random.default_rng(7))
    assert np.allclose(conjugation_identity(f, np.zeros(3)), np.zeros((3, 3)), atol=1e-15)


def test_conjugation_identity_random():
    rng = np.random.default_rng(8)
    for _ in range(300):
        f = random_rotation(rng)
        x = rng.standard_normal(3)
        assert np.max(np.abs(conjugation_identity(f, x) - hat(f.T @ x))) < 1e-13


def test_require_rotation_rejects_non_orthogonal():
    bad = EYE + 1e-3
    with pytest.raises(ValueError, match="orthonormality"):
        require_rotation(bad)


def test_require_rotation_rejects_reflection():
    reflection = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError, match="determinant"):
        require_rotation(reflection)


def test_is_rotation():
    assert is_rotation(EYE)
    assert not is_rotation(np.zeros((3, 3)))
    assert is_rotation(exp_so3(np.array([0.3, 0.1, -2.0])))


def test_inv3_matches_numpy():
    rng = np.random.default_rng(9)
    for _ in range(200):
        m = rng.standard_normal((3, 3))
        if abs(np.linalg.det(m)) < 1e-3:
            continue
        assert np.allclose(inv3(m), np.linalg.inv(m), atol=1e-10)


def test_inv3_rejects_singular():
    m = np.ones((3, 3))
    with pytest.raises(SingularMatrixError):
        inv3(m)


@given(vec3)
def test_hat_vee_roundtrip_property(v):
    assert np.array_equal(vee(hat(v)), v)


@given(vec3, vec3)
def test_hat_is_cross_product_property(v, w):
    assert np.allclose(hat(v) @ w, np.cross(v, w), atol=1e-12)


@settings(max_examples=50)
@given(vec3)
def test_exp_lands_on_group_property(v):
    r = exp_so3(v)
    assert np.linalg.norm(r.T @ r - EYE) < 1e-13
    assert abs(np.linalg.det(r) - 1.0) < 1e-13


@settings(max_examples=50)
@given(vec3, st.floats(min_value=1e-6, max_value=math.pi - 1e-5))
def test_log_roundtrip_property(v, angle):
    n = np.linalg.norm(v)
    if n == 0.0:
        return
    scaled = v * (angle / n)
    assert np.max(np.abs(log_so3(exp_so3(scaled)) - scaled)) < 1e-11
