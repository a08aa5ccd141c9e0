"""
Tests for the SO(3) helpers.
"""

import numpy as np
import pytest

from errors import NearPiAngle, NotRotation, NotSkew
from geometry import (
    cayley,
    cayley_inverse,
    check_rotation,
    ddexp_ad,
    dexp_ad,
    dexp_so3_matrix,
    exp_so3,
    hat,
    log_so3,
    orthogonality_error,
    rotation_angle,
    vee,
)

from .conftest import random_rotation_vector

QUARTER_TURN_Z = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def test_hat_layout_and_cross_product(rng):
    assert np.array_equal(hat([1.0, 2.0, 3.0]), np.array([[0.0, -3.0, 2.0], [3.0, 0.0, -1.0], [-2.0, 1.0, 0.0]]))
    for _ in range(10):
        v, w = rng.normal(size=3), rng.normal(size=3)
        assert np.allclose(hat(v) @ w, np.cross(v, w), atol=1e-14)
        assert np.array_equal(vee(hat(v)), v)


def test_vee_rejects_symmetric_part():
    with pytest.raises(NotSkew):
        vee(np.eye(3))
    # below the tolerance the symmetric part is dropped
    M = hat([0.1, 0.2, 0.3]) + 1e-12 * np.eye(3)
    assert np.allclose(vee(M), [0.1, 0.2, 0.3], atol=1e-15)


def test_exp_examples():
    assert np.array_equal(exp_so3(np.zeros(3)), np.eye(3))
    assert np.allclose(exp_so3([0.0, 0.0, np.pi / 2]), QUARTER_TURN_Z, atol=1e-15)


def test_exp_is_rotation_and_log_inverts(rng):
    for _ in range(20):
        f = random_rotation_vector(rng, np.pi - 1e-3)
        F = exp_so3(f)
        assert orthogonality_error(F) < 1e-14
        assert np.linalg.det(F) > 0.0
        assert np.allclose(log_so3(F), f, atol=1e-12)
        assert rotation_angle(F) == pytest.approx(np.linalg.norm(f), abs=1e-12)


def test_small_angle_branch_is_accurate():
    f = np.array([3e-9, -1e-9, 2e-9])
    F = exp_so3(f)
    assert np.allclose(F, np.eye(3) + hat(f), atol=1e-16)
    assert np.allclose(log_so3(F), f, rtol=1e-7, atol=1e-24)
    # either side of the Taylor switch gives the same answer
    for theta in (0.99e-4, 1.01e-4):
        g = np.array([theta, 0.0, 0.0])
        assert np.allclose(log_so3(exp_so3(g)), g, rtol=1e-10, atol=0.0)


def test_log_refuses_half_turn():
    with pytest.raises(NearPiAngle):
        log_so3(exp_so3([np.pi, 0.0, 0.0]))
    with pytest.raises(NearPiAngle):
        log_so3(np.diag([1.0, -1.0, -1.0]))


def test_cayley_examples(rng):
    assert np.array_equal(cayley(np.zeros(3)), np.eye(3))
    # rotation by 2 arctan(|f|) about f
    assert np.allclose(cayley([0.0, 0.0, 1.0]), QUARTER_TURN_Z, atol=1e-15)
    for _ in range(10):
        f = rng.normal(size=3)
        F = cayley(f)
        assert orthogonality_error(F) < 1e-14
        assert np.allclose(cayley_inverse(F), f, atol=1e-12)
        assert rotation_angle(F) == pytest.approx(2.0 * np.arctan(np.linalg.norm(f)), abs=1e-12)


def test_dexp_series_matches_closed_form(rng):
    for _ in range(20):
        xi = random_rotation_vector(rng, 2.0)
        v = rng.normal(size=3)
        assert np.allclose(dexp_ad(xi, v), dexp_so3_matrix(xi) @ v, atol=1e-13)


def test_dexp_fixes_its_own_argument_and_truncation_is_stable(rng):
    xi = random_rotation_vector(rng, 1.5)
    assert np.allclose(dexp_ad(xi, xi), xi, atol=1e-15)
    v = rng.normal(size=3)
    assert np.allclose(dexp_ad(xi, v), dexp_ad(xi, v, max_terms=60), atol=1e-16)
    assert np.array_equal(dexp_ad(np.zeros(3), v), v)
    assert np.allclose(ddexp_ad(np.zeros(3), v), 0.5 * v, atol=0.0)


def test_dexp_is_derivative_of_exp(rng):
    # d/dt exp(xi + t v) exp(-xi) at t = 0 is hat(dexp_{ad xi} v)
    xi = random_rotation_vector(rng, 1.0)
    v = rng.normal(size=3)
    eps = 1e-6
    dF = (exp_so3(xi + eps * v) - exp_so3(xi - eps * v)) / (2.0 * eps)
    left = vee(dF @ exp_so3(xi).T, tol=1e-8)
    assert np.allclose(left, dexp_ad(xi, v), atol=1e-8)


def test_orthogonality_error_and_rotation_check():
    assert orthogonality_error(2.0 * np.eye(3)) == pytest.approx(np.sqrt(27.0), rel=1e-15)
    assert orthogonality_error(np.eye(3)) == 0.0
    with pytest.raises(NotRotation):
        check_rotation(2.0 * np.eye(3))
    with pytest.raises(NotRotation):
        check_rotation(np.diag([1.0, 1.0, -1.0]))
    assert np.array_equal(check_rotation(QUARTER_TURN_Z), QUARTER_TURN_Z)
