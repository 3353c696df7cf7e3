import numpy as np
import pytest

from scanloc.so3 import (exp_so3, is_rotation, log_so3, orthonormalize,
                         renormalize, skew, skew_part, unskew)


def random_vectors(rng, n, max_norm):
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(1e-6, max_norm, size=(n, 1))


def test_skew_zero():
    assert np.array_equal(skew([0, 0, 0]), np.zeros((3, 3)))


def test_skew_matches_cross_product():
    assert np.allclose(skew([1, 2, 3]) @ [4, 5, 6], [-3, 6, -3])
    rng = np.random.default_rng(1)
    for _ in range(100):
        v, w = rng.standard_normal((2, 3))
        assert np.allclose(skew(v) @ w, np.cross(v, w), atol=1e-12)


def test_skew_antisymmetric():
    s = skew([0.3, -1.1, 2.0])
    assert np.array_equal(s + s.T, np.zeros((3, 3)))


def test_unskew_inverts_skew():
    assert np.array_equal(unskew(np.zeros((3, 3))), np.zeros(3))
    v = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(unskew(skew(v)), v)
    assert np.allclose(skew(unskew(skew(v))), skew(v))


def test_unskew_rejects_symmetric_part():
    bad = skew([1.0, 0.0, 0.0])
    bad[0, 0] = 1e-3
    with pytest.raises(ValueError):
        unskew(bad)


def test_exp_identity_and_quarter_turn():
    assert np.allclose(exp_so3([0, 0, 0]), np.eye(3))
    expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.allclose(exp_so3([0, 0, np.pi / 2]), expected, atol=1e-12)


def test_exp_inverse_is_exp_of_negative():
    v = np.array([0.2, 0.5, -0.3])
    assert np.allclose(exp_so3(v) @ exp_so3(-v), np.eye(3), atol=1e-12)


def test_exp_outputs_are_rotations():
    rng = np.random.default_rng(2)
    for v in random_vectors(rng, 1000, 3.0):
        R = exp_so3(v)
        assert np.linalg.norm(R.T @ R - np.eye(3)) < 1e-9
        assert abs(np.linalg.det(R) - 1.0) < 1e-9


def test_log_identity_and_quarter_turn():
    assert np.allclose(log_so3(np.eye(3)), np.zeros(3))
    assert np.allclose(log_so3(exp_so3([0, 0, np.pi / 2])), [0, 0, np.pi / 2], atol=1e-12)


def test_log_rejects_near_pi():
    with pytest.raises(ValueError):
        log_so3(exp_so3([np.pi - 1e-9, 0, 0]))


def test_roundtrip_sweep():
    rng = np.random.default_rng(3)
    worst = 0.0
    for v in random_vectors(rng, 1000, 3.0):
        worst = max(worst, np.linalg.norm(log_so3(exp_so3(v)) - v))
    assert worst < 1e-9


def test_roundtrip_tiny_angles():
    rng = np.random.default_rng(4)
    for v in random_vectors(rng, 200, 1e-7):
        assert np.linalg.norm(log_so3(exp_so3(v)) - v) < 1e-15


def test_skew_part_properties():
    assert np.array_equal(skew_part(np.eye(3)), np.zeros((3, 3)))
    # small rotation: skew_part recovers the generator to third order
    v = np.array([1e-3, 0.0, 0.0])
    assert np.allclose(unskew(skew_part(exp_so3(v))), v, atol=1e-9)
    # quarter turn about z: (R - R^T)/2 = sin(pi/2) * skew(e_z)
    quarter = exp_so3([0, 0, np.pi / 2])
    assert np.allclose(skew_part(quarter), skew([0, 0, 1.0]) * np.sin(np.pi / 2), atol=1e-12)


def test_skew_part_always_antisymmetric():
    rng = np.random.default_rng(5)
    for v in random_vectors(rng, 50, 3.0):
        s = skew_part(exp_so3(v))
        assert np.array_equal(s, -s.T)


def test_skew_part_small_angle_regime():
    rng = np.random.default_rng(6)
    for v in random_vectors(rng, 200, 1e-3):
        err = np.linalg.norm(unskew(skew_part(exp_so3(v))) - v)
        assert err <= 1e-6


def test_small_angle_first_order_bound():
    rng = np.random.default_rng(7)
    for v in random_vectors(rng, 500, 0.1):
        defect = np.linalg.norm(exp_so3(v) - (np.eye(3) + skew(v)))
        assert defect <= np.dot(v, v)


def test_orthonormalize_and_renormalize():
    rng = np.random.default_rng(8)
    R = exp_so3([0.3, -0.2, 0.9])
    drifted = R + 1e-6 * rng.standard_normal((3, 3))
    fixed = orthonormalize(drifted)
    assert is_rotation(fixed, tol=1e-12)
    assert np.linalg.norm(fixed - R) < 1e-5
    # below threshold the matrix passes through untouched
    assert renormalize(R) is R
    assert is_rotation(renormalize(drifted), tol=1e-9)
