import numpy as np
import pytest

from scanloc.pose import Pose
from scanloc.so3 import exp_so3


def test_identity_roundtrip():
    pose = Pose(exp_so3([0.1, 0.2, -0.4]), np.array([1.0, -2.0, 0.5]))
    back = pose.compose(pose.inverse())
    assert np.allclose(back.R, np.eye(3), atol=1e-12)
    assert np.allclose(back.p, 0.0, atol=1e-12)


def test_transform_matches_manual():
    pose = Pose(exp_so3([0, 0, np.pi / 2]), np.array([1.0, 0.0, 0.0]))
    pts = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    out = pose.transform(pts)
    assert np.allclose(out, [[1.0, 1.0, 0.0], [0.0, 0.0, 0.0]], atol=1e-12)
    # rotate leaves free vectors untranslated
    assert np.allclose(pose.rotate([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_compose_associates_with_transform():
    rng = np.random.default_rng(0)
    a = Pose(exp_so3(rng.standard_normal(3) * 0.5), rng.standard_normal(3))
    b = Pose(exp_so3(rng.standard_normal(3) * 0.5), rng.standard_normal(3))
    pts = rng.standard_normal((10, 3))
    assert np.allclose(a.compose(b).transform(pts), a.transform(b.transform(pts)), atol=1e-12)


def test_rejects_non_rotation():
    with pytest.raises(ValueError):
        Pose(np.eye(3) * 2.0, np.zeros(3))
