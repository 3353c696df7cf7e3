"""Rigid-body pose (rotation matrix + position vector)."""

from dataclasses import dataclass, field

import numpy as np

from .so3 import is_rotation, renormalize


@dataclass
class Pose:
    """Pose of a body frame in a reference frame.

    ``R`` maps body-frame vectors into the reference frame, ``p`` is the body
    origin expressed in the reference frame (meters).
    """

    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if not is_rotation(self.R, tol=1e-8):
            raise ValueError("Pose.R is not a rotation matrix")

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def copy(self):
        return Pose(self.R.copy(), self.p.copy())

    def compose(self, other):
        """Pose of ``other`` chained after this one (this frame's parent stays)."""
        return Pose(renormalize(self.R @ other.R), self.R @ other.p + self.p)

    def inverse(self):
        return Pose(self.R.T.copy(), -(self.R.T @ self.p))

    def transform(self, points):
        """Map body-frame points (N, 3) or (3,) into the reference frame."""
        points = np.asarray(points, dtype=float)
        return points @ self.R.T + self.p

    def rotate(self, vectors):
        """Rotate free vectors (directions, normals) without translating."""
        return np.asarray(vectors, dtype=float) @ self.R.T
