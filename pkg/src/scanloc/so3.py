"""Rotation-matrix operations on SO(3): skew maps, exponential, logarithm."""

import numpy as np

# Taylor fallbacks keep relative error below 1e-12 in double precision.
_EXP_TAYLOR_ANGLE = 1e-7
_LOG_TAYLOR_ANGLE = 1e-6
_LOG_MAX_ANGLE = np.pi - 1e-6

__all__ = [
    "skew",
    "unskew",
    "exp_so3",
    "log_so3",
    "skew_part",
    "is_rotation",
    "orthonormalize",
    "renormalize",
]


def skew(v):
    """Antisymmetric matrix S such that S @ w == np.cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def unskew(m, tol=1e-9):
    """Inverse of :func:`skew`. Rejects matrices that are not antisymmetric."""
    m = np.asarray(m, dtype=float)
    defect = np.linalg.norm(m + m.T)
    if defect > tol:
        raise ValueError(f"matrix is not antisymmetric (defect {defect:.3e} > {tol:.1e})")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def exp_so3(v):
    """Matrix exponential of skew(v), in Rodrigues closed form."""
    v = np.asarray(v, dtype=float)
    s = skew(v)
    angle = np.linalg.norm(v)
    if angle < _EXP_TAYLOR_ANGLE:
        # Second-order series avoids the 0/0 in the closed-form coefficients.
        return np.eye(3) + s + 0.5 * (s @ s)
    a = np.sin(angle) / angle
    b = (1.0 - np.cos(angle)) / (angle * angle)
    return np.eye(3) + a * s + b * (s @ s)


def log_so3(R):
    """Rotation vector (angle times unit axis) of R.

    Valid for rotation angles below pi; the axis extraction
    (R - R^T) / (2 sin a) degenerates at half a turn, so inputs within
    1e-6 of pi are rejected.
    """
    R = np.asarray(R, dtype=float)
    cos_angle = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    angle = np.arccos(cos_angle)
    if angle > _LOG_MAX_ANGLE:
        raise ValueError(f"rotation angle {angle:.9f} too close to pi for log_so3")
    if angle < _LOG_TAYLOR_ANGLE:
        scale = 0.5
    else:
        scale = 0.5 * angle / np.sin(angle)
    return scale * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])


def skew_part(R):
    """Antisymmetric part (R - R^T) / 2.

    For R = exp_so3(v) with small ``v`` this approximates skew(v); it is the
    small-angle stand-in for the logarithm and is defined for every matrix.
    """
    R = np.asarray(R, dtype=float)
    return 0.5 * (R - R.T)


def is_rotation(R, tol=1e-9):
    """True when R is orthonormal with determinant +1 within tol."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    defect = np.linalg.norm(R.T @ R - np.eye(3))
    return defect <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def orthonormalize(R):
    """Nearest rotation matrix (polar decomposition via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(R, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def renormalize(R, tol=1e-9):
    """Re-project onto SO(3) only when orthonormality has drifted past tol."""
    if np.linalg.norm(R.T @ R - np.eye(3)) > tol:
        return orthonormalize(R)
    return R
