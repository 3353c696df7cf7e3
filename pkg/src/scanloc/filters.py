"""Invariant and multiplicative EKFs fusing body-frame odometry with
scan-matching pose corrections.

Both filters share the kinematic prediction

    R' = R exp(skew(omega) dt),   p' = p + R v dt

and a 6x6 error covariance P ordered [attitude error; position error], which
is propagated between measurements by one Euler step of the continuous
Riccati equation  Pdot = A P + P A^T + Q_eff  and corrected discretely when a
scan-matching measurement arrives.

They differ only in the error coordinates, and therefore in the matrices:

* IEKF: the error is the left-invariant pair (R^T Rhat, R^T (phat - p)). Its
  linearized dynamics matrix

      A = [[-skew(omega),  0          ],
           [-skew(v),     -skew(omega)]]

  depends on the measured inputs only, never on the estimated state, which is
  the whole point: the gain sequence is identical no matter how wrong the
  pose estimate is. The measurement matrix is C = -I and the body-frame
  output error equals minus the scan-matching correction vector.

* MEKF: the error is the multiplicative attitude error and the ground-frame
  position error (Rhat^T R, p - phat), giving

      A = [[-skew(omega),    0],
           [-Rhat skew(v),   0]]

  with input-noise map B = blockdiag(-I, -Rhat) and output-noise map
  blockdiag(I, Rhat). All three depend on the current attitude estimate, so
  the gains ride along with it.

Corrections are applied multiplicatively to the attitude in both designs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import chi2

from .pose import Pose
from .so3 import exp_so3, renormalize, skew, skew_part, unskew

KINDS = ("iekf", "mekf")

# 99.9% gate on the 6-dof innovation; outliers are flagged, never rejected.
CHI2_GATE = float(chi2.ppf(0.999, df=6))

_MIN_EIG_FLOOR = -1e-9


@dataclass
class BodyVelocity:
    """Measured body-frame rates: omega (rad/s), v (m/s)."""

    omega: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if not (np.all(np.isfinite(self.omega)) and np.all(np.isfinite(self.v))):
            raise ValueError("body velocity must be finite")


@dataclass
class FilterState:
    pose: Pose
    P: np.ndarray
    t: float = 0.0

    def copy(self):
        return FilterState(self.pose.copy(), self.P.copy(), self.t)


@dataclass
class PoseMeasurement:
    """Scan-matching output: the pose discrepancy seen from the predicted pose.

    ``discrepancy`` is the registration 6-vector [rotation (rad); translation
    (m)] expressed in the body frame the registration was pre-aligned at,
    ``cov`` its 6x6 covariance. ``valid`` is False when registration reported
    unobservable geometry; such measurements must be skipped.
    """

    discrepancy: np.ndarray
    cov: np.ndarray
    valid: bool = True


@dataclass
class UpdateOutcome:
    state: FilterState
    gain: np.ndarray | None = None
    skipped: bool = False
    outlier: bool = False
    innovation: np.ndarray | None = None


def _symmetrize(P):
    return 0.5 * (P + P.T)


def _check_covariance(P, where):
    # Cheap definiteness guard: Cholesky of P shifted by the tolerated floor.
    try:
        np.linalg.cholesky(P - _MIN_EIG_FLOOR * np.eye(6))
    except np.linalg.LinAlgError:
        min_eig = float(np.linalg.eigvalsh(P).min())
        raise FloatingPointError(
            f"covariance lost positive semidefiniteness in {where} "
            f"(min eigenvalue {min_eig:.3e})")


def error_matrix(kind, omega, v, R_est=None):
    """Continuous-time error dynamics matrix A of the chosen filter."""
    A = np.zeros((6, 6))
    A[:3, :3] = -skew(omega)
    if kind == "iekf":
        A[3:, :3] = -skew(v)
        A[3:, 3:] = -skew(omega)
    elif kind == "mekf":
        A[3:, :3] = -R_est @ skew(v)
    else:
        raise ValueError(f"unknown filter kind {kind!r}")
    return A


def effective_process_noise(kind, Q, R_est=None):
    """Input noise mapped through the filter's B matrix: B Q B^T."""
    if kind == "iekf":
        return Q
    B = np.zeros((6, 6))
    B[:3, :3] = -np.eye(3)
    B[3:, 3:] = -R_est
    return B @ Q @ B.T


def predict(state, vel, Q, dt, kind="iekf"):
    """Propagate pose and covariance over one odometry interval.

    The pose integrates the measured rates assuming they are constant over
    ``dt``; P takes one explicit Euler step of the Riccati propagation with
    the A matrix of the chosen filter, then is symmetrized. Raises if P loses
    positive semidefiniteness beyond -1e-9, which indicates a tuning or
    step-size fault.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if kind not in KINDS:
        raise ValueError(f"unknown filter kind {kind!r}")
    R, p = state.pose.R, state.pose.p

    A = error_matrix(kind, vel.omega, vel.v, R)
    Q_eff = effective_process_noise(kind, Q, R)
    P = _symmetrize(state.P + (A @ state.P + state.P @ A.T + Q_eff) * dt)
    _check_covariance(P, "predict")

    pose = Pose(renormalize(R @ exp_so3(vel.omega * dt)), p + R @ (vel.v * dt))
    return FilterState(pose, P, state.t + dt)


def _finish_update(state, pose_new, P, K, dy, S_factor):
    P = _symmetrize(P)
    _check_covariance(P, "update")
    maha = float(dy @ cho_solve(S_factor, dy))
    return UpdateOutcome(
        state=FilterState(pose_new, P, state.t),
        gain=K,
        skipped=False,
        outlier=maha > CHI2_GATE,
        innovation=dy,
    )


def iekf_update(state, meas):
    """Invariant measurement update.

    The invariant output error is E = -discrepancy (registration runs
    pre-aligned at the predicted pose, so its correction vector is exactly
    the negated body-frame output error). With C = -I the gain is
    K = P C^T (C P C^T + R)^{-1} and the correction delta = K E is applied in
    the body frame: Rhat <- Rhat exp(skew(delta_R)), phat <- phat + Rhat
    delta_p. Neither K nor P depends on the pose estimate.
    """
    if not meas.valid:
        return UpdateOutcome(state.copy(), skipped=True)
    P = state.P
    E = -np.asarray(meas.discrepancy, dtype=float)
    S = P + meas.cov                     # C P C^T = P for C = -I
    S_factor = cho_factor(_symmetrize(S))
    K = -cho_solve(S_factor, P.T).T      # P C^T S^{-1}
    delta = K @ E
    R, p = state.pose.R, state.pose.p
    pose = Pose(renormalize(R @ exp_so3(delta[:3])), p + R @ delta[3:])
    P_new = (np.eye(6) + K) @ P          # I - K C with C = -I
    return _finish_update(state, pose, P_new, K, E, S_factor)


def mekf_update(state, meas):
    """Multiplicative measurement update.

    The output errors are rebuilt from the registration vector at the
    predicted pose: the attitude error observation is the rotation part
    directly, the position error observation is Rhat times the translation
    part (a ground-frame displacement). The measurement noise passes through
    blockdiag(I, Rhat), so the innovation covariance, the gain, and hence the
    filter behavior all depend on the attitude estimate.
    """
    if not meas.valid:
        return UpdateOutcome(state.copy(), skipped=True)
    R, p = state.pose.R, state.pose.p
    x = np.asarray(meas.discrepancy, dtype=float)
    dy = np.concatenate([x[:3], R @ x[3:]])

    D = np.eye(6)
    D[3:, 3:] = R
    R_eff = D @ meas.cov @ D.T
    P = state.P
    S_factor = cho_factor(_symmetrize(P + R_eff))
    K = cho_solve(S_factor, P.T).T       # P C^T S^{-1} with C = I
    delta = K @ dy
    pose = Pose(renormalize(R @ exp_so3(delta[:3])), p + delta[3:])
    P_new = (np.eye(6) - K) @ P
    return _finish_update(state, pose, P_new, K, dy, S_factor)


def update(state, meas, kind="iekf"):
    if kind == "iekf":
        return iekf_update(state, meas)
    if kind == "mekf":
        return mekf_update(state, meas)
    raise ValueError(f"unknown filter kind {kind!r}")


def invariant_error_dynamics(eta_R, eta_p, omega, v, gains=None):
    """Exact right-hand side of the invariant error flow.

    ``eta_R`` (rotation matrix) and ``eta_p`` are the invariant attitude and
    position errors; ``gains`` is the 6x6 correction gain matrix (zero when
    omitted). The output errors feeding the gains are reconstructed from the
    error state itself. Returns (d/dt eta_R as a 3x3 matrix, d/dt eta_p).

    This is a reference model for the test suite: linearizing it at identity
    must reproduce the IEKF A matrix (plus the gain matrix when present).
    """
    eta_R = np.asarray(eta_R, dtype=float)
    eta_p = np.asarray(eta_p, dtype=float)
    omega = np.asarray(omega, dtype=float)
    v = np.asarray(v, dtype=float)

    E_R = unskew(skew_part(eta_R), tol=np.inf)
    E_p = eta_R.T @ eta_p
    if gains is None:
        feed_R = np.zeros(3)
        feed_p = np.zeros(3)
    else:
        gains = np.asarray(gains, dtype=float)
        feed_R = gains[:3, :3] @ E_R + gains[:3, 3:] @ E_p
        feed_p = gains[3:, :3] @ E_R + gains[3:, 3:] @ E_p

    W = skew(omega)
    deta_R = -W @ eta_R + eta_R @ W + eta_R @ skew(feed_R)
    deta_p = -W @ eta_p + eta_R @ v - v + eta_R @ feed_p
    return deta_R, deta_p
