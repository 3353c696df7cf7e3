"""scanloc: scan-matching-aided localization.

Point-to-plane ICP with a resolution-aware closed-form covariance, an
invariant EKF and a multiplicative EKF fusing wheel odometry with the
registration output, plus a deterministic simulator and an experiment
harness for comparing the two filters.
"""

from .filters import (BodyVelocity, FilterState, PoseMeasurement, UpdateOutcome,
                      iekf_update, invariant_error_dynamics, mekf_update, predict,
                      update)
from .icp import (Correspondences, DegenerateGeometryError, IcpParams, IcpResult,
                  MatchingFailedError, RegistrationError, RegistrationNoiseModel,
                  covariance_hessian, covariance_resolution, icp_register,
                  match_correspondences, solve_point_to_plane)
from .pointcloud import (PointCloud, SpatialIndex, estimate_normals, load_cloud,
                         normal_space_sample, save_cloud)
from .pose import Pose
from .so3 import exp_so3, log_so3, orthonormalize, skew, skew_part, unskew

__all__ = [
    "BodyVelocity", "FilterState", "PoseMeasurement", "UpdateOutcome",
    "iekf_update", "invariant_error_dynamics", "mekf_update", "predict", "update",
    "Correspondences", "DegenerateGeometryError", "IcpParams", "IcpResult",
    "MatchingFailedError", "RegistrationError", "RegistrationNoiseModel",
    "covariance_hessian", "covariance_resolution", "icp_register",
    "match_correspondences", "solve_point_to_plane",
    "PointCloud", "SpatialIndex", "estimate_normals", "load_cloud",
    "normal_space_sample", "save_cloud",
    "Pose", "exp_so3", "log_so3", "orthonormalize", "skew", "skew_part", "unskew",
]

__version__ = "0.1.0"
