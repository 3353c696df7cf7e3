"""Point-to-plane ICP registration and covariance of its output.

The registration loop follows the select / match / minimize / iterate scheme:
normal-space sampling of source points, nearest-neighbor matching with
distance and normal-angle gates, and a linearized point-to-plane solve

    minimize over x = [x_R; x_T]   sum_i ((a_i x n_i) . x_R + n_i . x_T + n_i . (a_i - b_i))^2

whose normal equations are A x = -b with A = sum H_i^T H_i,
H_i = [(a_i x n_i)^T  n_i^T]. A fixed iteration count is used (no early
stop); convergence is reported as a diagnostic only.

Two covariance estimators for the resulting 6-vector are provided:

* ``covariance_hessian``: sigma^2 A^{-1}, the classical i.i.d.-residual
  result. For a resolution-limited depth camera this is wildly
  overoptimistic (it shrinks as 1/N with the pair count).
* ``covariance_resolution``: delta^2 (N / N_p) A^{-1}, which models the
  dominant, correlated depth-resolution errors of scale ``delta`` shared
  within each of the N_p normal-space buckets. In well-constrained scenes its
  diagonal is on the order of delta^2.

A also doubles as an observability probe: geometry that leaves rigid motions
unconstrained (a single plane, say) makes A rank deficient, and the null
directions name the unobservable motions.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .pointcloud import PointCloud, SpatialIndex, estimate_normals, normal_space_sample
from .pose import Pose
from .so3 import exp_so3, log_so3, renormalize

_RANK_EIG_RATIO = 1e-10
_CONVERGED_STEP = 1e-8


class RegistrationError(RuntimeError):
    """Base class for registration failures."""


class MatchingFailedError(RegistrationError):
    """No correspondence survived the gates."""

    def __init__(self, message, iteration=None, cost_trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.cost_trace = cost_trace


class DegenerateGeometryError(RegistrationError):
    """The constraint matrix is rank deficient or numerically unusable.

    Carries the rank, condition number and an orthonormal basis of the
    null space (rows are unobservable motion directions in [x_R; x_T]).
    """

    def __init__(self, message, rank, condition, null_directions, A, iteration=None):
        super().__init__(message)
        self.rank = rank
        self.condition = condition
        self.null_directions = null_directions
        self.A = A
        self.iteration = iteration


@dataclass
class RegistrationNoiseModel:
    """Sensor error scales entering the covariance estimators.

    ``resolution``: depth resolution error scale (meters), the dominant
    correlated error. ``sigma``: i.i.d. residual noise (meters), used by the
    classical estimator. ``n_buckets``: number of normal-space buckets the
    correlated errors are shared within.
    """

    resolution: float = 0.01
    sigma: float = 0.01
    n_buckets: int = 3

    def __post_init__(self):
        if self.resolution <= 0.0:
            raise ValueError("resolution must be positive")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.n_buckets < 1:
            raise ValueError("n_buckets must be at least 1")


@dataclass
class IcpParams:
    n_select: int = 3000
    iterations: int = 25
    max_pair_distance: float = 0.25          # m
    max_normal_angle: float = np.deg2rad(45.0)
    planarity_max: float = 0.005             # m, "away from edges" gate
    normal_neighbors: int = 10
    noise: RegistrationNoiseModel = field(default_factory=RegistrationNoiseModel)
    condition_limit: float = 1e12
    seed: object = 0                          # int or SeedSequence


@dataclass
class Correspondences:
    """Matched pairs: aligned source points, target points, target normals."""

    a: np.ndarray
    b: np.ndarray
    n: np.ndarray

    @property
    def count(self):
        return self.a.shape[0]


@dataclass
class CovarianceEstimate:
    matrix: np.ndarray
    degenerate: bool = False
    null_directions: np.ndarray | None = None
    # Variance along each eigendirection of A; np.inf marks unobservable ones.
    direction_variances: np.ndarray | None = None


@dataclass
class IcpResult:
    x: np.ndarray                    # [x_R (rad); x_T (m)] in the predicted body frame
    A: np.ndarray                    # sum H_i^T H_i from the final correspondences
    rank: int
    condition: float
    n_pairs: int
    cost_trace: np.ndarray           # point-to-plane cost at each iteration start
    step_norms: np.ndarray           # |x| of each incremental solve
    converged: bool
    covariance: np.ndarray | None = None
    covariance_degenerate: bool = False
    null_directions: np.ndarray | None = None


def match_correspondences(source_pts, source_normals, target_index, target_cloud,
                          max_dist=0.25, max_angle=np.deg2rad(45.0)):
    """Nearest-neighbor matches with distance and normal-angle rejection.

    One candidate per source point; pairs farther apart than ``max_dist`` or
    whose normals disagree by more than ``max_angle`` are dropped, as are
    matches into target points with invalid normals. The correspondence
    normal is the target's.
    """
    if not target_cloud.has_normals():
        raise ValueError("target cloud needs estimated normals")
    source_pts = np.atleast_2d(source_pts)
    source_normals = np.atleast_2d(source_normals)

    idx, dist = target_index.nearest_many(source_pts)
    keep = dist <= max_dist
    if target_cloud.normal_valid is not None:
        keep &= target_cloud.normal_valid[idx]
    tn = target_cloud.normals[idx]
    cos_gate = np.cos(max_angle)
    keep &= np.einsum("ij,ij->i", source_normals, tn) >= cos_gate

    if not np.any(keep):
        raise MatchingFailedError(
            f"no correspondence survived the gates ({source_pts.shape[0]} candidates)")
    return Correspondences(source_pts[keep], target_cloud.points[idx[keep]], tn[keep])


def linear_system(corrs):
    """Rows H_i = [(a_i x n_i)^T  n_i^T] and residuals y_i = n_i . (a_i - b_i)."""
    H = np.hstack([np.cross(corrs.a, corrs.n), corrs.n])
    y = np.einsum("ij,ij->i", corrs.n, corrs.a - corrs.b)
    return H, y


def _analyze(A, condition_limit):
    eigvals, eigvecs = np.linalg.eigh(A)
    top = eigvals[-1]
    if top <= 0.0:
        return 0, np.inf, eigvecs.T
    observable = eigvals > _RANK_EIG_RATIO * top
    rank = int(np.count_nonzero(observable))
    condition = top / eigvals[0] if eigvals[0] > 0 else np.inf
    null_dirs = eigvecs[:, ~observable].T
    if rank == 6 and condition >= condition_limit:
        return rank, condition, eigvecs[:, [0]].T
    return rank, condition, null_dirs


def solve_point_to_plane(corrs, condition_limit=1e12):
    """Minimize the linearized point-to-plane cost; returns (x, residual cost).

    Solves A x = -b through a symmetric positive-definite factorization.
    Raises :class:`DegenerateGeometryError` when A is rank deficient or its
    condition number exceeds ``condition_limit``, reporting the unobservable
    motion directions.
    """
    if corrs.count < 6:
        raise DegenerateGeometryError(
            f"only {corrs.count} correspondences, need at least 6",
            rank=0, condition=np.inf, null_directions=np.eye(6), A=np.zeros((6, 6)))
    H, y = linear_system(corrs)
    A = H.T @ H
    b = H.T @ y
    rank, condition, null_dirs = _analyze(A, condition_limit)
    if rank < 6 or condition >= condition_limit:
        raise DegenerateGeometryError(
            f"constraint matrix unusable (rank {rank}, condition {condition:.3e})",
            rank=rank, condition=condition, null_directions=null_dirs, A=A)
    x = cho_solve(cho_factor(A), -b)
    residual = H @ x + y
    return x, float(residual @ residual)


def covariance_hessian(result, sigma):
    """Classical covariance sigma^2 A^{-1} assuming i.i.d. residual noise.

    Kept for comparison: with a dense resolution-limited sensor it understates
    the uncertainty by orders of magnitude, because the independence
    assumption lets the estimate tighten as 1/N.
    """
    rank, condition, null_dirs = _analyze(result.A, np.inf)
    if rank < 6:
        raise DegenerateGeometryError(
            f"constraint matrix rank {rank} < 6", rank=rank, condition=condition,
            null_directions=null_dirs, A=result.A)
    cov = sigma * sigma * np.linalg.inv(result.A)
    return 0.5 * (cov + cov.T)


def covariance_resolution(result, model, n_pairs=None):
    """Resolution-dominated covariance: delta^2 (N / N_p) A^{-1}.

    ``n_pairs`` defaults to the correspondence count recorded in ``result``.
    With a rank-deficient A this switches to a diagnostic mode: the returned
    matrix is the pseudo-inverse-based covariance on the observable subspace,
    the unobservable directions are reported with infinite variance, and
    ``degenerate`` is set so that a consuming filter skips the update.
    """
    n = result.n_pairs if n_pairs is None else n_pairs
    scale = model.resolution ** 2 * (n / model.n_buckets)
    eigvals, eigvecs = np.linalg.eigh(result.A)
    top = eigvals[-1] if eigvals[-1] > 0 else 0.0
    observable = eigvals > _RANK_EIG_RATIO * top if top > 0 else np.zeros(6, dtype=bool)
    degenerate = not np.all(observable)

    inv_vals = np.zeros(6)
    inv_vals[observable] = 1.0 / eigvals[observable]
    cov = scale * (eigvecs * inv_vals) @ eigvecs.T
    cov = 0.5 * (cov + cov.T)

    variances = np.full(6, np.inf)
    variances[observable] = scale * inv_vals[observable]
    null_dirs = eigvecs[:, ~observable].T if degenerate else None
    return CovarianceEstimate(cov, degenerate, null_dirs, variances)


def icp_register(source, target, init=None, params=None, target_index=None):
    """Register ``source`` onto ``target`` starting from the predicted pose.

    ``init`` is the prior pose of the source body in the target frame (the
    caller's predicted pose); the source cloud is pre-aligned by it so the
    iterations stay inside the linearization basin. Each iteration draws a
    fresh normal-space sample from one seeded stream, matches, solves, and
    composes the increment in the aligned frame as R <- R exp(x_R),
    T <- T + x_T. Exactly ``params.iterations`` passes run unless matching or
    geometry fails.

    The returned correction ``x`` and its covariance are expressed in the
    body frame of ``init``, i.e. the true pose satisfies, to first order,
    (R_init exp(skew(x_R)), p_init + R_init x_T).
    """
    params = params or IcpParams()
    init = init or Pose.identity()
    if not source.has_normals():
        source = estimate_normals(source, params.normal_neighbors)
    if not target.has_normals():
        raise ValueError("target cloud needs estimated normals (estimate once, reuse)")
    if target_index is None:
        target_index = SpatialIndex(target.points)

    rng = np.random.default_rng(params.seed)
    R0, p0 = init.R, init.p
    Rc = np.eye(3)
    Tc = np.zeros(3)
    costs = []
    steps = []
    corrs = None
    for it in range(params.iterations):
        sel, _ = normal_space_sample(
            source, params.n_select, params.noise.n_buckets, params.planarity_max, rng)
        if sel.size == 0:
            raise MatchingFailedError("no valid source points to sample", iteration=it,
                                      cost_trace=np.array(costs))
        a = (source.points[sel] @ R0.T + p0) @ Rc.T + Tc
        ns = source.normals[sel] @ (Rc @ R0).T
        try:
            corrs = match_correspondences(a, ns, target_index, target,
                                          params.max_pair_distance, params.max_normal_angle)
        except MatchingFailedError as err:
            err.iteration = it
            err.cost_trace = np.array(costs)
            raise
        _, y = linear_system(corrs)
        costs.append(float(y @ y))
        try:
            x, _ = solve_point_to_plane(corrs, params.condition_limit)
        except DegenerateGeometryError as err:
            err.iteration = it
            raise
        Rc = renormalize(Rc @ exp_so3(x[:3]))
        Tc = Tc + x[3:]
        steps.append(float(np.linalg.norm(x)))

    # Total correction, reported in the body frame of the predicted pose.
    x_rot = R0.T @ log_so3(Rc)
    x_trans = R0.T @ (Rc @ p0 + Tc - p0)

    # Constraint matrix in the same frame as x: pull the final matched pairs
    # back through the predicted pose.
    body = Correspondences((corrs.a - p0) @ R0, (corrs.b - p0) @ R0, corrs.n @ R0)
    H, _ = linear_system(body)
    A = H.T @ H
    rank, condition, _ = _analyze(A, params.condition_limit)

    result = IcpResult(
        x=np.concatenate([x_rot, x_trans]),
        A=A,
        rank=rank,
        condition=condition,
        n_pairs=corrs.count,
        cost_trace=np.array(costs),
        step_norms=np.array(steps),
        converged=bool(steps and steps[-1] < _CONVERGED_STEP),
    )
    estimate = covariance_resolution(result, params.noise)
    result.covariance = estimate.matrix
    result.covariance_degenerate = estimate.degenerate
    result.null_directions = estimate.null_directions
    return result


def per_scan_params(params, base_seed, scan_index):
    """Params copy whose sampling stream is fixed by (base_seed, scan_index).

    Both filters of a comparison run must draw identical samples for the same
    scan, and replays from disk must reproduce the original stream.
    """
    seq = np.random.SeedSequence(entropy=(int(base_seed), 0x1C9, int(scan_index)))
    return replace(params, seed=seq)
