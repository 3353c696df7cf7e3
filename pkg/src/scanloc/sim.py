"""Deterministic scenario generator: ground-truth trajectories, differential
drive odometry with encoder quantization, and synthetic depth-camera scans of
a planar-patch environment.

Everything is seeded; the same configuration reproduces a bit-identical
sensor log. Default constants mirror the experimental platform: 788 encoder
counts per meter, 0.44 m track width, odometry at 50 Hz, depth scans at 1 Hz,
ground truth at 120 Hz, a 57 x 43 degree depth-camera field of view usable
between 1 and 3 m, and centimeter-scale depth resolution.
"""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .pointcloud import PointCloud, load_ply, save_ply
from .pose import Pose
from .so3 import exp_so3

ODOMETRY_RATE = 50.0
SCAN_RATE = 1.0
TRUTH_RATE = 120.0
COUNTS_PER_METER = 788.0
TRACK_WIDTH = 0.44


# ---------------------------------------------------------------------------
# Environment


@dataclass
class PlanarPatch:
    """Rectangular planar patch: center, unit normal, in-plane axes, half-extents."""

    center: np.ndarray
    normal: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray
    half_u: float
    half_v: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.normal = np.asarray(self.normal, dtype=float)
        self.axis_u = np.asarray(self.axis_u, dtype=float)
        self.axis_v = np.asarray(self.axis_v, dtype=float)
        frame = np.stack([self.axis_u, self.axis_v, self.normal])
        if np.linalg.norm(frame @ frame.T - np.eye(3)) > 1e-9:
            raise ValueError("patch axes and normal must be orthonormal")
        if self.half_u <= 0 or self.half_v <= 0:
            raise ValueError("patch half-extents must be positive")


@dataclass
class Environment:
    patches: list

    @classmethod
    def default_room(cls, seed=0, half_size=2.0, wall_height=1.5, n_boxes=8):
        """Square room: floor, four walls, and seeded box-like landmarks."""
        rng = np.random.default_rng(seed)
        s, h = half_size, wall_height
        patches = [
            # floor
            PlanarPatch([0, 0, 0], [0, 0, 1], [1, 0, 0], [0, 1, 0], s, s),
            PlanarPatch([s, 0, h / 2], [-1, 0, 0], [0, 1, 0], [0, 0, 1], s, h / 2),
            PlanarPatch([-s, 0, h / 2], [1, 0, 0], [0, 1, 0], [0, 0, 1], s, h / 2),
            PlanarPatch([0, s, h / 2], [0, -1, 0], [1, 0, 0], [0, 0, 1], s, h / 2),
            PlanarPatch([0, -s, h / 2], [0, 1, 0], [1, 0, 0], [0, 0, 1], s, h / 2),
        ]
        for _ in range(n_boxes):
            x, y = rng.uniform(-0.8 * s, 0.8 * s, size=2)
            yaw = rng.uniform(0.0, 2.0 * np.pi)
            half_w = rng.uniform(0.15, 0.4)
            height = rng.uniform(0.4, 0.8)
            normal = np.array([np.cos(yaw), np.sin(yaw), 0.0])
            along = np.array([-np.sin(yaw), np.cos(yaw), 0.0])
            patches.append(PlanarPatch([x, y, height / 2], normal, along, [0, 0, 1],
                                       half_w, height / 2))
        return cls(patches)


# ---------------------------------------------------------------------------
# Trajectories


@dataclass
class TrajectorySpec:
    kind: str = "straight"            # straight | circle | stationary
    speed: float = 0.25               # m/s
    radius: float = 1.0               # m, circle only
    duration: float = 10.0            # s
    start: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if self.kind not in ("straight", "circle", "stationary"):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.speed < 0.0:
            raise ValueError("speed must be nonnegative")
        if self.kind == "circle" and self.radius <= 0.0:
            raise ValueError("circle radius must be positive")


@dataclass
class Trajectory:
    """Pose samples with the body velocities that generate them."""

    t: np.ndarray
    R: np.ndarray                     # (K, 3, 3)
    p: np.ndarray                     # (K, 3)
    omega: np.ndarray | None = None   # (K, 3) rad/s, body frame
    v: np.ndarray | None = None       # (K, 3) m/s, body frame

    def __len__(self):
        return self.t.shape[0]

    def pose(self, k):
        return Pose(self.R[k], self.p[k])


def trajectory_state(spec, t):
    """Closed-form pose and body velocity at time ``t`` (scalar)."""
    R0, p0 = spec.start.R, spec.start.p
    if spec.kind == "stationary":
        return Pose(R0.copy(), p0.copy()), np.zeros(3), np.zeros(3)
    if spec.kind == "straight":
        return (Pose(R0.copy(), p0 + R0 @ np.array([spec.speed * t, 0.0, 0.0])),
                np.zeros(3), np.array([spec.speed, 0.0, 0.0]))
    # counter-clockwise circle: constant forward speed, constant turn rate
    w = spec.speed / spec.radius
    theta = w * t
    local = np.array([spec.radius * np.sin(theta),
                      spec.radius * (1.0 - np.cos(theta)), 0.0])
    return (Pose(R0 @ exp_so3([0.0, 0.0, theta]), p0 + R0 @ local),
            np.array([0.0, 0.0, w]), np.array([spec.speed, 0.0, 0.0]))


def generate_trajectory(spec, rate, inclusive_end=False):
    """Sample the closed-form trajectory at ``rate`` Hz from t = 0.

    Yields round(duration * rate) samples starting at t = 0; with
    ``inclusive_end`` the final sample at t = duration is appended as well.
    """
    count = int(round(spec.duration * rate))
    ks = np.arange(count + 1 if inclusive_end else count)
    t = ks / rate
    R = np.empty((t.size, 3, 3))
    p = np.empty((t.size, 3))
    omega = np.empty((t.size, 3))
    v = np.empty((t.size, 3))
    for i, ti in enumerate(t):
        pose, w, vel = trajectory_state(spec, ti)
        R[i], p[i], omega[i], v[i] = pose.R, pose.p, w, vel
    return Trajectory(t, R, p, omega, v)


# ---------------------------------------------------------------------------
# Sensors


@dataclass
class NoiseConfig:
    """Sensor noise scales. Velocity noises are continuous-time densities
    (std per sqrt-second); per-sample standard deviations scale as 1/sqrt(dt).
    """

    sigma_forward: float = 0.01       # m / sqrt(s), forward speed
    sigma_turn: float = 0.02          # rad / sqrt(s), turn rate
    off_axis_factor: float = 0.1      # variance factor for the nominally-zero axes
    depth_resolution: float = 0.01    # m, depth quantization step
    depth_sigma: float = 0.003        # m, random depth noise
    seed: int = 0

    def __post_init__(self):
        for name in ("sigma_forward", "sigma_turn", "off_axis_factor",
                     "depth_resolution", "depth_sigma"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass
class CameraConfig:
    fov_h: float = np.deg2rad(57.0)
    fov_v: float = np.deg2rad(43.0)
    width: int = 160
    height: int = 120
    min_depth: float = 1.0            # m, usable range lower bound
    max_depth: float = 3.0            # m, usable range upper bound
    offset: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.3]))
    map_azimuth_samples: int = 600    # panoramic map build resolution
    map_elevation_samples: int = 60

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=float)


@dataclass
class OdometryLog:
    t: np.ndarray
    omega: np.ndarray                 # (K, 3) measured rad/s
    v: np.ndarray                     # (K, 3) measured m/s

    def __len__(self):
        return self.t.shape[0]


def simulate_odometry(truth, cfg, counts_per_meter=COUNTS_PER_METER,
                      track_width=TRACK_WIDTH, rng=None):
    """Wheel-encoder odometry derived from a ground-truth trajectory.

    ``truth`` must carry body velocities and include the final sample (the
    stream reports one measurement per interval, stamped at the interval
    end). Left/right wheel speeds follow the differential-drive model
    v_{l,r} = v -/+ w_z * track/2; each wheel's cumulative travel is
    quantized to integer encoder counts, differenced per interval, and
    converted back to forward speed and turn rate exactly the way the robot
    firmware does. Gaussian noise is then added: full variance on the driven
    axes, ``off_axis_factor`` of it on the axes the drive model pins to zero.
    Pass ``counts_per_meter=None`` (or infinity) to disable quantization.
    """
    if truth.omega is None or truth.v is None:
        raise ValueError("truth trajectory must include body velocities")
    rng = np.random.default_rng(rng if rng is not None else cfg.seed)
    t = truth.t
    dts = np.diff(t)
    if t.size < 2 or np.any(dts <= 0):
        raise ValueError("truth must have strictly increasing timestamps")

    v_fwd = truth.v[:, 0]
    w_z = truth.omega[:, 2]
    v_left = v_fwd - 0.5 * w_z * track_width
    v_right = v_fwd + 0.5 * w_z * track_width
    path_left = np.concatenate([[0.0], np.cumsum(0.5 * (v_left[1:] + v_left[:-1]) * dts)])
    path_right = np.concatenate([[0.0], np.cumsum(0.5 * (v_right[1:] + v_right[:-1]) * dts)])

    if counts_per_meter is None or math.isinf(counts_per_meter):
        d_left = np.diff(path_left)
        d_right = np.diff(path_right)
    else:
        d_left = np.diff(np.round(path_left * counts_per_meter)) / counts_per_meter
        d_right = np.diff(np.round(path_right * counts_per_meter)) / counts_per_meter

    v_meas = (d_left + d_right) / (2.0 * dts)
    w_meas = (d_right - d_left) / (track_width * dts)

    omega = np.zeros((dts.size, 3))
    vel = np.zeros((dts.size, 3))
    omega[:, 2] = w_meas
    vel[:, 0] = v_meas

    off = np.sqrt(cfg.off_axis_factor)
    stds = np.array([
        off * cfg.sigma_turn, off * cfg.sigma_turn, cfg.sigma_turn,
        cfg.sigma_forward, off * cfg.sigma_forward, off * cfg.sigma_forward,
    ])
    noise = rng.standard_normal((dts.size, 6)) * (stds / np.sqrt(dts)[:, None])
    omega += noise[:, :3]
    vel += noise[:, 3:]
    return OdometryLog(t[1:].copy(), omega, vel)


def _intersect_patches(origin, dirs, patches):
    """Nearest positive ray-patch hit; returns range along each ray (inf = miss)."""
    best = np.full(dirs.shape[0], np.inf)
    for patch in patches:
        denom = dirs @ patch.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t_hit = ((patch.center - origin) @ patch.normal) / denom
        ok = (np.abs(denom) > 1e-12) & (t_hit > 1e-6)
        hit = origin + dirs * t_hit[:, None]
        rel = hit - patch.center
        ok &= np.abs(rel @ patch.axis_u) <= patch.half_u
        ok &= np.abs(rel @ patch.axis_v) <= patch.half_v
        best = np.where(ok & (t_hit < best), t_hit, best)
    return best


def simulate_depth_scan(pose, env, cfg, camera=None, rng=None):
    """Depth-camera point cloud seen from ``pose``, in the body frame.

    A width x height ray grid, uniform in the image plane, covers the field
    of view with the camera looking along body +x from its mounting offset.
    Depth is the optical-axis component of each hit; readings outside the
    usable range are discarded, the rest are corrupted with Gaussian noise
    and quantized to multiples of the depth resolution before the point is
    rebuilt along its ray. An empty cloud means no patch was in view.
    """
    camera = camera or CameraConfig()
    rng = np.random.default_rng(rng if rng is not None else cfg.seed)
    u = np.tan(0.5 * camera.fov_h) * np.linspace(-1.0, 1.0, camera.width)
    w = np.tan(0.5 * camera.fov_v) * np.linspace(-1.0, 1.0, camera.height)
    uu, ww = np.meshgrid(u, w)
    dirs_body = np.stack([np.ones_like(uu), uu, ww], axis=-1).reshape(-1, 3)
    dirs_body /= np.linalg.norm(dirs_body, axis=1, keepdims=True)

    origin = pose.transform(camera.offset)
    dirs_world = pose.rotate(dirs_body)
    rng_along = _intersect_patches(origin, dirs_world, env.patches)

    axial = dirs_body[:, 0]                      # optical-axis component of unit rays
    depth = rng_along * axial
    keep = np.isfinite(depth) & (depth >= camera.min_depth) & (depth <= camera.max_depth)
    depth = depth[keep]
    if cfg.depth_sigma > 0.0:
        depth = depth + rng.normal(0.0, cfg.depth_sigma, size=depth.size)
    if cfg.depth_resolution > 0.0:
        depth = np.round(depth / cfg.depth_resolution) * cfg.depth_resolution

    points = camera.offset + dirs_body[keep] * (depth / axial[keep])[:, None]
    return PointCloud(points.reshape(-1, 3), sensor_origin=camera.offset.copy())


def build_reference_map(pose, env, cfg, camera=None, rng=None):
    """Panoramic capture from one pose, in the world frame.

    Stands in for the pre-built environment map: rays sweep the full azimuth
    circle over the camera's vertical band, with the same range gate, noise,
    and resolution quantization applied to the range readings.
    """
    camera = camera or CameraConfig()
    rng = np.random.default_rng(rng if rng is not None else cfg.seed)
    az = np.linspace(0.0, 2.0 * np.pi, camera.map_azimuth_samples, endpoint=False)
    elev_tan = np.tan(0.5 * camera.fov_v) * np.linspace(-1.0, 1.0, camera.map_elevation_samples)
    aa, ee = np.meshgrid(az, elev_tan)
    flat = np.stack([np.cos(aa), np.sin(aa), np.full_like(aa, 0.0)], axis=-1)
    dirs_body = flat + np.stack([np.zeros_like(aa), np.zeros_like(aa), ee], axis=-1)
    dirs_body = dirs_body.reshape(-1, 3)
    dirs_body /= np.linalg.norm(dirs_body, axis=1, keepdims=True)

    origin = pose.transform(camera.offset)
    dirs_world = pose.rotate(dirs_body)
    rng_along = _intersect_patches(origin, dirs_world, env.patches)
    keep = np.isfinite(rng_along) & (rng_along >= camera.min_depth) & (rng_along <= camera.max_depth)
    rng_kept = rng_along[keep]
    if cfg.depth_sigma > 0.0:
        rng_kept = rng_kept + rng.normal(0.0, cfg.depth_sigma, size=rng_kept.size)
    if cfg.depth_resolution > 0.0:
        rng_kept = np.round(rng_kept / cfg.depth_resolution) * cfg.depth_resolution
    points = origin + dirs_world[keep] * rng_kept[:, None]
    return PointCloud(points.reshape(-1, 3), sensor_origin=origin)


# ---------------------------------------------------------------------------
# Full scenario


@dataclass
class ScanEvent:
    t: float
    cloud: PointCloud


@dataclass
class SensorLog:
    odometry: OdometryLog
    scans: list
    truth: Trajectory
    map_cloud: PointCloud


def run_scenario(cfg):
    """Compose trajectory, odometry, and scans into one seeded sensor log.

    ``cfg`` provides trajectory, noise, camera, environment (or None to build
    the default room), and a master seed. The reference map is captured at
    t = 0 from the start pose; scans follow at 1 Hz and are matched against
    that map downstream. Scans that see no geometry are dropped from the log.
    """
    seed = int(cfg.seed)
    env = cfg.environment
    if env is None:
        env = Environment.default_room(np.random.SeedSequence((seed, 0)))
    noise = cfg.noise
    camera = cfg.camera

    truth50 = generate_trajectory(cfg.trajectory, ODOMETRY_RATE, inclusive_end=True)
    odom = simulate_odometry(truth50, noise,
                             rng=np.random.default_rng(np.random.SeedSequence((seed, 1))))
    truth = generate_trajectory(cfg.trajectory, TRUTH_RATE)

    start_pose, _, _ = trajectory_state(cfg.trajectory, 0.0)
    map_cloud = build_reference_map(start_pose, env, noise, camera,
                                    rng=np.random.default_rng(np.random.SeedSequence((seed, 2))))

    scans = []
    n_scans = int(math.floor(cfg.trajectory.duration * SCAN_RATE))
    for k in range(1, n_scans + 1):
        t_scan = k / SCAN_RATE
        pose_k, _, _ = trajectory_state(cfg.trajectory, t_scan)
        cloud = simulate_depth_scan(pose_k, env, noise, camera,
                                    rng=np.random.default_rng(np.random.SeedSequence((seed, 3, k))))
        if not cloud.is_empty:
            scans.append(ScanEvent(t_scan, cloud))
    return SensorLog(odom, scans, truth, map_cloud)


# ---------------------------------------------------------------------------
# Sensor-log directory layout: odometry.csv, truth.csv, map.ply, scan_<t>.ply


def _fmt(x):
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _read_csv(path, n_cols):
    with open(path) as f:
        header = f.readline().strip().split(",")
        if len(header) != n_cols:
            raise ValueError(f"{path}: expected {n_cols} columns, found {len(header)}")
        data = [[float(v) for v in line.strip().split(",")] for line in f if line.strip()]
    return np.array(data, dtype=float).reshape(-1, n_cols)


def save_sensor_log(log, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "odometry.csv", ["t", "wx", "wy", "wz", "vx", "vy", "vz"],
               np.column_stack([log.odometry.t, log.odometry.omega, log.odometry.v]))
    _write_csv(out / "truth.csv",
               ["t"] + [f"r{i}{j}" for i in range(3) for j in range(3)] + ["px", "py", "pz"],
               np.column_stack([log.truth.t, log.truth.R.reshape(-1, 9), log.truth.p]))
    save_ply(log.map_cloud, out / "map.ply")
    for event in log.scans:
        save_ply(event.cloud, out / f"scan_{event.t:g}.ply")


def load_sensor_log(in_dir):
    src = Path(in_dir)
    odo = _read_csv(src / "odometry.csv", 7)
    odometry = OdometryLog(odo[:, 0], odo[:, 1:4], odo[:, 4:7])
    tru = _read_csv(src / "truth.csv", 13)
    truth = Trajectory(tru[:, 0], tru[:, 1:10].reshape(-1, 3, 3), tru[:, 10:13])
    map_cloud = load_ply(src / "map.ply")
    scans = []
    for path in src.glob("scan_*.ply"):
        m = re.fullmatch(r"scan_(.+)\.ply", path.name)
        scans.append(ScanEvent(float(m.group(1)), load_ply(path)))
    scans.sort(key=lambda e: e.t)
    return SensorLog(odometry, scans, truth, map_cloud)
