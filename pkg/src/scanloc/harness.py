"""Experiment orchestration: run both filters over one simulated sensor log,
score them against ground truth, and emit CSV results and plots.

Both filters consume the identical log; scan matching runs once per filter
per scan because pre-alignment starts from each filter's own predicted pose,
but the registration parameters and the per-scan sampling streams are shared
so the comparison stays fair.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sim
from .filters import BodyVelocity, FilterState, PoseMeasurement, predict, update
from .icp import IcpParams, RegistrationError, icp_register, per_scan_params
from .pointcloud import SpatialIndex, estimate_normals
from .pose import Pose
from .so3 import exp_so3, log_so3

FILTER_KINDS = ("iekf", "mekf")

# Gain sub-block acting on the planar error states, ordered [x, y, heading].
_PLANAR_IDX = np.ix_([3, 4, 2], [3, 4, 2])


class ExperimentAborted(RuntimeError):
    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class EnvParams:
    half_size: float = 2.0
    wall_height: float = 1.5
    n_boxes: int = 8


@dataclass
class ScenarioConfig:
    """Everything one experiment needs, resolvable from a flat config file."""

    trajectory: sim.TrajectorySpec = field(default_factory=sim.TrajectorySpec)
    noise: sim.NoiseConfig = field(default_factory=sim.NoiseConfig)
    camera: sim.CameraConfig = field(default_factory=sim.CameraConfig)
    icp: IcpParams = field(default_factory=IcpParams)
    env: EnvParams = field(default_factory=EnvParams)
    p0_diag: np.ndarray = field(default_factory=lambda: np.full(6, 1e-4))
    q_diag: np.ndarray | None = None
    seed: int = 0
    init_heading_error: float = 0.0        # rad, added to the initial attitude estimate
    environment: sim.Environment | None = None

    def __post_init__(self):
        self.p0_diag = np.asarray(self.p0_diag, dtype=float)
        if self.q_diag is not None:
            self.q_diag = np.asarray(self.q_diag, dtype=float)
        if self.environment is None:
            self.environment = sim.Environment.default_room(
                np.random.SeedSequence((int(self.seed), 0)),
                self.env.half_size, self.env.wall_height, self.env.n_boxes)

    def process_noise(self):
        """Q matrix: configured diagonal, else derived from the odometry noise."""
        if self.q_diag is not None:
            return np.diag(self.q_diag)
        n = self.noise
        off = n.off_axis_factor
        return np.diag([off * n.sigma_turn ** 2, off * n.sigma_turn ** 2,
                        n.sigma_turn ** 2,
                        n.sigma_forward ** 2, off * n.sigma_forward ** 2,
                        off * n.sigma_forward ** 2])

    def with_seed(self, seed):
        """Copy with a new master seed; the seeded environment regenerates."""
        return dataclasses.replace(self, seed=int(seed), environment=None)


def preset_config(scenario, seed=0, **overrides):
    """Named scenario presets: stationary, straight, circle."""
    if scenario == "stationary":
        traj = sim.TrajectorySpec("stationary", speed=0.0, duration=10.0)
    elif scenario == "straight":
        traj = sim.TrajectorySpec("straight", speed=0.2, duration=10.0,
                                  start=Pose(np.eye(3), np.array([-1.2, 0.0, 0.0])))
    elif scenario == "circle":
        # two full counter-clockwise laps
        radius, speed = 0.8, 0.4
        duration = math.ceil(2.0 * (2.0 * np.pi * radius / speed))
        traj = sim.TrajectorySpec("circle", speed=speed, radius=radius, duration=duration,
                                  start=Pose(np.eye(3), np.array([0.0, -radius, 0.0])))
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    return ScenarioConfig(trajectory=traj, seed=seed, **overrides)


# ---------------------------------------------------------------------------
# Scan matching as a filter measurement


@dataclass
class UpdateRecord:
    t: float
    kind: str = ""
    valid: bool = False
    rank: int | None = None
    condition: float | None = None
    n_pairs: int | None = None
    outlier: bool = False
    failure: str | None = None
    null_directions: np.ndarray | None = None


def scan_measurement(scan_cloud, map_cloud, predicted_pose, params, map_index=None):
    """Register one scan against the map from the predicted pose.

    Returns ``(PoseMeasurement, UpdateRecord)``; registration failures and
    rank-deficient geometry yield an invalid measurement (the filter must
    skip it) with the diagnostics preserved in the record.
    """
    record = UpdateRecord(t=math.nan)
    try:
        result = icp_register(scan_cloud, map_cloud, predicted_pose, params, map_index)
    except RegistrationError as err:
        record.failure = f"{type(err).__name__}: {err}"
        record.rank = getattr(err, "rank", None)
        record.condition = getattr(err, "condition", None)
        record.null_directions = getattr(err, "null_directions", None)
        return PoseMeasurement(np.zeros(6), np.eye(6), valid=False), record
    record.rank = result.rank
    record.condition = result.condition
    record.n_pairs = result.n_pairs
    if result.covariance_degenerate:
        record.failure = "rank-deficient constraint matrix"
        record.null_directions = result.null_directions
        return PoseMeasurement(result.x, result.covariance, valid=False), record
    record.valid = True
    return PoseMeasurement(result.x, result.covariance, valid=True), record


# ---------------------------------------------------------------------------
# Ground-truth alignment and error metrics


def interpolate_truth(truth, query_t):
    """Truth poses at arbitrary times: linear in p, geodesic in R, clamped."""
    query_t = np.atleast_1d(np.asarray(query_t, dtype=float))
    R_out = np.empty((query_t.size, 3, 3))
    p_out = np.empty((query_t.size, 3))
    hi = truth.t.size - 1
    for i, tq in enumerate(query_t):
        j = int(np.clip(np.searchsorted(truth.t, tq, side="right") - 1, 0, hi - 1))
        span = truth.t[j + 1] - truth.t[j]
        u = float(np.clip((tq - truth.t[j]) / span, 0.0, 1.0))
        p_out[i] = (1.0 - u) * truth.p[j] + u * truth.p[j + 1]
        R_out[i] = truth.R[j] @ exp_so3(u * log_so3(truth.R[j].T @ truth.R[j + 1]))
    return R_out, p_out


def heading_error(R_truth, R_est):
    """z-component of log(R_truth^T R_est); lies in (-pi, pi] by construction."""
    rel = R_truth.T @ R_est
    try:
        return float(log_so3(rel)[2])
    except ValueError:
        # within 1e-6 of a half turn; fall back to the planar yaw of the residual
        return float(np.arctan2(rel[1, 0], rel[0, 0]))


# ---------------------------------------------------------------------------
# Experiment driver


@dataclass
class FilterTrack:
    R: np.ndarray                    # (K, 3, 3) estimated attitude
    p: np.ndarray                    # (K, 3) estimated position
    err: np.ndarray                  # (K, 3) [dx m, dy m, dpsi rad]
    gain_planar: np.ndarray          # (K, 3, 3), NaN before the first update
    P_diag: np.ndarray               # (K, 6)
    P_hist: np.ndarray               # (K, 6, 6) full covariance history
    icp_cov_diag: np.ndarray         # (K, 6), NaN before the first update
    updated: np.ndarray              # (K,) bool, measurement applied at this row
    skipped: np.ndarray              # (K,) bool, measurement seen but skipped
    records: list                    # per-scan UpdateRecord

    @property
    def n_updates(self):
        return int(np.count_nonzero(self.updated))

    @property
    def n_skipped(self):
        return int(np.count_nonzero(self.skipped))


@dataclass
class RunResult:
    config: ScenarioConfig
    t: np.ndarray
    truth_R: np.ndarray
    truth_p: np.ndarray
    tracks: dict


def _empty_track(n_rows):
    return FilterTrack(
        R=np.empty((n_rows, 3, 3)), p=np.empty((n_rows, 3)),
        err=np.empty((n_rows, 3)),
        gain_planar=np.full((n_rows, 3, 3), np.nan),
        P_diag=np.empty((n_rows, 6)),
        P_hist=np.empty((n_rows, 6, 6)),
        icp_cov_diag=np.full((n_rows, 6), np.nan),
        updated=np.zeros(n_rows, dtype=bool),
        skipped=np.zeros(n_rows, dtype=bool),
        records=[],
    )


def run_experiment(cfg, sensor_log=None, kinds=FILTER_KINDS, abort_threshold=0.5):
    """Run the configured scenario through the selected filters.

    The sensor log is generated once (or passed in, e.g. replayed from disk)
    and shared; scan normals are estimated once and shared too. Aborts when
    scan matching hard-fails on more than ``abort_threshold`` of the scans of
    any filter.
    """
    log = sensor_log if sensor_log is not None else sim.run_scenario(cfg)
    k_nn = cfg.icp.normal_neighbors
    map_cloud = log.map_cloud if log.map_cloud.has_normals() \
        else estimate_normals(log.map_cloud, k_nn)
    map_index = SpatialIndex(map_cloud.points)
    scans = [(ev.t, ev.cloud if ev.cloud.has_normals() else estimate_normals(ev.cloud, k_nn))
             for ev in log.scans]

    odo = log.odometry
    n_rows = len(odo)
    # Scan events land on odometry timestamps; match them by row index.
    scan_at_row = {}
    for s_idx, (t_scan, _) in enumerate(scans):
        row = int(round(t_scan * sim.ODOMETRY_RATE)) - 1
        if not (0 <= row < n_rows) or abs(odo.t[row] - t_scan) > 1e-9:
            raise ValueError(f"scan at t={t_scan} does not align with the odometry grid")
        scan_at_row[row] = s_idx

    truth_R, truth_p = interpolate_truth(log.truth, odo.t)
    Q = cfg.process_noise()
    start = log.truth.pose(0)

    tracks = {}
    for kind in kinds:
        R_est0 = start.R @ exp_so3([0.0, 0.0, cfg.init_heading_error])
        state = FilterState(Pose(R_est0, start.p.copy()), np.diag(cfg.p0_diag), 0.0)
        track = _empty_track(n_rows)
        last_gain = np.full((3, 3), np.nan)
        last_icp_cov = np.full(6, np.nan)
        prev_t = 0.0

        for row in range(n_rows):
            dt = odo.t[row] - prev_t
            prev_t = odo.t[row]
            state = predict(state, BodyVelocity(odo.omega[row], odo.v[row]), Q, dt, kind)

            s_idx = scan_at_row.get(row)
            if s_idx is not None:
                t_scan, cloud = scans[s_idx]
                params = per_scan_params(cfg.icp, cfg.seed, int(round(t_scan * sim.SCAN_RATE)))
                meas, record = scan_measurement(cloud, map_cloud, state.pose, params, map_index)
                outcome = update(state, meas, kind)
                state = outcome.state
                record.t = t_scan
                record.kind = kind
                record.outlier = outcome.outlier
                track.records.append(record)
                track.updated[row] = not outcome.skipped
                track.skipped[row] = outcome.skipped
                if not outcome.skipped:
                    last_gain = outcome.gain[_PLANAR_IDX]
                    last_icp_cov = np.diag(meas.cov).copy()

            track.R[row] = state.pose.R
            track.p[row] = state.pose.p
            track.err[row, 0] = state.pose.p[0] - truth_p[row, 0]
            track.err[row, 1] = state.pose.p[1] - truth_p[row, 1]
            track.err[row, 2] = heading_error(truth_R[row], state.pose.R)
            track.gain_planar[row] = last_gain
            track.P_diag[row] = np.diag(state.P)
            track.P_hist[row] = state.P
            track.icp_cov_diag[row] = last_icp_cov

        n_scans = len(scans)
        if n_scans and track.n_skipped > abort_threshold * n_scans:
            raise ExperimentAborted(
                f"{kind}: scan matching failed on {track.n_skipped}/{n_scans} scans",
                track.records)
        tracks[kind] = track

    return RunResult(cfg, odo.t.copy(), truth_R, truth_p, tracks)


def compute_rms(result, component, kind="iekf"):
    """Root-mean-square of one planar error component over the whole run."""
    cols = {"x": 0, "y": 1, "psi": 2}
    if component not in cols:
        raise ValueError(f"component must be one of {sorted(cols)}")
    track = result.tracks[kind]
    if track.err.shape[0] == 0:
        raise ValueError("empty run result")
    e = track.err[:, cols[component]]
    return float(np.sqrt(np.mean(e * e)))


def run_seed_study(base_cfg, n_seeds, kinds=FILTER_KINDS, abort_threshold=0.5):
    """Independent runs over consecutive seeds; returns the list of results."""
    results = []
    for i in range(n_seeds):
        cfg = base_cfg.with_seed(base_cfg.seed + i)
        results.append(run_experiment(cfg, kinds=kinds, abort_threshold=abort_threshold))
    return results


def study_summary(results, kinds=FILTER_KINDS):
    """Per-seed RMS and final errors, stacked into arrays keyed by filter."""
    out = {}
    for kind in kinds:
        rms = np.array([[compute_rms(r, c, kind) for c in ("x", "y", "psi")]
                        for r in results])
        final = np.array([np.abs(r.tracks[kind].err[-1]) for r in results])
        out[kind] = {"rms": rms, "final": final}
    return out


# ---------------------------------------------------------------------------
# Reports


def _fmt(x):
    return repr(float(x))


_GAIN_NAMES = [f"k_{r}{c}" for r in ("x", "y", "psi") for c in ("x", "y", "psi")]


def _result_header(kinds):
    cols = ["t"]
    cols += [f"truth_r{i}{j}" for i in range(3) for j in range(3)]
    cols += ["truth_px", "truth_py", "truth_pz"]
    for kind in kinds:
        cols += [f"{kind}_r{i}{j}" for i in range(3) for j in range(3)]
        cols += [f"{kind}_px", f"{kind}_py", f"{kind}_pz"]
        cols += [f"{kind}_dx", f"{kind}_dy", f"{kind}_dpsi"]
        cols += [f"{kind}_{g}" for g in _GAIN_NAMES]
        cols += [f"{kind}_p{i}{i}" for i in range(6)]
        cols += [f"{kind}_icpcov{i}" for i in range(6)]
        cols += [f"{kind}_updated", f"{kind}_skipped"]
    return cols


def write_result_csv(result, path):
    kinds = list(result.tracks)
    header = _result_header(kinds)
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in range(result.t.size):
            vals = [result.t[row]]
            vals += list(result.truth_R[row].reshape(9)) + list(result.truth_p[row])
            for kind in kinds:
                tr = result.tracks[kind]
                vals += list(tr.R[row].reshape(9)) + list(tr.p[row])
                vals += list(tr.err[row])
                vals += list(tr.gain_planar[row].reshape(9))
                vals += list(tr.P_diag[row])
                vals += list(tr.icp_cov_diag[row])
                vals += [float(tr.updated[row]), float(tr.skipped[row])]
            f.write(",".join(_fmt(v) for v in vals) + "\n")


def write_summary_csv(result, path):
    with open(path, "w") as f:
        f.write("filter,rms_dx,rms_dy,rms_dpsi,final_dx,final_dy,final_dpsi,"
                "n_updates,n_skipped\n")
        for kind, tr in result.tracks.items():
            rms = [compute_rms(result, c, kind) for c in ("x", "y", "psi")]
            f.write(",".join([kind] + [_fmt(v) for v in rms]
                             + [_fmt(v) for v in tr.err[-1]]
                             + [str(tr.n_updates), str(tr.n_skipped)]) + "\n")


def _plot_reports(result, out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    colors = {"iekf": "tab:blue", "mekf": "tab:red"}

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(result.truth_p[:, 0], result.truth_p[:, 1], "k-", label="truth")
    for kind, tr in result.tracks.items():
        ax.plot(tr.p[:, 0], tr.p[:, 1], color=colors.get(kind), label=kind)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend()
    ax.set_title("overhead trajectory")
    fig.savefig(out / "trajectory_xy.svg")
    plt.close(fig)

    def rpy(Rs):
        roll = np.arctan2(Rs[:, 2, 1], Rs[:, 2, 2])
        pitch = -np.arcsin(np.clip(Rs[:, 2, 0], -1.0, 1.0))
        yaw = np.arctan2(Rs[:, 1, 0], Rs[:, 0, 0])
        return np.stack([roll, pitch, yaw], axis=1)

    labels = ["x [m]", "y [m]", "z [m]", "roll [rad]", "pitch [rad]", "yaw [rad]"]
    truth_vals = np.hstack([result.truth_p, rpy(result.truth_R)])
    fig, axes = plt.subplots(3, 2, figsize=(10, 8), sharex=True)
    axes = axes.T.reshape(-1)
    for i, ax in enumerate(axes):
        ax.plot(result.t, truth_vals[:, i], "k-", label="truth")
        for kind, tr in result.tracks.items():
            vals = np.hstack([tr.p, rpy(tr.R)])
            ax.plot(result.t, vals[:, i], color=colors.get(kind), label=kind)
        ax.set_ylabel(labels[i])
    axes[0].legend()
    for ax in axes[2::3]:
        ax.set_xlabel("t [s]")
    fig.suptitle("pose components vs ground truth (roll-pitch-yaw, ZYX convention)")
    fig.savefig(out / "pose_components.svg")
    plt.close(fig)

    names = ("x", "y", "psi")
    fig, axes = plt.subplots(3, 3, figsize=(11, 8), sharex=True)
    for r in range(3):
        for c in range(3):
            ax = axes[r][c]
            for kind, tr in result.tracks.items():
                ax.plot(result.t, tr.gain_planar[:, r, c], color=colors.get(kind), label=kind)
            ax.set_title(f"K[{names[r]}, {names[c]}]", fontsize=9)
    axes[0][0].legend(fontsize=8)
    for ax in axes[-1]:
        ax.set_xlabel("t [s]")
    fig.suptitle("planar Kalman gain entries")
    fig.savefig(out / "gains.svg")
    plt.close(fig)


def emit_report(result, out_dir):
    """Write result.csv, summary.csv, the resolved config, and SVG plots."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_result_csv(result, out / "result.csv")
        write_summary_csv(result, out / "summary.csv")
        write_config(result.config, out / "config.txt")
        _plot_reports(result, out)
    except OSError as err:
        raise OSError(f"failed writing report under {out}: {err}") from err


# ---------------------------------------------------------------------------
# Flat "key = value" config files


def _traj_to_items(traj):
    yaw = math.atan2(traj.start.R[1, 0], traj.start.R[0, 0])
    return [
        ("trajectory.kind", traj.kind),
        ("trajectory.speed", traj.speed),
        ("trajectory.radius", traj.radius),
        ("trajectory.duration", traj.duration),
        ("trajectory.start_x", traj.start.p[0]),
        ("trajectory.start_y", traj.start.p[1]),
        ("trajectory.start_yaw_deg", math.degrees(yaw)),
    ]


def config_items(cfg):
    """Flat (key, value) pairs fully describing a ScenarioConfig."""
    items = _traj_to_items(cfg.trajectory)
    n, cam, icp, env = cfg.noise, cfg.camera, cfg.icp, cfg.env
    items += [
        ("noise.sigma_forward", n.sigma_forward),
        ("noise.sigma_turn", n.sigma_turn),
        ("noise.off_axis_factor", n.off_axis_factor),
        ("noise.depth_resolution", n.depth_resolution),
        ("noise.depth_sigma", n.depth_sigma),
        ("camera.fov_h_deg", math.degrees(cam.fov_h)),
        ("camera.fov_v_deg", math.degrees(cam.fov_v)),
        ("camera.width", cam.width),
        ("camera.height", cam.height),
        ("camera.min_depth", cam.min_depth),
        ("camera.max_depth", cam.max_depth),
        ("camera.offset", ",".join(_fmt(v) for v in cam.offset)),
        ("camera.map_azimuth_samples", cam.map_azimuth_samples),
        ("camera.map_elevation_samples", cam.map_elevation_samples),
        ("icp.n_select", icp.n_select),
        ("icp.iterations", icp.iterations),
        ("icp.max_pair_distance", icp.max_pair_distance),
        ("icp.max_normal_angle_deg", math.degrees(icp.max_normal_angle)),
        ("icp.planarity_max", icp.planarity_max),
        ("icp.normal_neighbors", icp.normal_neighbors),
        ("icp.resolution", icp.noise.resolution),
        ("icp.sigma", icp.noise.sigma),
        ("icp.n_buckets", icp.noise.n_buckets),
        ("icp.condition_limit", icp.condition_limit),
        ("env.half_size", env.half_size),
        ("env.wall_height", env.wall_height),
        ("env.n_boxes", env.n_boxes),
        ("filter.p0_diag", ",".join(_fmt(v) for v in cfg.p0_diag)),
        ("filter.q_diag", "auto" if cfg.q_diag is None
         else ",".join(_fmt(v) for v in cfg.q_diag)),
        ("run.seed", cfg.seed),
        ("run.init_heading_error_deg", math.degrees(cfg.init_heading_error)),
    ]
    return items


def write_config(cfg, path):
    with open(path, "w") as f:
        for key, value in config_items(cfg):
            f.write(f"{key} = {value}\n")


def parse_config_text(text, base=None):
    """Build a ScenarioConfig from flat ``key = value`` lines.

    Lines starting with '#' and blank lines are ignored; unknown keys are
    errors. ``base`` supplies defaults for keys the file leaves out.
    """
    values = dict(config_items(base if base is not None else ScenarioConfig()))
    known = set(values)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return _config_from_values(values)


def parse_config(path, base=None):
    return parse_config_text(Path(path).read_text(), base=base)


def _floats(s):
    return np.array([float(v) for v in str(s).split(",")])


def _config_from_values(v):
    yaw = math.radians(float(v["trajectory.start_yaw_deg"]))
    start = Pose(exp_so3([0.0, 0.0, yaw]),
                 np.array([float(v["trajectory.start_x"]), float(v["trajectory.start_y"]), 0.0]))
    trajectory = sim.TrajectorySpec(
        kind=str(v["trajectory.kind"]),
        speed=float(v["trajectory.speed"]),
        radius=float(v["trajectory.radius"]),
        duration=float(v["trajectory.duration"]),
        start=start)
    noise = sim.NoiseConfig(
        sigma_forward=float(v["noise.sigma_forward"]),
        sigma_turn=float(v["noise.sigma_turn"]),
        off_axis_factor=float(v["noise.off_axis_factor"]),
        depth_resolution=float(v["noise.depth_resolution"]),
        depth_sigma=float(v["noise.depth_sigma"]))
    camera = sim.CameraConfig(
        fov_h=math.radians(float(v["camera.fov_h_deg"])),
        fov_v=math.radians(float(v["camera.fov_v_deg"])),
        width=int(v["camera.width"]),
        height=int(v["camera.height"]),
        min_depth=float(v["camera.min_depth"]),
        max_depth=float(v["camera.max_depth"]),
        offset=_floats(v["camera.offset"]),
        map_azimuth_samples=int(v["camera.map_azimuth_samples"]),
        map_elevation_samples=int(v["camera.map_elevation_samples"]))
    from .icp import RegistrationNoiseModel
    icp = IcpParams(
        n_select=int(v["icp.n_select"]),
        iterations=int(v["icp.iterations"]),
        max_pair_distance=float(v["icp.max_pair_distance"]),
        max_normal_angle=math.radians(float(v["icp.max_normal_angle_deg"])),
        planarity_max=float(v["icp.planarity_max"]),
        normal_neighbors=int(v["icp.normal_neighbors"]),
        noise=RegistrationNoiseModel(
            resolution=float(v["icp.resolution"]),
            sigma=float(v["icp.sigma"]),
            n_buckets=int(v["icp.n_buckets"])),
        condition_limit=float(v["icp.condition_limit"]))
    env = EnvParams(
        half_size=float(v["env.half_size"]),
        wall_height=float(v["env.wall_height"]),
        n_boxes=int(v["env.n_boxes"]))
    q_raw = str(v["filter.q_diag"])
    return ScenarioConfig(
        trajectory=trajectory, noise=noise, camera=camera, icp=icp, env=env,
        p0_diag=_floats(v["filter.p0_diag"]),
        q_diag=None if q_raw == "auto" else _floats(q_raw),
        seed=int(v["run.seed"]),
        init_heading_error=math.radians(float(v["run.init_heading_error_deg"])))
