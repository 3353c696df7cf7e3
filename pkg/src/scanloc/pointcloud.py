"""Point clouds with estimated normals, exact nearest-neighbor search, and
normal-space source sampling.

Normals come from a plane fit through each point's k nearest neighbors (least
eigenvector of the neighborhood covariance), oriented toward the recorded
sensor origin. The per-point planarity residual (RMS distance of the
neighborhood to its fitted plane, meters) is kept so that points near edges
can be excluded from sampling.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_NORMAL_NEIGHBORS = 10
# Neighborhoods whose middle covariance eigenvalue collapses relative to the
# largest are collinear; the fitted normal direction is then arbitrary.
_DEGENERATE_EIG_RATIO = 1e-8


@dataclass
class PointCloud:
    """3D points (meters) with optional unit normals and fit diagnostics.

    ``sensor_origin`` is the viewpoint the cloud was captured from, expressed
    in the same frame as ``points``; normals are oriented to face it.
    """

    points: np.ndarray
    normals: np.ndarray | None = None
    sensor_origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    planarity: np.ndarray | None = None
    normal_valid: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.size == 0:
            self.points = self.points.reshape(0, 3)
        if self.points.shape[1] != 3:
            raise ValueError("points must be an (N, 3) array")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("points contain non-finite coordinates")
        self.sensor_origin = np.asarray(self.sensor_origin, dtype=float)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=float)
            if self.normals.shape != self.points.shape:
                raise ValueError("normals must match points shape")

    def __len__(self):
        return self.points.shape[0]

    @property
    def is_empty(self):
        return len(self) == 0

    def has_normals(self):
        return self.normals is not None

    def copy(self):
        return PointCloud(
            self.points.copy(),
            None if self.normals is None else self.normals.copy(),
            self.sensor_origin.copy(),
            None if self.planarity is None else self.planarity.copy(),
            None if self.normal_valid is None else self.normal_valid.copy(),
        )

    def transformed(self, pose):
        """Cloud expressed in the parent frame of ``pose``."""
        return PointCloud(
            pose.transform(self.points),
            None if self.normals is None else pose.rotate(self.normals),
            pose.transform(self.sensor_origin),
            None if self.planarity is None else self.planarity.copy(),
            None if self.normal_valid is None else self.normal_valid.copy(),
        )


class SpatialIndex:
    """Exact nearest-neighbor queries over a fixed cloud (k-d tree)."""

    def __init__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[0] == 0:
            raise ValueError("cannot index an empty point cloud")
        self._tree = cKDTree(points)
        self.points = points

    def __len__(self):
        return self.points.shape[0]

    def nearest(self, q):
        """Index and distance of the exact nearest point to ``q``."""
        dist, idx = self._tree.query(np.asarray(q, dtype=float))
        return int(idx), float(dist)

    def nearest_many(self, queries):
        """Vectorized nearest-neighbor lookup: (indices, distances)."""
        dist, idx = self._tree.query(np.atleast_2d(np.asarray(queries, dtype=float)))
        return idx, dist

    def knn(self, queries, k):
        """Indices of the k nearest points for each query row."""
        dist, idx = self._tree.query(np.atleast_2d(np.asarray(queries, dtype=float)), k=k)
        return idx, dist


def estimate_normals(cloud, k=DEFAULT_NORMAL_NEIGHBORS):
    """Return a copy of ``cloud`` with plane-fit normals filled in.

    Each normal is the eigenvector of the (k+1)-point neighborhood covariance
    with the smallest eigenvalue, flipped so it points toward the sensor
    origin. ``planarity`` records the RMS out-of-plane deviation of the
    neighborhood (meters). Collinear neighborhoods leave the normal flagged
    invalid so later sampling skips the point.
    """
    if k < 3:
        raise ValueError("normal estimation needs k >= 3 neighbors")
    n = len(cloud)
    if n < k + 1:
        raise ValueError(f"cloud has {n} points, need at least {k + 1}")

    tree = cKDTree(cloud.points)
    _, idx = tree.query(cloud.points, k=k + 1)  # each point plus k neighbors
    neigh = cloud.points[idx]                   # (N, k+1, 3)
    centered = neigh - neigh.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / (k + 1)

    eigvals, eigvecs = np.linalg.eigh(cov)      # ascending eigenvalues
    normals = eigvecs[:, :, 0]
    planarity = np.sqrt(np.maximum(eigvals[:, 0], 0.0))
    valid = eigvals[:, 1] > _DEGENERATE_EIG_RATIO * np.maximum(eigvals[:, 2], 1e-300)

    toward = cloud.sensor_origin - cloud.points
    flip = np.einsum("ni,ni->n", normals, toward) < 0.0
    normals[flip] *= -1.0
    normals[~valid] = 0.0

    out = cloud.copy()
    out.normals = normals
    out.planarity = planarity
    out.normal_valid = valid
    return out


def normal_space_sample(cloud, n_select, n_buckets=3, planarity_max=0.005, rng=None):
    """Pick source points balanced across normal-direction buckets.

    Points whose plane fit failed or whose planarity residual exceeds
    ``planarity_max`` (meters) are excluded. The survivors are bucketed by the
    dominant absolute component of their normal (three axis buckets) and drawn
    round-robin, uniformly within each bucket, until ``n_select`` indices are
    collected; an emptied bucket drops out of the cycle. Returns
    ``(indices, shortfall)`` where ``shortfall`` is True when fewer valid
    points than requested exist (all of them are returned in that case).
    """
    if not cloud.has_normals():
        raise ValueError("normal_space_sample requires estimated normals")
    if n_buckets not in (1, 3):
        raise ValueError("n_buckets must be 1 or 3 (axis-dominance bucketing)")
    rng = np.random.default_rng(rng)

    ok = np.ones(len(cloud), dtype=bool)
    if cloud.normal_valid is not None:
        ok &= cloud.normal_valid
    if cloud.planarity is not None and planarity_max is not None:
        ok &= cloud.planarity <= planarity_max
    candidates = np.flatnonzero(ok)

    if candidates.size <= n_select:
        return candidates.copy(), candidates.size < n_select

    if n_buckets == 1:
        bucket_of = np.zeros(candidates.size, dtype=int)
    else:
        bucket_of = np.argmax(np.abs(cloud.normals[candidates]), axis=1)

    queues = []
    for b in range(n_buckets):
        members = candidates[bucket_of == b]
        queues.append(rng.permutation(members) if members.size else members)

    chosen = np.empty(n_select, dtype=int)
    cursors = [0] * n_buckets
    filled = 0
    while filled < n_select:
        advanced = False
        for b in range(n_buckets):
            if filled == n_select:
                break
            if cursors[b] < queues[b].size:
                chosen[filled] = queues[b][cursors[b]]
                cursors[b] += 1
                filled += 1
                advanced = True
        if not advanced:
            break  # unreachable: total candidate count checked above
    return chosen[:filled], False


# ---------------------------------------------------------------------------
# File I/O: ASCII XYZ and ASCII PLY (x y z [nx ny nz]).


def _fmt(x):
    return repr(float(x))  # shortest exact round-trip decimal


def save_xyz(cloud, path):
    """One "x y z" triple per line, meters."""
    with open(path, "w") as f:
        for px, py, pz in cloud.points:
            f.write(f"{_fmt(px)} {_fmt(py)} {_fmt(pz)}\n")


def load_xyz(path):
    pts = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            vals = line.split()
            if len(vals) != 3:
                raise ValueError(f"{path}: expected 3 values per line, got {len(vals)}")
            pts.append([float(v) for v in vals])
    return PointCloud(np.array(pts, dtype=float).reshape(-1, 3))


def save_ply(cloud, path):
    """ASCII PLY with x y z and, when present, nx ny nz properties."""
    with_normals = cloud.has_normals()
    o = cloud.sensor_origin
    with open(path, "w") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"comment sensor_origin {_fmt(o[0])} {_fmt(o[1])} {_fmt(o[2])}\n")
        f.write(f"element vertex {len(cloud)}\n")
        f.write("property double x\nproperty double y\nproperty double z\n")
        if with_normals:
            f.write("property double nx\nproperty double ny\nproperty double nz\n")
        f.write("end_header\n")
        for i in range(len(cloud)):
            row = [_fmt(v) for v in cloud.points[i]]
            if with_normals:
                row += [_fmt(v) for v in cloud.normals[i]]
            f.write(" ".join(row) + "\n")


def load_ply(path):
    with open(path) as f:
        if f.readline().strip() != "ply":
            raise ValueError(f"{path}: not a PLY file")
        n_vertex = None
        props = []
        sensor_origin = np.zeros(3)
        while True:
            line = f.readline()
            if not line:
                raise ValueError(f"{path}: truncated PLY header")
            line = line.strip()
            if line == "end_header":
                break
            fields = line.split()
            if fields[0] == "format" and fields[1] != "ascii":
                raise ValueError(f"{path}: only ascii PLY is supported")
            elif fields[0] == "comment" and len(fields) == 5 and fields[1] == "sensor_origin":
                sensor_origin = np.array([float(v) for v in fields[2:5]])
            elif fields[0] == "element":
                if fields[1] == "vertex":
                    n_vertex = int(fields[2])
                elif int(fields[2]) > 0:
                    raise ValueError(f"{path}: unsupported element {fields[1]}")
            elif fields[0] == "property":
                props.append(fields[2])
        for name in ("x", "y", "z"):
            if name not in props:
                raise ValueError(f"{path}: missing vertex property {name}")
        has_normals = all(n in props for n in ("nx", "ny", "nz"))
        col = {name: props.index(name) for name in props}

        data = np.empty((n_vertex, len(props)), dtype=float)
        for i in range(n_vertex):
            vals = f.readline().split()
            if len(vals) != len(props):
                raise ValueError(f"{path}: vertex row {i} has {len(vals)} values")
            data[i] = [float(v) for v in vals]

    points = data[:, [col["x"], col["y"], col["z"]]]
    normals = data[:, [col["nx"], col["ny"], col["nz"]]] if has_normals else None
    return PointCloud(points, normals, sensor_origin)


def save_cloud(cloud, path):
    path = str(path)
    if path.endswith(".xyz"):
        save_xyz(cloud, path)
    elif path.endswith(".ply"):
        save_ply(cloud, path)
    else:
        raise ValueError(f"unsupported cloud format: {path}")


def load_cloud(path):
    path = str(path)
    if path.endswith(".xyz"):
        return load_xyz(path)
    if path.endswith(".ply"):
        return load_ply(path)
    raise ValueError(f"unsupported cloud format: {path}")
