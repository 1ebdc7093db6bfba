"""Viewpoint and surface sampling: Fibonacci sphere, area-uniform surface
points, farthest point subsampling, and random rotations."""

import math
import struct
from dataclasses import dataclass

import numpy as np

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
GOLDEN_ANGLE = 2.0 * math.pi * (1.0 - 1.0 / GOLDEN_RATIO)


@dataclass(eq=False)
class ViewSphere:
    """Ordered set of unit view directions on the sphere."""

    viewpoints: np.ndarray  # (n, 3) float64 unit vectors

    def __post_init__(self):
        self.viewpoints = np.asarray(self.viewpoints, dtype=np.float64).reshape(-1, 3)
        self.viewpoints.setflags(write=False)

    @property
    def n(self):
        return self.viewpoints.shape[0]


@dataclass(eq=False)
class SurfaceCloud:
    """Points on a mesh surface with the triangle each point came from."""

    points: np.ndarray       # (k, 3) float64
    source_face: np.ndarray  # (k,) int32 triangle index

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.source_face = np.asarray(self.source_face, dtype=np.int32).reshape(-1)

    def __len__(self):
        return self.points.shape[0]


def fibonacci_sphere(n):
    """Near-equidistant deterministic point layout on the unit sphere.

    Offset-by-half latitude lattice: z_i = 1 - 2(i + 0.5)/n, azimuth
    phi_i = i * golden_angle. Pure function of n.
    """
    if n < 1:
        raise ValueError(f"need at least one viewpoint, got {n}")
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = GOLDEN_ANGLE * i
    pts = np.column_stack((r * np.cos(phi), r * np.sin(phi), z))
    return ViewSphere(pts)


def sample_surface_uniform(mesh, k, seed):
    """Sample k points uniformly on the mesh surface.

    Triangles are chosen with probability proportional to area; inside a
    triangle the point is drawn by reflected barycentric sampling. The
    result is deterministic for a fixed seed.
    """
    areas = mesh.face_areas
    total = areas.sum()
    if total <= 0.0:
        raise ValueError("cannot sample a mesh whose faces are all degenerate")
    rng = np.random.default_rng(seed)
    tri = rng.choice(mesh.n_triangles, size=k, p=areas / total)
    uv = rng.random((k, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    a = mesh.vertices[mesh.faces[tri, 0]]
    b = mesh.vertices[mesh.faces[tri, 1]]
    c = mesh.vertices[mesh.faces[tri, 2]]
    pts = a + uv[:, :1] * (b - a) + uv[:, 1:] * (c - a)
    return SurfaceCloud(pts, tri.astype(np.int32))


def farthest_point_sample(cloud, m, seed, start=None):
    """Greedy farthest point subsampling of a surface cloud.

    Starts from a seeded random point (or ``start`` when given); every
    subsequent pick maximizes the minimum Euclidean distance to the points
    already selected, ties broken by lowest index. Returns a new
    SurfaceCloud with the selected points in pick order.
    """
    n = len(cloud)
    if n == 0:
        raise ValueError("cannot subsample an empty cloud")
    if m > n:
        raise ValueError(f"cannot select {m} points from {n}")
    pts = cloud.points
    if start is None:
        start = int(np.random.default_rng(seed).integers(n))
    chosen = np.empty(m, dtype=np.int64)
    chosen[0] = start
    dist = np.linalg.norm(pts - pts[start], axis=1)
    for j in range(1, m):
        nxt = int(np.argmax(dist))  # argmax returns the first (lowest) index on ties
        chosen[j] = nxt
        np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1), out=dist)
    return SurfaceCloud(pts[chosen], cloud.source_face[chosen])


def euler_rotation(ax, ay, az):
    """Rotation matrix from successive rotations about x, then y, then z."""
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]], dtype=np.float64)
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]], dtype=np.float64)
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]], dtype=np.float64)
    return rz @ ry @ rx


def random_rotation(seed):
    """Random rotation composed of three uniform angles on [0, 2*pi).

    Note this is the plain Euler-angle composition, which is not uniform
    on the rotation group.
    """
    rng = np.random.default_rng(seed)
    ax, ay, az = rng.uniform(0.0, 2.0 * math.pi, size=3)
    return euler_rotation(ax, ay, az)


def save_xyz(points, path):
    """Write points as whitespace-separated XYZ text."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in pts:
            fh.write("%.17g %.17g %.17g\n" % (x, y, z))


def load_xyz(path):
    return np.loadtxt(path, dtype=np.float64).reshape(-1, 3)


def save_xyz_binary(points, path):
    """Compact binary form: little-endian uint32 count, then float32 xyz."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", pts.shape[0]))
        fh.write(pts.astype("<f4").tobytes())


def load_xyz_binary(path):
    with open(path, "rb") as fh:
        (count,) = struct.unpack("<I", fh.read(4))
        data = np.frombuffer(fh.read(count * 12), dtype="<f4")
    return data.reshape(count, 3).astype(np.float64)
