"""Deterministic software perspective rasterizer (item buffer).

Every covered pixel stores the id of the front-most source face, so
per-face projected areas are exact pixel counts and always sum to the
covered total. Projected vertices are snapped to a 1/256 subpixel integer
grid and coverage is decided with int64 edge functions under a top-left
fill rule: shared triangle edges are never double counted and results are
bit-reproducible regardless of scheduling. Triangles are depth-tested per
pixel on interpolated inverse depth; there is no backface culling, so
hidden geometry is removed by occlusion alone.

Two entry points share the same kernel: :func:`rasterize` renders one
camera, :func:`sweep_counts` renders a whole view sphere in one pass per
worker with reused buffers, which keeps the cost per view dominated by
per-triangle work.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DegenerateGeometryError

SUBPIXEL = 256
# Faces whose supporting plane passes (almost) through the eye project to
# slivers of essentially zero area; snapping can fatten them enough to steal
# single pixels, so anything below this exact screen area is dropped.
MIN_SCREEN_AREA = 1e-6  # px^2


@dataclass(eq=False)
class Camera:
    eye: np.ndarray
    target: np.ndarray
    up: np.ndarray
    vertical_fov: float      # radians
    resolution: tuple        # (width, height) pixels
    near: float
    far: float


@dataclass(eq=False)
class FaceStats:
    """Per-source-face pixel ownership for one view."""

    pixel_counts: np.ndarray  # (S,) int64
    total_pixels: int
    visible: np.ndarray       # (S,) bool

    def conditional(self):
        """Projected-area distribution p(face | view)."""
        return self.pixel_counts / self.total_pixels


def make_camera(mesh, view_dir, resolution=(1024, 1024), fov=math.pi / 2):
    """Camera at half the bbox diagonal along view_dir, aimed at the bbox center.

    Up is +y unless the view direction is within ~8 degrees of the y axis,
    in which case +x is used.
    """
    if mesh.bbox_diagonal <= 0.0:
        raise DegenerateGeometryError("bounding box has zero diagonal")
    d = np.asarray(view_dir, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise ValueError("view direction must be nonzero")
    d = d / norm
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    eye = mesh.bbox_center + 0.5 * mesh.bbox_diagonal * d
    up = np.array([0.0, 1.0, 0.0]) if abs(d[1]) <= 0.99 else np.array([1.0, 0.0, 0.0])
    return Camera(
        eye=eye,
        target=mesh.bbox_center.copy(),
        up=up,
        vertical_fov=float(fov),
        resolution=(int(resolution[0]), int(resolution[1])),
        near=1e-3 * mesh.bbox_diagonal,
        far=4.0 * mesh.bbox_diagonal,
    )


@njit(cache=True, nogil=True)
def _render_view(verts, faces, sources, eye, right, up, fwd,
                 focal_x, focal_y, near, owner, depth, xv, yv, dv):
    height, width = owner.shape
    nv = verts.shape[0]
    for i in range(nv):
        rx = verts[i, 0] - eye[0]
        ry = verts[i, 1] - eye[1]
        rz = verts[i, 2] - eye[2]
        xv[i] = rx * right[0] + ry * right[1] + rz * right[2]
        yv[i] = rx * up[0] + ry * up[1] + rz * up[2]
        dv[i] = rx * fwd[0] + ry * fwd[1] + rz * fwd[2]

    half_w = 0.5 * width
    half_h = 0.5 * height
    # scratch for the near-plane clipper (at most 4 vertices)
    cx = np.empty(4, dtype=np.float64)
    cy = np.empty(4, dtype=np.float64)
    cd = np.empty(4, dtype=np.float64)
    sx = np.empty(4, dtype=np.float64)
    sy = np.empty(4, dtype=np.float64)
    sq = np.empty(4, dtype=np.float64)
    ix3 = np.empty(3, dtype=np.int64)
    iy3 = np.empty(3, dtype=np.int64)
    q3 = np.empty(3, dtype=np.float64)

    for f in range(faces.shape[0]):
        src = sources[f]
        n_out = 0
        # Sutherland-Hodgman clip of the triangle against depth >= near
        for e in range(3):
            i0 = faces[f, e]
            i1 = faces[f, (e + 1) % 3]
            d0 = dv[i0]
            d1 = dv[i1]
            in0 = d0 >= near
            in1 = d1 >= near
            if in0:
                cx[n_out] = xv[i0]
                cy[n_out] = yv[i0]
                cd[n_out] = d0
                n_out += 1
            if in0 != in1:
                t = (near - d0) / (d1 - d0)
                cx[n_out] = xv[i0] + t * (xv[i1] - xv[i0])
                cy[n_out] = yv[i0] + t * (yv[i1] - yv[i0])
                cd[n_out] = near
                n_out += 1
        if n_out < 3:
            continue

        for k in range(n_out):
            inv = 1.0 / cd[k]
            sx[k] = (cx[k] * inv * focal_x + 1.0) * half_w
            sy[k] = (1.0 - cy[k] * inv * focal_y) * half_h
            sq[k] = inv

        # fan the clipped polygon (3 or 4 vertices)
        for t in range(n_out - 2):
            ax, ay, aq = sx[0], sy[0], sq[0]
            bx, by, bq = sx[t + 1], sy[t + 1], sq[t + 1]
            gx, gy, gq = sx[t + 2], sy[t + 2], sq[t + 2]

            area_f = (bx - ax) * (gy - ay) - (gx - ax) * (by - ay)
            if abs(area_f) * 0.5 < MIN_SCREEN_AREA:
                continue

            ix3[0] = np.int64(np.rint(ax * SUBPIXEL))
            iy3[0] = np.int64(np.rint(ay * SUBPIXEL))
            q3[0] = aq
            ix3[1] = np.int64(np.rint(bx * SUBPIXEL))
            iy3[1] = np.int64(np.rint(by * SUBPIXEL))
            q3[1] = bq
            ix3[2] = np.int64(np.rint(gx * SUBPIXEL))
            iy3[2] = np.int64(np.rint(gy * SUBPIXEL))
            q3[2] = gq

            area2 = ((ix3[1] - ix3[0]) * (iy3[2] - iy3[0])
                     - (ix3[2] - ix3[0]) * (iy3[1] - iy3[0]))
            if area2 == 0:
                continue
            if area2 < 0:
                ix3[1], ix3[2] = ix3[2], ix3[1]
                iy3[1], iy3[2] = iy3[2], iy3[1]
                q3[1], q3[2] = q3[2], q3[1]
                area2 = -area2

            x0, x1, x2 = ix3[0], ix3[1], ix3[2]
            y0, y1, y2 = iy3[0], iy3[1], iy3[2]

            minx = min(x0, min(x1, x2))
            maxx = max(x0, max(x1, x2))
            miny = min(y0, min(y1, y2))
            maxy = max(y0, max(y1, y2))
            # first/last pixel whose center (i*256 + 128) is inside the bbox
            px0 = -((-(minx - 128)) // SUBPIXEL)
            px1 = (maxx - 128) // SUBPIXEL
            py0 = -((-(miny - 128)) // SUBPIXEL)
            py1 = (maxy - 128) // SUBPIXEL
            if px0 < 0:
                px0 = 0
            if py0 < 0:
                py0 = 0
            if px1 > width - 1:
                px1 = width - 1
            if py1 > height - 1:
                py1 = height - 1
            if px0 > px1 or py0 > py1:
                continue

            # edge k is opposite vertex k and carries its barycentric weight
            dx0, dy0 = x2 - x1, y2 - y1
            dx1, dy1 = x0 - x2, y0 - y2
            dx2, dy2 = x1 - x0, y1 - y0
            # top-left rule: boundary pixels belong to top (dy==0, dx>0)
            # and left (dy<0) edges only
            b0 = np.int64(0) if (dy0 < 0 or (dy0 == 0 and dx0 > 0)) else np.int64(-1)
            b1 = np.int64(0) if (dy1 < 0 or (dy1 == 0 and dx1 > 0)) else np.int64(-1)
            b2 = np.int64(0) if (dy2 < 0 or (dy2 == 0 and dx2 > 0)) else np.int64(-1)

            cx0 = px0 * SUBPIXEL + 128
            cy0 = py0 * SUBPIXEL + 128
            e0_row = dx0 * (cy0 - y1) - dy0 * (cx0 - x1)
            e1_row = dx1 * (cy0 - y2) - dy1 * (cx0 - x2)
            e2_row = dx2 * (cy0 - y0) - dy2 * (cx0 - x0)
            e0_dx, e0_dy = -dy0 * SUBPIXEL, dx0 * SUBPIXEL
            e1_dx, e1_dy = -dy1 * SUBPIXEL, dx1 * SUBPIXEL
            e2_dx, e2_dy = -dy2 * SUBPIXEL, dx2 * SUBPIXEL

            inv_area = 1.0 / area2
            k0 = q3[0] * inv_area
            k1 = q3[1] * inv_area
            k2 = q3[2] * inv_area

            for py in range(py0, py1 + 1):
                e0 = e0_row
                e1 = e1_row
                e2 = e2_row
                for px in range(px0, px1 + 1):
                    if e0 + b0 >= 0 and e1 + b1 >= 0 and e2 + b2 >= 0:
                        q = e0 * k0 + e1 * k1 + e2 * k2
                        if q > depth[py, px]:
                            depth[py, px] = q
                            owner[py, px] = src
                    e0 += e0_dx
                    e1 += e1_dx
                    e2 += e2_dx
                e0_row += e0_dy
                e1_row += e1_dy
                e2_row += e2_dy


@njit(cache=True, nogil=True)
def _sweep_range(verts, faces, sources, n_src, eyes, rights, ups, fwds,
                 width, height, focal_x, focal_y, near, i0, i1, counts_out):
    owner = np.empty((height, width), dtype=np.int32)
    depth = np.empty((height, width), dtype=np.float64)
    nv = verts.shape[0]
    xv = np.empty(nv, dtype=np.float64)
    yv = np.empty(nv, dtype=np.float64)
    dv = np.empty(nv, dtype=np.float64)
    for v in range(i0, i1):
        owner[:, :] = -1
        depth[:, :] = 0.0
        _render_view(verts, faces, sources, eyes[v], rights[v], ups[v],
                     fwds[v], focal_x, focal_y, near, owner, depth,
                     xv, yv, dv)
        for y in range(height):
            for x in range(width):
                s = owner[y, x]
                if s >= 0:
                    counts_out[v, s] += 1


def camera_frame(camera):
    """Orthonormal (right, up, forward) basis of a camera."""
    fwd = np.asarray(camera.target, dtype=np.float64) - camera.eye
    dist = np.linalg.norm(fwd)
    if dist == 0.0:
        raise ValueError("camera eye and target coincide")
    fwd = fwd / dist
    right = np.cross(fwd, camera.up)
    rn = np.linalg.norm(right)
    if rn == 0.0:
        raise ValueError("camera up vector is parallel to the view direction")
    right = right / rn
    up = np.cross(right, fwd)
    return right, up, fwd


def _focals(width, height, fov):
    if width <= 0 or height <= 0:
        raise ValueError(f"resolution must be positive, got {(width, height)}")
    focal_y = 1.0 / math.tan(0.5 * fov)
    focal_x = focal_y * height / width
    return focal_x, focal_y


def render_item_buffer(mesh, camera):
    """Render the item buffer for one view.

    Returns (owner, depth): owner is (H, W) int32 holding the source-face
    id of the front-most face per pixel (-1 where nothing is covered),
    depth holds the winning inverse depth.
    """
    width, height = camera.resolution
    focal_x, focal_y = _focals(width, height, camera.vertical_fov)
    right, up, fwd = camera_frame(camera)
    owner = np.full((height, width), -1, dtype=np.int32)
    depth = np.zeros((height, width), dtype=np.float64)
    nv = mesh.n_vertices
    _render_view(mesh.vertices, mesh.faces, mesh.tri_source,
                 np.asarray(camera.eye, dtype=np.float64), right, up, fwd,
                 focal_x, focal_y, camera.near, owner, depth,
                 np.empty(nv), np.empty(nv), np.empty(nv))
    return owner, depth


def rasterize(mesh, camera):
    """Rasterize one view and return per-source-face pixel statistics."""
    owner, _ = render_item_buffer(mesh, camera)
    flat = owner.ravel()
    covered = flat[flat >= 0]
    counts = np.bincount(covered, minlength=mesh.n_source_faces).astype(np.int64)
    return FaceStats(
        pixel_counts=counts,
        total_pixels=int(covered.size),
        visible=counts > 0,
    )


def sphere_frames(mesh, view_dirs):
    """Vectorized camera frames for many view directions (the make_camera
    placement rule applied to every direction at once)."""
    d = np.asarray(view_dirs, dtype=np.float64)
    d = d / np.linalg.norm(d, axis=1, keepdims=True)
    eyes = mesh.bbox_center + 0.5 * mesh.bbox_diagonal * d
    ups_hint = np.where((np.abs(d[:, 1]) <= 0.99)[:, None],
                        np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]))
    fwd = mesh.bbox_center - eyes
    fwd = fwd / np.linalg.norm(fwd, axis=1, keepdims=True)
    right = np.cross(fwd, ups_hint)
    right = right / np.linalg.norm(right, axis=1, keepdims=True)
    up = np.cross(right, fwd)
    return eyes, right, up, fwd


def sweep_counts(mesh, view_dirs, resolution=1024, fov=math.pi / 2, threads=1):
    """Pixel counts for every view direction: (n_views, n_source_faces) int64.

    Views are rendered with reused per-worker buffers; rows are written by
    exactly one worker each, so the result is independent of the thread
    count and of scheduling.
    """
    if mesh.bbox_diagonal <= 0.0:
        raise DegenerateGeometryError("bounding box has zero diagonal")
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    width, height = (int(resolution[0]), int(resolution[1]))
    focal_x, focal_y = _focals(width, height, float(fov))
    near = 1e-3 * mesh.bbox_diagonal
    eyes, rights, ups, fwds = sphere_frames(mesh, view_dirs)
    n = eyes.shape[0]
    counts = np.zeros((n, mesh.n_source_faces), dtype=np.int64)
    threads = max(1, int(threads))

    def run(i0, i1):
        _sweep_range(mesh.vertices, mesh.faces, mesh.tri_source,
                     mesh.n_source_faces, eyes, rights, ups, fwds,
                     width, height, focal_x, focal_y, near, i0, i1, counts)

    if threads == 1 or n < 2 * threads:
        run(0, n)
        return counts
    bounds = np.linspace(0, n, threads + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run, int(bounds[k]), int(bounds[k + 1]))
                   for k in range(threads)]
        for fut in futures:
            fut.result()
    return counts


def save_item_buffer_pgm(owner, path):
    """Debug dump of an item buffer as binary PGM (face id mod 255, bg 0)."""
    img = np.where(owner < 0, 0, 1 + (owner % 255)).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        fh.write(img.tobytes())
