"""Procedural test meshes.

All fixtures are deterministic. Run ``python -m viewq.fixtures OUTDIR`` to
write them as OFF files.
"""

import math
import sys

import numpy as np

from .mesh_io import build_mesh

_CUBE_QUADS = [
    (0, 1, 2, 3),  # z = -h
    (4, 5, 6, 7),  # z = +h
    (0, 1, 5, 4),  # y = -h
    (3, 2, 6, 7),  # y = +h
    (0, 3, 7, 4),  # x = -h
    (1, 2, 6, 5),  # x = +h
]


def _cube_vertices(side, center):
    h = side / 2.0
    cx, cy, cz = center
    return np.array([
        (cx - h, cy - h, cz - h),
        (cx + h, cy - h, cz - h),
        (cx + h, cy + h, cz - h),
        (cx - h, cy + h, cz - h),
        (cx - h, cy - h, cz + h),
        (cx + h, cy - h, cz + h),
        (cx + h, cy + h, cz + h),
        (cx - h, cy + h, cz + h),
    ], dtype=np.float64)


def unit_cube(side=1.0, center=(0.0, 0.0, 0.0), triangulated=False):
    """Axis-aligned cube. With ``triangulated`` each side is two triangle
    faces; otherwise each side is a single quad face (split only for
    rendering)."""
    verts = _cube_vertices(side, center)
    if not triangulated:
        return build_mesh(verts, _CUBE_QUADS)
    polys = []
    for a, b, c, d in _CUBE_QUADS:
        polys.append((a, b, c))
        polys.append((a, c, d))
    return build_mesh(verts, polys)


def nested_cubes(outer=2.0, inner=1.0):
    """A triangulated cube fully enclosed in a larger one (24 faces)."""
    vo = _cube_vertices(outer, (0.0, 0.0, 0.0))
    vi = _cube_vertices(inner, (0.0, 0.0, 0.0))
    verts = np.vstack((vo, vi))
    polys = []
    for base in (0, 8):
        for a, b, c, d in _CUBE_QUADS:
            polys.append((base + a, base + b, base + c))
            polys.append((base + a, base + c, base + d))
    return build_mesh(verts, polys)


def icosphere(subdivisions=2, radius=1.0):
    """Icosahedron subdivided ``subdivisions`` times (20 * 4^s triangles)."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    verts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return build_mesh(np.array(verts) * radius, faces)


def uv_sphere(rows, cols, radius=1.0):
    """Latitude/longitude sphere with exactly 2 * cols * (rows - 2) triangles."""
    if rows < 3 or cols < 3:
        raise ValueError("need rows >= 3 and cols >= 3")
    verts = [(0.0, 0.0, radius)]
    for r in range(1, rows - 1):
        theta = math.pi * r / (rows - 1)
        for c in range(cols):
            phi = 2.0 * math.pi * c / cols
            verts.append((radius * math.sin(theta) * math.cos(phi),
                          radius * math.sin(theta) * math.sin(phi),
                          radius * math.cos(theta)))
    verts.append((0.0, 0.0, -radius))
    south = len(verts) - 1

    def ring(r, c):
        return 1 + (r - 1) * cols + (c % cols)

    polys = []
    for c in range(cols):
        polys.append((0, ring(1, c), ring(1, c + 1)))
    for r in range(1, rows - 2):
        for c in range(cols):
            a, b = ring(r, c), ring(r, c + 1)
            d, e = ring(r + 1, c), ring(r + 1, c + 1)
            polys.append((a, d, e))
            polys.append((a, e, b))
    for c in range(cols):
        polys.append((south, ring(rows - 2, c + 1), ring(rows - 2, c)))
    return build_mesh(np.array(verts, dtype=np.float64), polys)


def _box_polys(vmin, vmax):
    x0, y0, z0 = vmin
    x1, y1, z1 = vmax
    verts = np.array([
        (x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
        (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1),
    ], dtype=np.float64)
    polys = []
    for a, b, c, d in _CUBE_QUADS:
        polys.append((a, b, c))
        polys.append((a, c, d))
    return verts, polys


def airplane(subdivisions=3):
    """Toy airplane: ellipsoid fuselage plus thin boxes for wings, tail
    plane, fin and two engine pods. Triangle soup; parts may interpenetrate,
    occlusion sorts it out."""
    body = icosphere(subdivisions)
    verts = [body.vertices * np.array([1.6, 0.22, 0.25])]
    polys = [tuple(f) for f in body.faces]
    offset = body.n_vertices
    boxes = [
        ((-0.10, -1.50, -0.085), (0.50, 1.50, -0.025)),   # main wing
        ((-1.45, -0.55, 0.10), (-1.05, 0.55, 0.16)),      # tail plane
        ((-1.45, -0.03, 0.10), (-1.05, 0.03, 0.60)),      # vertical fin
        ((-0.05, -0.80, -0.22), (0.40, -0.60, -0.09)),    # engine left
        ((-0.05, 0.60, -0.22), (0.40, 0.80, -0.09)),      # engine right
    ]
    for vmin, vmax in boxes:
        v, p = _box_polys(vmin, vmax)
        verts.append(v)
        polys += [tuple(offset + i for i in tri) for tri in p]
        offset += len(v)
    return build_mesh(np.vstack(verts), polys)


def explode(mesh):
    """Triangle-soup copy: every face gets its own three vertices, so all
    per-face costs (vertex transform included) scale exactly with the face
    count. Used by the timing fixtures."""
    verts = mesh.vertices[mesh.faces.ravel()]
    faces = np.arange(mesh.n_triangles * 3, dtype=np.int32).reshape(-1, 3)
    return build_mesh(verts, [tuple(f) for f in faces])


def single_triangle():
    return build_mesh(
        np.array([(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]),
        [(0, 1, 2)])


def quad_plate(subdivisions=0, size=1.0):
    """Planar square plate at z=0. With subdivisions s it is split into
    4^s * 2 coplanar triangle faces; at s=0 it is one quad face."""
    n = 2 ** subdivisions
    h = size / 2.0
    xs = np.linspace(-h, h, n + 1)
    verts = np.array([(x, y, 0.0) for y in xs for x in xs])
    if subdivisions == 0:
        return build_mesh(verts, [(0, 1, 3, 2)])
    polys = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b = a + 1
            c = a + n + 1
            d = c + 1
            polys.append((a, b, d))
            polys.append((a, d, c))
    return build_mesh(verts, polys)


ALL = {
    "cube_quads": lambda: unit_cube(),
    "cube_tris": lambda: unit_cube(triangulated=True),
    "nested_cubes": nested_cubes,
    "icosphere2": lambda: icosphere(2),
    "icosphere3": lambda: icosphere(3),
    "uv_sphere_1k": lambda: explode(uv_sphere(22, 25)),
    "uv_sphere_10k": lambda: explode(uv_sphere(102, 50)),
    "airplane": airplane,
}


def main(argv=None):
    from .mesh_io import save_off

    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m viewq.fixtures OUTDIR", file=sys.stderr)
        return 2
    import os
    os.makedirs(argv[0], exist_ok=True)
    for name, maker in ALL.items():
        path = os.path.join(argv[0], name + ".off")
        save_off(maker(), path)
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
