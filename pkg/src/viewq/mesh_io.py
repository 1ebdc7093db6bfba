"""Triangle mesh loading, validation, and geometric aggregates.

Meshes are stored as indexed triangle soup. Faces of the input file keep
their identity: a polygonal face is fan-triangulated for rendering, but all
of its triangles map back to one *source face* through ``tri_source``.
Visibility statistics and the quality measures operate on source faces, so
a quad contributes a single entry to the measured distributions no matter
how it was split for rasterization. For files authored with triangles the
two notions coincide.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMeshError, MeshFormatError, MeshIndexError


@dataclass(eq=False)
class Mesh:
    """Immutable indexed triangle mesh with per-face aggregates.

    Attributes:
        vertices: (V, 3) float64 positions in model units.
        faces: (T, 3) int32 vertex indices, one row per triangle.
        tri_source: (T,) int32 index of the input-file face each triangle
            came from; monotone non-decreasing.
        n_source_faces: number of faces in the input file.
        face_areas: (T,) float64 triangle areas (half cross-product norm).
        source_areas: (S,) float64 area per source face.
        degenerate: (T,) bool flags for zero-area triangles (kept in place
            so indexing stays aligned with the input file).
    """

    vertices: np.ndarray
    faces: np.ndarray
    tri_source: np.ndarray
    n_source_faces: int
    face_areas: np.ndarray = field(init=False)
    source_areas: np.ndarray = field(init=False)
    degenerate: np.ndarray = field(init=False)
    bbox_min: np.ndarray = field(init=False)
    bbox_max: np.ndarray = field(init=False)
    bbox_center: np.ndarray = field(init=False)
    bbox_diagonal: float = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int32).reshape(-1, 3)
        s = np.asarray(self.tri_source, dtype=np.int32).reshape(-1)
        if v.shape[0] == 0 or f.shape[0] == 0:
            raise EmptyMeshError("mesh has no vertices or no faces")
        if f.min() < 0 or f.max() >= v.shape[0]:
            raise MeshIndexError(
                f"face index out of range (have {v.shape[0]} vertices)")
        if s.shape[0] != f.shape[0]:
            raise ValueError("tri_source must have one entry per triangle")
        self.vertices = v
        self.faces = f
        self.tri_source = s
        a = v[f[:, 0]]
        cross = np.cross(v[f[:, 1]] - a, v[f[:, 2]] - a)
        self.face_areas = 0.5 * np.linalg.norm(cross, axis=1)
        self.degenerate = self.face_areas == 0.0
        self.source_areas = np.bincount(
            s, weights=self.face_areas, minlength=self.n_source_faces)
        if self.total_area <= 0.0:
            raise EmptyMeshError("mesh has zero total surface area")
        self.bbox_min = v.min(axis=0)
        self.bbox_max = v.max(axis=0)
        self.bbox_center = 0.5 * (self.bbox_min + self.bbox_max)
        self.bbox_diagonal = float(np.linalg.norm(self.bbox_max - self.bbox_min))
        for arr in (self.vertices, self.faces, self.tri_source,
                    self.face_areas, self.source_areas, self.degenerate,
                    self.bbox_min, self.bbox_max, self.bbox_center):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.faces.shape[0]

    @property
    def total_area(self):
        return float(self.face_areas.sum())


def build_mesh(vertices, polygons):
    """Build a Mesh from vertices and polygonal faces.

    Polygons with more than three vertices are fan-triangulated around
    their first vertex. Each polygon becomes one source face.
    """
    tris = []
    sources = []
    for si, poly in enumerate(polygons):
        idx = list(poly)
        if len(idx) < 3:
            raise ValueError(f"face {si} has fewer than 3 vertices")
        for k in range(1, len(idx) - 1):
            tris.append((idx[0], idx[k], idx[k + 1]))
            sources.append(si)
    if not tris:
        raise EmptyMeshError("no faces given")
    return Mesh(np.asarray(vertices, dtype=np.float64),
                np.asarray(tris, dtype=np.int32),
                np.asarray(sources, dtype=np.int32),
                n_source_faces=len(polygons))


def load_mesh(path, fmt=None):
    """Load a mesh from an OFF or OBJ file.

    Args:
        path: file to read.
        fmt: "off" or "obj"; inferred from the extension when None.

    Raises:
        MeshFormatError: unparsable content (includes the line number).
        MeshIndexError: face references a vertex that does not exist.
        EmptyMeshError: no vertices, no faces, or zero surface area.
    """
    if fmt is None:
        fmt = os.path.splitext(str(path))[1].lstrip(".").lower()
    fmt = fmt.lower()
    if fmt == "off":
        return _load_off(path)
    if fmt == "obj":
        return _load_obj(path)
    raise ValueError(f"unsupported mesh format: {fmt!r}")


def _load_off(path):
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        lines = fh.readlines()

    def content(i):
        # strip comments and whitespace
        return lines[i].split("#", 1)[0].strip()

    pos = 0
    n_lines = len(lines)
    while pos < n_lines and not content(pos):
        pos += 1
    if pos >= n_lines:
        raise MeshFormatError(path, 1, "empty file")
    header = content(pos)
    counts_tokens = None
    if header.startswith("OFF"):
        rest = header[3:].strip()
        if rest:
            counts_tokens = (rest.split(), pos + 1)
        pos += 1
    else:
        # headerless variant: first line is the counts line
        counts_tokens = (header.split(), pos + 1)
        pos += 1
    if counts_tokens is None:
        while pos < n_lines and not content(pos):
            pos += 1
        if pos >= n_lines:
            raise MeshFormatError(path, pos, "missing counts line")
        counts_tokens = (content(pos).split(), pos + 1)
        pos += 1
    tokens, counts_line = counts_tokens
    if len(tokens) < 2:
        raise MeshFormatError(path, counts_line, "expected vertex and face counts")
    try:
        n_verts, n_faces = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise MeshFormatError(path, counts_line, f"bad counts line: {tokens!r}") from None
    if n_verts == 0 or n_faces == 0:
        raise EmptyMeshError(f"{path}: mesh declares {n_verts} vertices, {n_faces} faces")

    verts = np.empty((n_verts, 3), dtype=np.float64)
    got = 0
    while got < n_verts:
        if pos >= n_lines:
            raise MeshFormatError(path, n_lines, f"expected {n_verts} vertices, got {got}")
        text = content(pos)
        pos += 1
        if not text:
            continue
        parts = text.split()
        if len(parts) < 3:
            raise MeshFormatError(path, pos, f"vertex line needs 3 coordinates: {text!r}")
        try:
            verts[got] = (float(parts[0]), float(parts[1]), float(parts[2]))
        except ValueError:
            raise MeshFormatError(path, pos, f"bad vertex line: {text!r}") from None
        got += 1

    polys = []
    while len(polys) < n_faces:
        if pos >= n_lines:
            raise MeshFormatError(path, n_lines, f"expected {n_faces} faces, got {len(polys)}")
        text = content(pos)
        pos += 1
        if not text:
            continue
        parts = text.split()
        try:
            k = int(parts[0])
        except ValueError:
            raise MeshFormatError(path, pos, f"bad face line: {text!r}") from None
        if k < 3 or len(parts) < 1 + k:
            raise MeshFormatError(path, pos, f"face line declares {k} indices: {text!r}")
        try:
            idx = [int(t) for t in parts[1:1 + k]]
        except ValueError:
            raise MeshFormatError(path, pos, f"bad face index in: {text!r}") from None
        for i in idx:
            if i < 0 or i >= n_verts:
                raise MeshIndexError(f"{path}:{pos}: vertex index {i} out of range")
        polys.append(idx)
    return build_mesh(verts, polys)


def _load_obj(path):
    verts = []
    polys = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshFormatError(path, lineno, f"vertex line needs 3 coordinates: {text!r}")
                try:
                    verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise MeshFormatError(path, lineno, f"bad vertex line: {text!r}") from None
            elif tag == "f":
                if len(parts) < 4:
                    raise MeshFormatError(path, lineno, f"face line needs 3 indices: {text!r}")
                idx = []
                for token in parts[1:]:
                    ref = token.split("/", 1)[0]
                    try:
                        i = int(ref)
                    except ValueError:
                        raise MeshFormatError(path, lineno, f"bad face token {token!r}") from None
                    # OBJ indices are 1-based; negative indices count from the end
                    i = i - 1 if i > 0 else len(verts) + i
                    if i < 0 or i >= len(verts):
                        raise MeshIndexError(f"{path}:{lineno}: vertex index {token} out of range")
                    idx.append(i)
                polys.append(idx)
            # all other records (vn, vt, usemtl, ...) are ignored
    if not verts or not polys:
        raise EmptyMeshError(f"{path}: no vertices or faces found")
    return build_mesh(np.asarray(verts, dtype=np.float64), polys)


def _source_polygons(mesh):
    """Recover the input polygons from the fan triangulation.

    A source face whose triangles do not form a fan (hand-assembled
    tri_source) falls back to one triangle face per triangle.
    """
    polys = []
    faces = mesh.faces
    start = 0
    for src in range(mesh.n_source_faces):
        end = start
        while end < len(faces) and mesh.tri_source[end] == src:
            end += 1
        group = faces[start:end]
        if len(group) == 0:
            continue
        ring = [int(group[0, 0]), int(group[0, 1]), int(group[0, 2])]
        is_fan = True
        for k in range(1, len(group)):
            if group[k, 0] != ring[0] or group[k, 1] != ring[-1]:
                is_fan = False
                break
            ring.append(int(group[k, 2]))
        if is_fan:
            polys.append(ring)
        else:
            polys.extend([int(a), int(b), int(c)] for a, b, c in group)
        start = end
    return polys


def save_off(mesh, path):
    """Write a mesh as ASCII OFF.

    Source faces are written as the original polygons (reconstructed from
    the fan triangulation), so face grouping survives a round trip.
    Coordinates use 17 significant digits so a reload is bit-exact.
    """
    polys = _source_polygons(mesh)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {len(polys)} 0\n")
        for x, y, z in mesh.vertices:
            fh.write("%.17g %.17g %.17g\n" % (x, y, z))
        for poly in polys:
            fh.write(str(len(poly)) + " " + " ".join(str(i) for i in poly) + "\n")


def mesh_summary(mesh):
    """Deterministic summary record for a mesh."""
    return {
        "n_vertices": mesh.n_vertices,
        "n_triangles": mesh.n_triangles,
        "n_faces": mesh.n_source_faces,
        "total_area": mesh.total_area,
        "degenerate_triangles": int(mesh.degenerate.sum()),
        "bbox_min": [float(x) for x in mesh.bbox_min],
        "bbox_max": [float(x) for x in mesh.bbox_max],
        "bbox_center": [float(x) for x in mesh.bbox_center],
        "bbox_diagonal": mesh.bbox_diagonal,
    }
