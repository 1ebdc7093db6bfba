"""Visibility-based hidden-face removal.

A face is kept iff it owns at least one pixel from at least one direction
of a Fibonacci view set; everything else (interior structure, fully
occluded geometry) is dropped and the vertex list is compacted. Geometry of
kept faces is preserved bit-exactly.
"""

import logging

import numpy as np

from .errors import EmptyMeshError
from .mesh_io import Mesh
from .sampling import fibonacci_sphere
from .vq_measures import rasterize_views

logger = logging.getLogger(__name__)


def remove_hidden_faces(mesh, n_views=1000, resolution=1024, threads=0):
    """Drop faces that are invisible from every sampled direction.

    Returns (cleaned mesh, indices of removed source faces). Sub-pixel
    faces may be spuriously removed at low resolutions; a warning fires
    below 512.
    """
    if n_views < 1:
        raise ValueError("need at least one view")
    res = resolution if isinstance(resolution, int) else min(resolution)
    if res < 512:
        logger.warning(
            "resolution %s is below 512; sub-pixel faces may be dropped", resolution)
    sphere = fibonacci_sphere(n_views)
    stats = rasterize_views(mesh, sphere, resolution, threads=threads)
    keep_src = np.zeros(mesh.n_source_faces, dtype=bool)
    for st in stats:
        keep_src |= st.visible
    removed = np.flatnonzero(~keep_src)
    if removed.size == 0:
        return mesh, removed
    keep_tri = keep_src[mesh.tri_source]
    if not keep_tri.any():
        raise EmptyMeshError("every face is hidden; nothing left to keep")
    faces = mesh.faces[keep_tri]
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[faces.ravel()] = True
    remap = np.cumsum(used) - 1
    new_faces = remap[faces].astype(np.int32)
    # renumber kept source faces consecutively
    src_remap = np.cumsum(keep_src) - 1
    new_sources = src_remap[mesh.tri_source[keep_tri]].astype(np.int32)
    cleaned = Mesh(mesh.vertices[used].copy(), new_faces, new_sources,
                   n_source_faces=int(keep_src.sum()))
    return cleaned, removed
