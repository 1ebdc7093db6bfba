"""Viewpoint quality evaluation on triangle meshes via software rasterization."""

__version__ = "0.1.0"

from .mesh_io import Mesh, build_mesh, load_mesh, mesh_summary, save_off  # noqa: F401
from .sampling import (  # noqa: F401
    SurfaceCloud,
    ViewSphere,
    farthest_point_sample,
    fibonacci_sphere,
    random_rotation,
    sample_surface_uniform,
)
from .rasterizer import Camera, FaceStats, make_camera, rasterize  # noqa: F401
from .vq_measures import (  # noqa: F401
    MEASURES,
    VQMap,
    evaluate_model,
    normalize_map,
    viewpoint_entropy,
    visibility_ratio,
    viewpoint_kl,
    viewpoint_mi,
)
