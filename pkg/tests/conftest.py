import numpy as np
import pytest

from viewq import fixtures
from viewq.rasterizer import make_camera, rasterize
from viewq.sampling import fibonacci_sphere


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the rasterizer kernels once so timed tests measure work, not JIT
    mesh = fixtures.unit_cube()
    rasterize(mesh, make_camera(mesh, (0.0, 0.0, 1.0), 16))
    from viewq.vq_measures import evaluate_model
    evaluate_model(mesh, fibonacci_sphere(4), 16)


@pytest.fixture(scope="session")
def cube_quads():
    return fixtures.unit_cube()


@pytest.fixture(scope="session")
def cube_tris():
    return fixtures.unit_cube(triangulated=True)


@pytest.fixture(scope="session")
def airplane():
    return fixtures.airplane()


@pytest.fixture(scope="session")
def icosphere2():
    return fixtures.icosphere(2)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)
