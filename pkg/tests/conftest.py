# tests/conftest.py
import sys
import pathlib

import numpy as np
import pytest

# Put the project root (the folder that contains `tracking/` and `utils/`) on sys.path
ROOT = pathlib.Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from tracking.geometry import Intrinsics, Pose, exp_map  # noqa: E402
from tracking.mesh_render import make_box_mesh, make_sphere_mesh, save_mesh  # noqa: E402
from tracking.viewpoint_model import ViewpointModelConfig, build_model  # noqa: E402


@pytest.fixture
def intrinsics() -> Intrinsics:
    return Intrinsics(fx=600.0, fy=600.0, px=319.5, py=239.5, width=640, height=480)


@pytest.fixture
def small_intrinsics() -> Intrinsics:
    return Intrinsics(fx=200.0, fy=200.0, px=79.5, py=59.5, width=160, height=120)


@pytest.fixture(scope="session")
def cube_mesh():
    return make_box_mesh((0.06, 0.06, 0.06), name="cube")


@pytest.fixture(scope="session")
def sphere_mesh():
    return make_sphere_mesh(0.04, subdivisions=3, name="ball")


@pytest.fixture
def cube_obj(tmp_path, cube_mesh) -> pathlib.Path:
    return save_mesh(cube_mesh, tmp_path / "cube.obj")


@pytest.fixture
def front_pose() -> Pose:
    """Oblique view of the model origin from half a meter."""
    return Pose(exp_map(np.array([0.5, -0.4, 0.2])), np.array([0.0, 0.0, 0.5]))


@pytest.fixture(scope="session")
def cube_model(cube_mesh):
    """Small seeded model (162 views) built once per session."""
    return build_model(cube_mesh, ViewpointModelConfig(n_c=100, subdivisions=2, rng_seed=0))


@pytest.fixture
def near_pose() -> Pose:
    """The same oblique view from 35 cm, where the cube spans about 160 pixels."""
    return Pose(exp_map(np.array([0.5, -0.4, 0.2])), np.array([0.0, 0.0, 0.35]))


@pytest.fixture(scope="session")
def dense_cube_model(cube_mesh):
    """200 contour points per view, as in the default configuration."""
    return build_model(cube_mesh, ViewpointModelConfig(n_c=200, subdivisions=2, rng_seed=0))
