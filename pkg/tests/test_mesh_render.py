"""
tests/test_mesh_render.py

Mesh loading, the z-buffer rasterizer, contour extraction, continuous
distances and occlusion masks.
"""

#####################################
# Imports
#####################################

import pathlib

import cv2
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import ndimage

from tracking.errors import EmptyMaskError, EmptyMeshError, MeshNotFoundError, TooManyObjectsError
from tracking.geometry import Intrinsics, Pose, exp_map
from tracking.mesh_render import (
    SilhouetteMask,
    TriangleMesh,
    continuous_distance,
    continuous_distances,
    extract_contour,
    is_visible,
    load_mesh,
    make_box_mesh,
    make_sphere_mesh,
    render_depth,
    render_labels,
    render_occlusion_mask,
    save_depth_png,
    save_mask_png,
    save_mesh,
)

CAMERA = Intrinsics(fx=200.0, fy=200.0, px=80.0, py=60.0, width=161, height=121)

UNIT_CUBE_OBJ = """\
# unit cube with quad faces
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
"""

#####################################
# Helper Functions
#####################################


def _ray_cast_depth(mesh: TriangleMesh, pose: Pose, camera: Intrinsics) -> np.ndarray:
    """Per-pixel ray-triangle intersection (Moller-Trumbore), nearest hit; 0 = miss."""
    vertices = pose.transform(mesh.vertices)
    u, v = np.meshgrid(np.arange(camera.width, dtype=float), np.arange(camera.height, dtype=float))
    dirs = np.stack([(u - camera.px) / camera.fx, (v - camera.py) / camera.fy, np.ones_like(u)], axis=-1)
    dirs = dirs.reshape(-1, 3)
    best = np.full(dirs.shape[0], np.inf)
    for a, b, c in vertices[mesh.triangles]:
        e1, e2 = b - a, c - a
        p = np.cross(dirs, e2)
        det = p @ e1
        ok = np.abs(det) > 1e-15
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        s = -a
        bu = (p @ s) * inv
        q = np.cross(s, e1)
        bv = (dirs @ q) * inv
        t = (e2 @ q) * inv
        hit = ok & (bu >= 0.0) & (bv >= 0.0) & (bu + bv <= 1.0) & (t > 0.0)
        best = np.where(hit & (t < best), t, best)
    return np.where(np.isinf(best), 0.0, best).reshape(camera.height, camera.width)


def _square_mask(shape=(100, 100), rows=(20, 60), cols=(30, 70)) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    mask[rows[0] : rows[1], cols[0] : cols[1]] = True
    return mask


#####################################
# Mesh Loading
#####################################


def test_load_unit_cube_with_quads(tmp_path: pathlib.Path):
    path = tmp_path / "cube.obj"
    path.write_text(UNIT_CUBE_OBJ, encoding="utf-8")
    mesh = load_mesh(path)
    assert mesh.vertices.shape == (8, 3)
    assert mesh.triangles.shape == (12, 3)
    assert mesh.diameter == pytest.approx(np.sqrt(3.0))
    assert mesh.name == "cube"


def test_load_missing_mesh_raises(tmp_path: pathlib.Path):
    with pytest.raises(MeshNotFoundError):
        load_mesh(tmp_path / "missing.obj")


def test_tetrahedron_diameter_is_edge_length():
    vertices = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, np.sqrt(3) / 2, 0.0], [0.5, np.sqrt(3) / 6, np.sqrt(2.0 / 3.0)]]
    )
    mesh = TriangleMesh(vertices=vertices, triangles=[[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]])
    assert mesh.diameter == pytest.approx(1.0)


def test_empty_mesh_raises():
    with pytest.raises(EmptyMeshError):
        TriangleMesh(vertices=np.zeros((0, 3)), triangles=np.zeros((0, 3)))


def test_save_and_load_mesh(tmp_path: pathlib.Path, cube_mesh):
    loaded = load_mesh(save_mesh(cube_mesh, tmp_path / "box.obj"))
    assert_allclose(loaded.vertices, cube_mesh.vertices, atol=1e-9)
    assert np.array_equal(loaded.triangles, cube_mesh.triangles)


#####################################
# Rasterizer
#####################################


def test_fronto_parallel_triangle_has_constant_depth():
    mesh = TriangleMesh(vertices=[[-0.1, -0.1, 0.0], [0.1, -0.1, 0.0], [0.0, 0.1, 0.0]], triangles=[[0, 1, 2]])
    depth = render_depth(mesh, Pose(np.eye(3), [0.0, 0.0, 1.0]), CAMERA).depth
    covered = depth > 0.0
    assert covered.sum() > 100
    assert_allclose(depth[covered], 1.0, atol=1e-6)


def test_z_buffer_keeps_nearest_surface():
    near = TriangleMesh(vertices=[[-0.05, -0.05, 1.0], [0.05, -0.05, 1.0], [0.0, 0.05, 1.0]], triangles=[[0, 1, 2]])
    far = TriangleMesh(vertices=[[-0.4, -0.4, 2.0], [0.4, -0.4, 2.0], [0.0, 0.4, 2.0]], triangles=[[0, 1, 2]])
    identity = Pose.identity()
    buffers = render_labels([(far, identity), (near, identity)], CAMERA)
    near_pixels = render_depth(near, identity, CAMERA).depth > 0.0
    assert_allclose(buffers.depth[near_pixels], 1.0, atol=1e-6)
    assert np.all(buffers.object_id[near_pixels] == 1)
    assert np.all(buffers.triangle_id[buffers.object_id >= 0] == 0)
    assert np.all(buffers.object_id[buffers.depth == 0.0] == -1)


def test_sphere_center_depth():
    sphere = make_sphere_mesh(0.1, subdivisions=3)
    depth = render_depth(sphere, Pose(np.eye(3), [0.0, 0.0, 0.8]), CAMERA).depth
    assert depth[60, 80] == pytest.approx(0.7, abs=2e-3)


def test_object_behind_camera_renders_nothing(cube_mesh):
    depth = render_depth(cube_mesh, Pose(np.eye(3), [0.0, 0.0, -0.5]), CAMERA).depth
    assert not depth.any()


def test_rasterizer_matches_ray_casting(cube_mesh):
    pose = Pose(exp_map(np.array([0.4, -0.6, 0.3])), np.array([0.01, -0.005, 0.4]))
    rendered = render_depth(cube_mesh, pose, CAMERA).depth
    oracle = _ray_cast_depth(cube_mesh, pose, CAMERA)

    rendered_fg, oracle_fg = rendered > 0.0, oracle > 0.0
    edge_band = ndimage.binary_dilation(oracle_fg) & ~ndimage.binary_erosion(oracle_fg)
    assert not np.any((rendered_fg ^ oracle_fg) & ~edge_band)

    interior = ndimage.binary_erosion(oracle_fg, iterations=2) & rendered_fg
    assert interior.sum() > 200
    assert_allclose(rendered[interior], oracle[interior], atol=1e-4)


def test_debug_pngs(tmp_path: pathlib.Path, cube_mesh):
    image = render_depth(cube_mesh, Pose(np.eye(3), [0.0, 0.0, 0.5]), CAMERA)
    assert save_mask_png(image.silhouette(), tmp_path / "mask.png")
    assert save_depth_png(image, tmp_path / "depth.png")
    mask = cv2.imread(str(tmp_path / "mask.png"), cv2.IMREAD_UNCHANGED)
    depth_mm = cv2.imread(str(tmp_path / "depth.png"), cv2.IMREAD_UNCHANGED)
    assert mask.dtype == np.uint8 and set(np.unique(mask)) <= {0, 255}
    assert depth_mm.dtype == np.uint16
    assert np.array_equal(depth_mm > 0, image.depth > 0)
    assert depth_mm[60, 80] == int(np.rint(image.depth[60, 80] * 1000.0))


#####################################
# Contours
#####################################


def test_square_contour_and_right_edge_normals():
    mask = _square_mask()
    contour = extract_contour(SilhouetteMask(mask))
    boundary = mask & ~ndimage.binary_erosion(mask, structure=ndimage.generate_binary_structure(2, 1))
    cols = contour.points[:, 0].astype(int)
    rows = contour.points[:, 1].astype(int)
    assert np.all(boundary[rows, cols])
    assert len(contour.points) == boundary.sum()
    assert_allclose(np.linalg.norm(contour.normals, axis=1), 1.0)

    right = (cols == 69) & (rows > 21) & (rows < 58)
    angles = np.degrees(np.arccos(np.clip(contour.normals[right] @ np.array([1.0, 0.0]), -1.0, 1.0)))
    assert right.any() and np.all(angles < 15.0)


def test_single_pixel_contour():
    mask = np.zeros((20, 20), dtype=bool)
    mask[10, 10] = True
    contour = extract_contour(SilhouetteMask(mask))
    assert contour.points.shape == (1, 2)
    assert np.linalg.norm(contour.normals[0]) == pytest.approx(1.0)


def test_disk_normals_are_radial():
    yy, xx = np.mgrid[0:160, 0:160]
    mask = (xx - 80.0) ** 2 + (yy - 80.0) ** 2 <= 50.0**2
    contour = extract_contour(SilhouetteMask(mask))
    radial = contour.points - 80.0
    radial /= np.linalg.norm(radial, axis=1)[:, None]
    angles = np.degrees(np.arccos(np.clip(np.sum(radial * contour.normals, axis=1), -1.0, 1.0)))
    assert np.mean(angles < 10.0) >= 0.95


def test_empty_mask_raises():
    with pytest.raises(EmptyMaskError):
        extract_contour(SilhouetteMask(np.zeros((10, 10), dtype=bool)))


#####################################
# Continuous Distances
#####################################


def test_continuous_distance_square_interior_and_border():
    mask = _square_mask(shape=(200, 300), rows=(50, 150), cols=(100, 200))
    fg, bg = continuous_distance(SilhouetteMask(mask), np.array([199.0, 100.0]), np.array([1.0, 0.0]))
    assert fg >= 99
    assert bg == 100


def test_continuous_distance_gap_between_squares():
    mask = _square_mask(shape=(200, 300), rows=(50, 150), cols=(100, 200))
    mask[50:150, 210:250] = True
    _, bg = continuous_distance(SilhouetteMask(mask), np.array([199.0, 100.0]), np.array([1.0, 0.0]))
    assert bg == 10


def test_continuous_distance_thin_bar():
    mask = np.zeros((100, 200), dtype=bool)
    mask[50:53, :] = True
    fg, _ = continuous_distance(SilhouetteMask(mask), np.array([100.0, 50.0]), np.array([0.0, -1.0]))
    assert fg == 3


def test_continuous_distance_complement_symmetry():
    mask = _square_mask(shape=(200, 300), rows=(50, 150), cols=(100, 200))
    mask[50:150, 230:260] = True
    points = np.array([[199.0, 80.0], [120.0, 50.0], [100.0, 120.0]])
    normals = np.array([[1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]])
    fg, bg = continuous_distances(SilhouetteMask(mask), points, normals)
    # the complement's contour pixel sits one step out, facing back
    fg_c, bg_c = continuous_distances(SilhouetteMask(~mask), points + normals, -normals)
    assert np.array_equal(fg, bg_c)
    assert np.array_equal(bg, fg_c)


#####################################
# Occlusion Masks
#####################################


def test_single_object_visible_on_its_silhouette(cube_mesh):
    pose = Pose(np.eye(3), [0.0, 0.0, 0.5])
    occlusion = render_occlusion_mask([(cube_mesh, pose)], CAMERA, downscale=4, radius=4)
    small = CAMERA.downscaled(4)
    silhouette = render_depth(cube_mesh, pose, small).depth > 0.0
    assert occlusion.shape == (small.height, small.width)
    assert occlusion.dtype == np.uint32
    assert np.all(occlusion[silhouette] & 1)


def test_front_object_hides_back_object():
    back = make_box_mesh((0.3, 0.3, 0.05), name="back")
    front = make_box_mesh((0.05, 0.05, 0.05), name="front")
    back_pose = Pose(np.eye(3), [0.0, 0.0, 0.8])
    front_pose = Pose(np.eye(3), [0.0, 0.0, 0.4])
    occlusion = render_occlusion_mask([(back, back_pose), (front, front_pose)], CAMERA, downscale=2, radius=2)
    front_silhouette = render_depth(front, front_pose, CAMERA.downscaled(2)).depth > 0.0
    assert front_silhouette.any()
    assert not np.any(occlusion[front_silhouette] & 1)
    assert np.all(occlusion[front_silhouette] & 2)

    center = np.array([[80.0, 60.0]])
    assert not is_visible(occlusion, 2, center, 0)[0]
    assert is_visible(occlusion, 2, center, 1)[0]


def test_empty_scene_everything_visible():
    occlusion = render_occlusion_mask([], CAMERA)
    assert np.all(occlusion == np.uint32(0xFFFFFFFF))
    assert is_visible(occlusion, 4, np.array([[10.0, 10.0]]), 31)[0]


def test_too_many_ids_raises(cube_mesh):
    with pytest.raises(TooManyObjectsError):
        render_occlusion_mask([(cube_mesh, Pose(np.eye(3), [0.0, 0.0, 0.5]))], CAMERA, ids=[40])
