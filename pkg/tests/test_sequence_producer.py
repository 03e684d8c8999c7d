"""
tests/test_sequence_producer.py

Seeded trajectories, synthetic frames and sequence directories.
"""

#####################################
# Imports
#####################################

import pathlib

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.ndimage import binary_erosion

from producers.sequence_producer import (
    TrajectorySpec,
    apply_variant,
    face_colors,
    generate_synthetic_sequence,
    make_trajectory,
    occluder_trajectory,
    orbit_trajectory,
    render_frame,
    start_pose,
)
from tracking.errors import ConfigError, SequenceError
from tracking.geometry import Intrinsics, Pose, exp_map, rotation_angle
from tracking.mesh_render import make_box_mesh, render_labels
from utils.utils_io import load_sequence, read_rgb

CAMERA = Intrinsics(fx=200.0, fy=200.0, px=79.5, py=59.5, width=160, height=120)

#####################################
# Trajectories
#####################################


def test_trajectory_spec_validation():
    with pytest.raises(ConfigError):
        TrajectorySpec(kind="spiral")
    with pytest.raises(ConfigError, match="at least 1"):
        TrajectorySpec(n_frames=0)


def test_random_walk_steps_are_bounded():
    spec = TrajectorySpec(n_frames=100, max_translation_m=0.008, max_rotation_deg=2.5)
    poses = make_trajectory(spec, np.random.default_rng(0))
    assert len(poses) == 100
    for previous, current in zip(poses, poses[1:]):
        assert np.linalg.norm(current.translation - previous.translation) <= 0.008 + 1e-12
        assert np.rad2deg(rotation_angle(current.rotation @ previous.rotation.T)) <= 2.5 + 1e-9
        assert current.is_valid(tol=1e-9)


def test_random_walk_is_seeded():
    spec = TrajectorySpec(n_frames=20)
    first = make_trajectory(spec, np.random.default_rng(4))
    second = make_trajectory(spec, np.random.default_rng(4))
    assert all(np.array_equal(a.as_matrix(), b.as_matrix()) for a, b in zip(first, second))


def test_orbit_keeps_the_distance():
    poses = orbit_trajectory(TrajectorySpec(kind="orbit", n_frames=10, distance=0.4))
    assert all(np.array_equal(p.translation, poses[0].translation) for p in poses)
    assert np.rad2deg(rotation_angle(poses[1].rotation.T @ poses[0].rotation)) == pytest.approx(2.5)


def test_occluder_sits_in_front_of_the_object():
    poses = [start_pose(0.5)] * 3
    occluder = occluder_trajectory(poses)
    assert all(p.translation[2] == pytest.approx(0.35) for p in occluder)


#####################################
# Images
#####################################


def test_flat_face_colors():
    colors = face_colors(make_box_mesh((0.1, 0.1, 0.1)), np.random.default_rng(0), base_color=(10, 20, 30), spread=0)
    assert np.all(colors == np.array([10, 20, 30], dtype=np.uint8))


def test_supersampled_frame_blends_only_the_silhouette_edge(cube_mesh):
    scene = [(cube_mesh, Pose(exp_map([0.3, 0.2, 0.1]), [0.0, 0.0, 0.5]))]
    background = np.zeros((CAMERA.height, CAMERA.width, 3), dtype=np.uint8)
    colors = [np.tile(np.array([250, 10, 10], dtype=np.uint8), (cube_mesh.triangles.shape[0], 1))]

    sharp, _ = render_frame(background, scene, colors, CAMERA)
    smooth, object_id = render_frame(background, scene, colors, CAMERA, supersample=4)
    assert smooth.shape == sharp.shape
    assert np.array_equal(object_id, render_labels(scene, CAMERA).object_id)

    inside = binary_erosion(object_id == 0, structure=np.ones((3, 3)))
    assert np.all(smooth[inside] == [250, 10, 10])
    assert set(np.unique(sharp[..., 0])) == {0, 250}
    red = smooth[..., 0]
    assert np.any((red > 0) & (red < 250))

    with pytest.raises(ValueError):
        render_frame(background, scene, colors, CAMERA, supersample=0)


def test_variants_change_pixels_only_where_expected():
    rng = np.random.default_rng(1)
    image = np.full((20, 30, 3), 100, dtype=np.uint8)
    assert np.array_equal(apply_variant(image, "regular", 5, rng), image)
    assert not np.array_equal(apply_variant(image, "noisy", 5, rng), image)
    assert apply_variant(image, "dynamic_light", 15, rng).mean() > image.mean()


#####################################
# Sequences
#####################################


def test_sequence_directory_round_trip(tmp_path: pathlib.Path, cube_mesh):
    sequence = generate_synthetic_sequence(
        cube_mesh, TrajectorySpec(n_frames=5), tmp_path / "cube_regular", intrinsics=CAMERA, seed=3
    )
    assert len(sequence) == 5
    assert (tmp_path / "cube_regular" / "frames" / "000004.png").is_file()

    loaded = load_sequence(tmp_path / "cube_regular")
    assert loaded.name == "cube_regular"
    assert loaded.intrinsics == CAMERA
    for a, b in zip(loaded.gt_poses, sequence.gt_poses):
        assert_allclose(a.as_matrix(), b.as_matrix(), atol=1e-12)
    assert loaded.load_frame(0).shape == (120, 160, 3)


def test_same_seed_gives_identical_frames(tmp_path: pathlib.Path, cube_mesh):
    for name in ("a", "b"):
        generate_synthetic_sequence(cube_mesh, TrajectorySpec(n_frames=3), tmp_path / name, intrinsics=CAMERA, seed=9)
    for k in range(3):
        first = read_rgb(tmp_path / "a" / "frames" / f"{k:06d}.png")
        second = read_rgb(tmp_path / "b" / "frames" / f"{k:06d}.png")
        assert np.array_equal(first, second)


def test_first_frame_shows_the_object_silhouette(tmp_path: pathlib.Path, cube_mesh):
    background = np.zeros((CAMERA.height, CAMERA.width, 3), dtype=np.uint8)
    colors = np.tile(np.array([250, 10, 10], dtype=np.uint8), (cube_mesh.triangles.shape[0], 1))
    sequence = generate_synthetic_sequence(
        cube_mesh, TrajectorySpec(n_frames=2), tmp_path / "flat", intrinsics=CAMERA, background=background, colors=colors
    )
    image = sequence.load_frame(0)
    silhouette = render_labels([(cube_mesh, sequence.gt_poses[0])], CAMERA).object_id == 0
    assert np.array_equal(np.any(image > 0, axis=2), silhouette)


def test_object_leaving_the_image_raises(tmp_path: pathlib.Path, cube_mesh):
    poses = [start_pose(0.5), Pose(np.eye(3), [0.3, 0.0, 0.5])]
    with pytest.raises(SequenceError) as info:
        generate_synthetic_sequence(cube_mesh, poses, tmp_path / "gone", intrinsics=CAMERA)
    assert info.value.frame_index == 1


def test_occlusion_variant_writes_the_occluder(tmp_path: pathlib.Path, cube_mesh):
    sequence = generate_synthetic_sequence(
        cube_mesh, TrajectorySpec(n_frames=3), tmp_path / "occ", intrinsics=CAMERA, variant="occlusion"
    )
    assert len(sequence.occluder_poses) == 3
    assert (tmp_path / "occ" / "occluder.obj").is_file()
    assert len(load_sequence(tmp_path / "occ").occluder_poses) == 3


def test_unknown_variant(tmp_path: pathlib.Path, cube_mesh):
    with pytest.raises(ValueError):
        generate_synthetic_sequence(cube_mesh, TrajectorySpec(n_frames=2), tmp_path / "x", intrinsics=CAMERA, variant="foggy")
