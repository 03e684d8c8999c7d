"""
tests/test_geometry.py

Poses, pinhole projection and the exponential-map pose update.
"""

#####################################
# Imports
#####################################

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tracking.errors import BehindCameraError
from tracking.geometry import (
    Intrinsics,
    Pose,
    VariationVector,
    apply_variation,
    back_project,
    back_project_points,
    exp_map,
    project,
    project_points,
    rotation_angle,
    skew,
    update_pose,
)

CAMERA = Intrinsics(fx=500.0, fy=500.0, px=320.0, py=240.0, width=640, height=480)

#####################################
# Projection
#####################################


def test_project_on_optical_axis():
    assert_allclose(project(CAMERA, np.array([0.0, 0.0, 1.0])), [320.0, 240.0])


def test_project_offset_point():
    assert_allclose(project(CAMERA, np.array([0.1, 0.0, 1.0])), [370.0, 240.0])


def test_project_behind_camera_raises():
    with pytest.raises(BehindCameraError):
        project(CAMERA, np.array([0.0, 0.0, -1.0]))


def test_project_points_marks_points_behind_camera():
    pixels, valid = project_points(CAMERA, np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]))
    assert valid.tolist() == [True, False]
    assert np.all(np.isnan(pixels[1]))


def test_back_project_examples():
    assert_allclose(back_project(CAMERA, np.array([320.0, 240.0]), 2.0), [0.0, 0.0, 2.0])
    assert_allclose(back_project(CAMERA, np.array([370.0, 240.0]), 1.0), [0.1, 0.0, 1.0])
    with pytest.raises(BehindCameraError):
        back_project(CAMERA, np.array([320.0, 240.0]), 0.0)


def test_project_back_project_round_trip():
    rng = np.random.default_rng(1)
    pixels = rng.uniform([0.0, 0.0], [640.0, 480.0], size=(200, 2))
    depths = rng.uniform(0.2, 3.0, size=200)
    points = back_project_points(CAMERA, pixels, depths)
    projected, valid = project_points(CAMERA, points)
    assert valid.all()
    assert_allclose(projected, pixels, atol=1e-9)


def test_downscaled_intrinsics_keep_pixel_centers_aligned():
    small = CAMERA.downscaled(4)
    assert small.width == 160 and small.height == 120
    # a pixel covering full-resolution pixels 0..3 is centered at 1.5
    point = back_project(CAMERA, np.array([1.5, 1.5]), 1.0)
    assert_allclose(project(small, point), [0.0, 0.0], atol=1e-12)


def test_upscaled_intrinsics_keep_pixel_centers_aligned():
    fine = CAMERA.upscaled(4)
    assert fine.width == 2560 and fine.height == 1920
    # full-resolution pixel 10 spans fine pixels 40..43, centered at 41.5
    point = back_project(CAMERA, np.array([10.0, 20.0]), 1.0)
    assert_allclose(project(fine, point), [41.5, 81.5], atol=1e-9)
    coarse = fine.downscaled(4)
    assert_allclose([coarse.fx, coarse.px, coarse.py], [CAMERA.fx, CAMERA.px, CAMERA.py])


def test_intrinsics_validation():
    with pytest.raises(ValueError):
        Intrinsics(fx=0.0, fy=500.0, px=0.0, py=0.0, width=10, height=10)
    assert Intrinsics.from_dict(CAMERA.to_dict()) == CAMERA


#####################################
# Exponential Map
#####################################


def _series_exp(theta_r: np.ndarray, order: int = 10) -> np.ndarray:
    k = skew(theta_r)
    total = np.eye(3)
    term = np.eye(3)
    for n in range(1, order + 1):
        term = term @ k / n
        total = total + term
    return total


def test_exp_map_zero_is_identity():
    assert_allclose(exp_map(np.zeros(3)), np.eye(3))


def test_exp_map_quarter_turn_about_z():
    rotation = exp_map(np.array([0.0, 0.0, np.pi / 2]))
    assert_allclose(rotation @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_exp_map_matches_series():
    theta = np.array([0.3, -0.2, 0.1])
    assert_allclose(exp_map(theta), _series_exp(theta), atol=1e-6)


def test_exp_map_inverse_and_orthonormality():
    rng = np.random.default_rng(2)
    for _ in range(100):
        axis = rng.normal(size=3)
        theta = axis / np.linalg.norm(axis) * rng.uniform(0.0, np.pi)
        rotation = exp_map(theta)
        assert_allclose(rotation @ exp_map(-theta), np.eye(3), atol=1e-9)
        assert np.linalg.det(rotation) == pytest.approx(1.0, abs=1e-9)
        assert rotation_angle(rotation) == pytest.approx(np.linalg.norm(theta), abs=1e-7)


def test_rotation_angle_is_symmetric():
    a = exp_map(np.array([0.1, 0.2, -0.3]))
    b = exp_map(np.array([-0.4, 0.0, 0.25]))
    assert rotation_angle(a.T @ b) == pytest.approx(rotation_angle(b.T @ a), abs=1e-12)


#####################################
# Pose Variation and Update
#####################################


def test_pose_validation_and_inverse():
    pose = Pose(exp_map(np.array([0.2, 0.1, -0.3])), np.array([0.1, -0.2, 0.8]))
    assert pose.is_valid()
    identity = pose.compose(pose.inverse())
    assert_allclose(identity.as_matrix(), np.eye(4), atol=1e-12)
    assert np.array_equal(Pose.from_matrix(pose.as_matrix()).as_matrix(), pose.as_matrix())
    assert not Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3)).is_valid()


def test_apply_variation_zero_equals_transform():
    pose = Pose(exp_map(np.array([0.2, 0.1, -0.3])), np.array([0.1, -0.2, 0.8]))
    point = np.array([0.03, -0.01, 0.02])
    assert np.array_equal(apply_variation(pose, VariationVector(), point), pose.transform(point))


def test_apply_variation_rotation_has_no_effect_at_origin():
    pose = Pose(exp_map(np.array([0.2, 0.1, -0.3])), np.array([0.1, -0.2, 0.8]))
    theta = VariationVector(theta_r=np.array([0.3, -0.5, 0.2]))
    assert_allclose(apply_variation(pose, theta, np.zeros(3)), pose.translation)


def test_apply_variation_matches_exact_update_for_small_theta():
    rng = np.random.default_rng(3)
    pose = Pose(exp_map(np.array([0.2, 0.1, -0.3])), np.array([0.1, -0.2, 0.8]))
    point = np.array([0.3, -0.4, 0.5])
    theta = VariationVector.from_array(rng.normal(size=6) * 1e-3 / np.sqrt(6))
    exact = update_pose(pose, theta).transform(point)
    assert_allclose(apply_variation(pose, theta, point), exact, atol=1e-5)


def test_update_pose_zero_and_translation():
    pose = Pose(exp_map(np.array([0.2, 0.1, -0.3])), np.array([0.1, -0.2, 0.8]))
    unchanged = update_pose(pose, VariationVector())
    assert_allclose(unchanged.as_matrix(), pose.as_matrix())
    moved = update_pose(Pose.identity(), VariationVector(theta_t=np.array([0.0, 0.0, 0.1])))
    assert_allclose(moved.translation, [0.0, 0.0, 0.1])


def test_update_pose_chain_stays_orthonormal():
    rng = np.random.default_rng(4)
    pose = Pose.identity()
    for _ in range(1000):
        pose = update_pose(pose, VariationVector.from_array(rng.normal(size=6) * 0.1))
    assert pose.orthonormality_error() < 1e-7
    assert np.linalg.det(pose.rotation) == pytest.approx(1.0, abs=1e-7)


def test_variation_vector_rejects_non_finite():
    with pytest.raises(ValueError):
        VariationVector(theta_r=np.array([np.nan, 0.0, 0.0]))
