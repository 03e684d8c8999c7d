"""
Geometry Layer
File: tracking/geometry.py

Rigid poses, the pinhole camera and the pose variation used by the optimizer.

Conventions:
- A Pose maps model-frame points into the camera frame: X_c = R @ X_m + t.
- World quantities are in meters, image quantities in pixels.
- Pixel centers sit on integer coordinates; pixel (row i, col j) is at (j, i).
- Images are undistorted; there is no lens model.

Everything here is a pure function on immutable values.
"""

#####################################
# Import Modules
#####################################

# import from Python Standard Library
from __future__ import annotations

from dataclasses import dataclass, field

# import from external packages
import numpy as np

# import from local modules
from tracking.errors import BehindCameraError
from utils.utils_logger import logger

#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    px: float
    py: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got {self.fx}, {self.fy}")
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")

    @property
    def focal_mean(self) -> float:
        return 0.5 * (self.fx + self.fy)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.px], [0.0, self.fy, self.py], [0.0, 0.0, 1.0]])

    def downscaled(self, factor: int) -> "Intrinsics":
        """Intrinsics of the same camera rendered at 1/factor resolution."""
        return Intrinsics(
            fx=self.fx / factor,
            fy=self.fy / factor,
            px=(self.px + 0.5) / factor - 0.5,
            py=(self.py + 0.5) / factor - 0.5,
            width=int(np.ceil(self.width / factor)),
            height=int(np.ceil(self.height / factor)),
        )

    def upscaled(self, factor: int) -> "Intrinsics":
        """Intrinsics of the same camera rendered at `factor` times the resolution."""
        return Intrinsics(
            fx=self.fx * factor,
            fy=self.fy * factor,
            px=(self.px + 0.5) * factor - 0.5,
            py=(self.py + 0.5) * factor - 0.5,
            width=self.width * factor,
            height=self.height * factor,
        )

    def to_dict(self) -> dict[str, float | int]:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "px": self.px,
            "py": self.py,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Intrinsics":
        return cls(
            fx=float(data["fx"]),
            fy=float(data["fy"]),
            px=float(data["px"]),
            py=float(data["py"]),
            width=int(data["width"]),
            height=int(data["height"]),
        )


@dataclass(frozen=True, eq=False)
class Pose:
    """Model-to-camera rigid transform (rotation matrix + translation in meters)."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        rotation = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = np.array(self.translation, dtype=np.float64).reshape(3)
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Pose":
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(matrix[:3, :3], matrix[:3, 3])

    @classmethod
    def from_rt(cls, rotation: np.ndarray, translation: np.ndarray, orthonormalize: bool = False) -> "Pose":
        """Build a pose; optionally snap a noisy rotation to the closest orthonormal one."""
        rotation = np.asarray(rotation, dtype=np.float64).reshape(3, 3)
        if orthonormalize:
            u, _, vt = np.linalg.svd(rotation)
            rotation = u @ vt
            if np.linalg.det(rotation) < 0:
                u[:, -1] *= -1.0
                rotation = u @ vt
        return cls(rotation, translation)

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Map model-frame points (…, 3) into the camera frame."""
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def inverse(self) -> "Pose":
        rotation_t = self.rotation.T
        return Pose(rotation_t, -rotation_t @ self.translation)

    def compose(self, other: "Pose") -> "Pose":
        """Return self ∘ other (apply other first)."""
        return Pose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def camera_position_in_model(self) -> np.ndarray:
        """Model-frame vector R_MC · t_CM used by the closest-view search."""
        return self.rotation.T @ self.translation

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))))

    def is_valid(self, tol: float = 1e-9) -> bool:
        if not np.all(np.isfinite(self.rotation)) or not np.all(np.isfinite(self.translation)):
            return False
        return self.orthonormality_error() <= tol and abs(np.linalg.det(self.rotation) - 1.0) <= tol


@dataclass(frozen=True, eq=False)
class VariationVector:
    """Pose variation θ = (θ_r axis-angle radians, θ_t meters)."""

    theta_r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta_t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        theta_r = np.array(self.theta_r, dtype=np.float64).reshape(3)
        theta_t = np.array(self.theta_t, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(theta_r)) and np.all(np.isfinite(theta_t))):
            raise ValueError("variation vector must be finite")
        object.__setattr__(self, "theta_r", theta_r)
        object.__setattr__(self, "theta_t", theta_t)

    @classmethod
    def from_array(cls, theta: np.ndarray) -> "VariationVector":
        theta = np.asarray(theta, dtype=np.float64).reshape(6)
        return cls(theta[:3], theta[3:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.theta_r, self.theta_t])

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


#####################################
# Camera Functions
#####################################


def project(intrinsics: Intrinsics, point: np.ndarray) -> np.ndarray:
    """Project one camera-frame point to pixel coordinates."""
    x, y, z = np.asarray(point, dtype=np.float64).reshape(3)
    if not z > 0.0:
        logger.debug(f"project: point with depth {z} is behind the camera")
        raise BehindCameraError(f"point is behind camera (Z={z})")
    return np.array([x / z * intrinsics.fx + intrinsics.px, y / z * intrinsics.fy + intrinsics.py])


def project_points(intrinsics: Intrinsics, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Vectorised projection.

    Returns:
        (pixels (N, 2), valid (N,)) where invalid rows (Z <= 0) hold NaN.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    z = points[:, 2]
    valid = z > 0.0
    safe_z = np.where(valid, z, 1.0)
    pixels = np.empty((points.shape[0], 2))
    pixels[:, 0] = points[:, 0] / safe_z * intrinsics.fx + intrinsics.px
    pixels[:, 1] = points[:, 1] / safe_z * intrinsics.fy + intrinsics.py
    pixels[~valid] = np.nan
    return pixels, valid


def back_project(intrinsics: Intrinsics, pixel: np.ndarray, depth: float) -> np.ndarray:
    """Reconstruct the camera-frame point seen at `pixel` with depth `depth`."""
    if not depth > 0.0:
        raise BehindCameraError(f"back-projection needs positive depth, got {depth}")
    u, v = np.asarray(pixel, dtype=np.float64).reshape(2)
    return np.array(
        [(u - intrinsics.px) / intrinsics.fx * depth, (v - intrinsics.py) / intrinsics.fy * depth, depth]
    )


def back_project_points(intrinsics: Intrinsics, pixels: np.ndarray, depths: np.ndarray) -> np.ndarray:
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    depths = np.asarray(depths, dtype=np.float64).reshape(-1)
    if np.any(depths <= 0.0):
        raise BehindCameraError("back-projection needs positive depth for every pixel")
    points = np.empty((pixels.shape[0], 3))
    points[:, 0] = (pixels[:, 0] - intrinsics.px) / intrinsics.fx * depths
    points[:, 1] = (pixels[:, 1] - intrinsics.py) / intrinsics.fy * depths
    points[:, 2] = depths
    return points


#####################################
# Lie Group Helpers
#####################################


def skew(vector: np.ndarray) -> np.ndarray:
    """Cross-product matrix [v]x."""
    x, y, z = np.asarray(vector, dtype=np.float64).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_map(theta_r: np.ndarray) -> np.ndarray:
    """Rotation matrix of an axis-angle vector (Rodrigues closed form)."""
    theta_r = np.asarray(theta_r, dtype=np.float64).reshape(3)
    angle = float(np.linalg.norm(theta_r))
    k = skew(theta_r)
    if angle < 1e-6:
        a = 1.0 - angle**2 / 6.0
        b = 0.5 - angle**2 / 24.0
    else:
        a = np.sin(angle) / angle
        b = (1.0 - np.cos(angle)) / angle**2
    return np.eye(3) + a * k + b * (k @ k)


def rotation_angle(rotation: np.ndarray) -> float:
    """Angle of a rotation matrix in radians, argument clamped to [-1, 1]."""
    cos_angle = (np.trace(rotation) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos_angle, -1.0, 1.0)))


def apply_variation(pose: Pose, theta: VariationVector, model_point: np.ndarray) -> np.ndarray:
    """Linearised variation R((I + [θ_r]x) X + θ_t) + t of a model point."""
    model_point = np.asarray(model_point, dtype=np.float64)
    varied = model_point + np.cross(theta.theta_r, model_point) + theta.theta_t
    return varied @ pose.rotation.T + pose.translation


def update_pose(pose: Pose, theta: VariationVector) -> Pose:
    """Compose the pose on the right with (exp(θ_r), θ_t); no re-orthonormalization."""
    delta_rotation = exp_map(theta.theta_r)
    return Pose(
        pose.rotation @ delta_rotation,
        pose.rotation @ theta.theta_t + pose.translation,
    )
