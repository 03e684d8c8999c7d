"""
Sparse Viewpoint Model
File: tracking/viewpoint_model.py

Precomputed contour geometry replacing online rendering during tracking.

For every direction of a geodesic sphere a virtual camera looks at the model
origin from `sphere_radius` meters. The silhouette is rendered, n_c contour
pixels are sampled with a seeded generator, and for each sample we keep:
- the 3D model point reconstructed from depth at the silhouette crossing,
- the contour normal rotated into the model frame,
- foreground / background continuous distances converted to meters.

The view orientation (camera-to-model-center direction in the model frame)
is what the closest-view search compares against.

Binary cache layout (little-endian):
    16-byte header: magic b"SVM1", uint32 n_v, uint32 n_c, float32 sphere_radius
    float32 orientations (n_v, 3)
    float32 points (n_v, n_c, 3)
    float32 normals (n_v, n_c, 3)
    float32 fg_dist (n_v, n_c)
    float32 bg_dist (n_v, n_c)
"""

#####################################
# Import Modules
#####################################

# import from Python Standard Library
from __future__ import annotations

import pathlib
import time
from dataclasses import dataclass

# import from external packages
import numpy as np
import trimesh

# import from local modules
from tracking.errors import ModelFormatError, ViewpointModelError
from tracking.geometry import Intrinsics, Pose, back_project_points
from tracking.mesh_render import (
    TriangleMesh,
    continuous_distances,
    extract_contour,
    render_depth,
)
from utils.utils_logger import logger

#####################################
# Constants
#####################################

MAGIC = b"SVM1"
HEADER_DTYPE = np.dtype([("magic", "S4"), ("n_v", "<u4"), ("n_c", "<u4"), ("sphere_radius", "<f4")])
UP_SWITCH_COS = np.cos(np.deg2rad(1.0))

#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class ViewpointModelConfig:
    n_c: int = 200
    subdivisions: int = 4
    sphere_radius: float = 0.8
    rng_seed: int = 0
    image_width: int = 640
    image_height: int = 480
    coverage: float = 0.75

    def __post_init__(self) -> None:
        if self.n_c < 1:
            raise ValueError("n_c must be at least 1")
        if self.subdivisions < 0:
            raise ValueError("subdivisions must be non-negative")
        if not self.sphere_radius > 0.0:
            raise ValueError("sphere_radius must be positive")
        if not 0.0 < self.coverage <= 1.0:
            raise ValueError("coverage must be in (0, 1]")


@dataclass(frozen=True, eq=False)
class View:
    """One precomputed view; every vector is expressed in the model frame."""

    orientation: np.ndarray  # (3,)
    points: np.ndarray  # (n_c, 3) meters
    normals: np.ndarray  # (n_c, 3) unit
    fg_dist: np.ndarray  # (n_c,) meters
    bg_dist: np.ndarray  # (n_c,) meters

    @property
    def n_c(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True, eq=False)
class SparseViewpointModel:
    """Stacked per-view arrays; `view(i)` gives the record of one view."""

    orientations: np.ndarray  # (n_v, 3)
    points: np.ndarray  # (n_v, n_c, 3)
    normals: np.ndarray  # (n_v, n_c, 3)
    fg_dist: np.ndarray  # (n_v, n_c)
    bg_dist: np.ndarray  # (n_v, n_c)
    sphere_radius: float

    @property
    def n_v(self) -> int:
        return int(self.orientations.shape[0])

    @property
    def n_c(self) -> int:
        return int(self.points.shape[1])

    def view(self, index: int) -> View:
        return View(
            orientation=self.orientations[index],
            points=self.points[index],
            normals=self.normals[index],
            fg_dist=self.fg_dist[index],
            bg_dist=self.bg_dist[index],
        )

    @property
    def views(self) -> list[View]:
        return [self.view(i) for i in range(self.n_v)]


#####################################
# Sphere Sampling and Virtual Cameras
#####################################


def geodesic_directions(subdivisions: int) -> np.ndarray:
    """Unit vertices of an icosahedron subdivided `subdivisions` times."""
    if subdivisions < 0:
        raise ValueError("subdivisions must be non-negative")
    sphere = trimesh.creation.icosphere(subdivisions=subdivisions, radius=1.0)
    directions = np.asarray(sphere.vertices, dtype=np.float64)
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def view_pose(orientation: np.ndarray, sphere_radius: float) -> Pose:
    """
    Pose of a virtual camera whose optical axis is `orientation` (model frame)
    and which sits `sphere_radius` meters from the model origin.
    """
    forward = np.asarray(orientation, dtype=np.float64)
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    if abs(float(forward @ up)) > UP_SWITCH_COS:
        up = np.array([1.0, 0.0, 0.0])
    down = -(up - (up @ forward) * forward)
    down /= np.linalg.norm(down)
    right = np.cross(down, forward)
    rotation_model_from_camera = np.stack([right, down, forward], axis=1)
    return Pose(rotation_model_from_camera.T, np.array([0.0, 0.0, sphere_radius]))


def render_intrinsics(mesh: TriangleMesh, config: ViewpointModelConfig) -> Intrinsics:
    """Virtual camera whose image holds the bounding sphere at `coverage` of the short side."""
    radius = mesh.bounding_radius
    if radius >= config.sphere_radius:
        logger.error(f"Mesh bounding radius {radius:.3f} m does not fit inside sphere {config.sphere_radius} m")
        raise ViewpointModelError(
            f"mesh bounding radius {radius:.3f} m must be smaller than the sphere radius {config.sphere_radius} m"
        )
    half_angle = np.arcsin(radius / config.sphere_radius)
    focal = 0.5 * config.coverage * min(config.image_width, config.image_height) / np.tan(half_angle)
    return Intrinsics(
        fx=focal,
        fy=focal,
        px=(config.image_width - 1) / 2.0,
        py=(config.image_height - 1) / 2.0,
        width=config.image_width,
        height=config.image_height,
    )


#####################################
# Model Building
#####################################


def silhouette_crossings(pixels: np.ndarray, normals_2d: np.ndarray) -> np.ndarray:
    """
    Sub-pixel silhouette positions of contour pixels.

    A contour pixel center lies between 0 and |n_major| pixels inside the
    edge along its normal, so the crossing is estimated half that far out.
    """
    major = np.max(np.abs(normals_2d), axis=1)
    return pixels + 0.5 * major[:, None] * normals_2d


def build_model(mesh: TriangleMesh, config: ViewpointModelConfig | None = None) -> SparseViewpointModel:
    """Render every geodesic view of `mesh` and store its sparse contour data."""
    config = config or ViewpointModelConfig()
    intrinsics = render_intrinsics(mesh, config)
    directions = geodesic_directions(config.subdivisions)
    rng = np.random.default_rng(config.rng_seed)

    n_v, n_c = directions.shape[0], config.n_c
    orientations = np.empty((n_v, 3))
    points = np.empty((n_v, n_c, 3))
    normals = np.empty((n_v, n_c, 3))
    fg_dist = np.empty((n_v, n_c))
    bg_dist = np.empty((n_v, n_c))

    logger.info(f"Building viewpoint model for '{mesh.name}': {n_v} views x {n_c} points")
    started = time.perf_counter()
    for i, direction in enumerate(directions):
        orientation = -direction
        pose = view_pose(orientation, config.sphere_radius)
        depth = render_depth(mesh, pose, intrinsics)
        silhouette = depth.silhouette()
        if not silhouette.mask.any():
            logger.error(f"View {i} of '{mesh.name}' rendered empty")
            raise ViewpointModelError(f"view {i} rendered an empty silhouette")

        contour = extract_contour(silhouette)
        chosen = rng.choice(contour.points.shape[0], size=n_c, replace=contour.points.shape[0] < n_c)
        pixels = contour.points[chosen]
        normals_2d = contour.normals[chosen]
        depths = depth.depth[pixels[:, 1].astype(np.int64), pixels[:, 0].astype(np.int64)]

        camera_points = back_project_points(intrinsics, silhouette_crossings(pixels, normals_2d), depths)
        points[i] = (camera_points - pose.translation) @ pose.rotation
        normals[i] = np.column_stack([normals_2d, np.zeros(n_c)]) @ pose.rotation
        orientations[i] = orientation

        fg_px, bg_px = continuous_distances(silhouette, pixels, normals_2d)
        fg_dist[i] = fg_px * depths / intrinsics.fx
        bg_dist[i] = bg_px * depths / intrinsics.fx
        logger.debug(f"view {i}: {contour.points.shape[0]} contour pixels")

    logger.info(f"Viewpoint model for '{mesh.name}' built in {time.perf_counter() - started:.1f} s")
    return SparseViewpointModel(
        orientations=orientations,
        points=points,
        normals=normals,
        fg_dist=fg_dist,
        bg_dist=bg_dist,
        sphere_radius=float(config.sphere_radius),
    )


def closest_view(model: SparseViewpointModel, pose: Pose) -> int:
    """Index of the view whose orientation best matches the camera direction (lowest index on ties)."""
    if model.n_v == 0:
        raise ViewpointModelError("viewpoint model has no views")
    scores = model.orientations @ pose.camera_position_in_model()
    return int(np.argmax(scores))


#####################################
# Persistence
#####################################


def save_model(model: SparseViewpointModel, path: pathlib.Path | str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["n_v"] = model.n_v
    header["n_c"] = model.n_c
    header["sphere_radius"] = model.sphere_radius
    with path.open("wb") as f:
        f.write(header.tobytes())
        for array in (model.orientations, model.points, model.normals, model.fg_dist, model.bg_dist):
            f.write(np.ascontiguousarray(array, dtype="<f4").tobytes())
    logger.info(f"Saved viewpoint model ({model.n_v} views) to {path}")
    return path


def load_model(path: pathlib.Path | str) -> SparseViewpointModel:
    path = pathlib.Path(path)
    data = path.read_bytes()
    if len(data) < HEADER_DTYPE.itemsize:
        raise ModelFormatError(f"{path} is too short to hold a viewpoint model header")
    header = np.frombuffer(data[: HEADER_DTYPE.itemsize], dtype=HEADER_DTYPE)[0]
    if bytes(header["magic"]) != MAGIC:
        logger.error(f"{path} has magic {bytes(header['magic'])!r}, expected {MAGIC!r}")
        raise ModelFormatError(f"{path} is not a viewpoint model (bad magic)")

    n_v, n_c = int(header["n_v"]), int(header["n_c"])
    shapes = [(n_v, 3), (n_v, n_c, 3), (n_v, n_c, 3), (n_v, n_c), (n_v, n_c)]
    expected = HEADER_DTYPE.itemsize + 4 * sum(int(np.prod(s)) for s in shapes)
    if len(data) != expected:
        logger.error(f"{path} holds {len(data)} bytes, expected {expected}")
        raise ModelFormatError(f"{path} is truncated or padded ({len(data)} of {expected} bytes)")

    arrays = []
    offset = HEADER_DTYPE.itemsize
    for shape in shapes:
        count = int(np.prod(shape))
        arrays.append(np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape).astype(np.float64))
        offset += 4 * count

    logger.info(f"Loaded viewpoint model from {path}: {n_v} views x {n_c} points")
    return SparseViewpointModel(
        orientations=arrays[0],
        points=arrays[1],
        normals=arrays[2],
        fg_dist=arrays[3],
        bg_dist=arrays[4],
        sphere_radius=float(header["sphere_radius"]),
    )


def load_or_build_model(
    mesh: TriangleMesh, cache_path: pathlib.Path | str | None, config: ViewpointModelConfig | None = None
) -> SparseViewpointModel:
    """Reuse a cached model file when present, otherwise build and cache it."""
    if cache_path is not None and pathlib.Path(cache_path).is_file():
        return load_model(cache_path)
    model = build_model(mesh, config)
    if cache_path is not None:
        save_model(model, cache_path)
    return model
