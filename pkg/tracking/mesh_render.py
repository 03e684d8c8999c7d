"""
Mesh Loading and Software Rendering
File: tracking/mesh_render.py

Triangle meshes and a CPU z-buffer rasterizer.

The rasterizer is used in three places:
- building the sparse viewpoint model (depth + silhouette per view),
- occlusion masks for multi-object tracking,
- synthetic sequence generation (per-triangle colors).

Rasterization rules:
- a pixel is covered when its center lies inside the projected triangle,
  with a top-left style tie rule on shared edges,
- depth is interpolated perspective-correctly (1/Z is affine on screen),
- triangles with any vertex closer than NEAR_PLANE are skipped,
- depth 0 means "no surface".

Pixel loops run through numba; everything else is numpy / scipy.
"""

#####################################
# Import Modules
#####################################

# import from Python Standard Library
from __future__ import annotations

import pathlib
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

# import from external packages
import cv2
import numpy as np
import trimesh
from numba import njit
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

# import from local modules
from tracking.errors import (
    EmptyMaskError,
    EmptyMeshError,
    MeshFormatError,
    MeshNotFoundError,
    TooManyObjectsError,
)
from tracking.geometry import Intrinsics, Pose
from utils.utils_logger import logger

#####################################
# Constants
#####################################

NEAR_PLANE = 1e-3  # meters
MAX_OCCLUSION_IDS = 32
NORMAL_WINDOW_RADIUS = 2  # 5 x 5 px neighborhood

#####################################
# Domain Types
#####################################


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Vertices (meters, model frame), triangle index triples and the diameter."""

    vertices: np.ndarray
    triangles: np.ndarray
    diameter: float = field(default=-1.0)
    name: str = "mesh"

    def __post_init__(self) -> None:
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if vertices.shape[0] == 0 or triangles.shape[0] == 0:
            raise EmptyMeshError(f"mesh '{self.name}' has no vertices or no triangles")
        if triangles.min() < 0 or triangles.max() >= vertices.shape[0]:
            raise MeshFormatError(f"mesh '{self.name}' has triangle indices out of range")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        if self.diameter < 0.0:
            object.__setattr__(self, "diameter", mesh_diameter(vertices))

    @property
    def bounding_radius(self) -> float:
        """Radius of the origin-centered sphere containing every vertex."""
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))


@dataclass(frozen=True, eq=False)
class DepthImage:
    """Per-pixel depth in meters; 0 where no surface was rasterized."""

    depth: np.ndarray

    @property
    def height(self) -> int:
        return int(self.depth.shape[0])

    @property
    def width(self) -> int:
        return int(self.depth.shape[1])

    def silhouette(self) -> "SilhouetteMask":
        return SilhouetteMask(self.depth > 0.0)


@dataclass(frozen=True, eq=False)
class SilhouetteMask:
    mask: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))

    @property
    def height(self) -> int:
        return int(self.mask.shape[0])

    @property
    def width(self) -> int:
        return int(self.mask.shape[1])


class RenderBuffers(NamedTuple):
    depth: np.ndarray  # (H, W) float64, 0 = empty
    object_id: np.ndarray  # (H, W) int32, -1 = empty
    triangle_id: np.ndarray  # (H, W) int64, index into the mesh's triangles, -1 = empty


class ContourPoints(NamedTuple):
    points: np.ndarray  # (N, 2) pixel coordinates (x, y)
    normals: np.ndarray  # (N, 2) unit vectors, foreground -> background


#####################################
# Mesh Loading
#####################################


def mesh_diameter(vertices: np.ndarray) -> float:
    """Maximum distance between two vertices (hull vertices suffice)."""
    vertices = np.asarray(vertices, dtype=np.float64)
    if vertices.shape[0] < 2:
        return 0.0
    candidates = vertices
    if vertices.shape[0] > 4:
        try:
            candidates = vertices[ConvexHull(vertices).vertices]
        except (QhullError, ValueError):
            # flat or degenerate point sets
            candidates = vertices
    return float(np.max(pdist(candidates)))


def load_mesh(path: pathlib.Path | str) -> TriangleMesh:
    """
    Load a Wavefront OBJ file into a TriangleMesh.

    Quads and polygons are split into triangles by trimesh. Vertices are kept
    in file order (process=False) so indices stay meaningful.
    """
    path = pathlib.Path(path)
    if not path.is_file():
        logger.error(f"Mesh file not found: {path}")
        raise MeshNotFoundError(f"mesh file not found: {path}")
    try:
        loaded = trimesh.load(path, file_type="obj", process=False, force="mesh")
    except Exception as e:
        logger.error(f"Failed to parse mesh {path}: {e}")
        raise MeshFormatError(f"failed to parse mesh {path}: {e}") from e

    vertices = np.asarray(getattr(loaded, "vertices", np.empty((0, 3))), dtype=np.float64)
    triangles = np.asarray(getattr(loaded, "faces", np.empty((0, 3))), dtype=np.int64)
    if vertices.size == 0 or triangles.size == 0:
        logger.error(f"Mesh {path} contains no triangles")
        raise EmptyMeshError(f"mesh {path} contains no triangles")

    mesh = TriangleMesh(vertices=vertices, triangles=triangles, name=path.stem)
    logger.info(
        f"Loaded mesh {path.name}: {len(vertices)} vertices, {len(triangles)} triangles, "
        f"diameter {mesh.diameter:.4f} m"
    )
    return mesh


def save_mesh(mesh: TriangleMesh, path: pathlib.Path | str) -> pathlib.Path:
    """Write a mesh as ASCII OBJ (1-based indices)."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def make_box_mesh(extents: Sequence[float], name: str = "box") -> TriangleMesh:
    box = trimesh.creation.box(extents=np.asarray(extents, dtype=np.float64))
    return TriangleMesh(vertices=box.vertices, triangles=box.faces, name=name)


def make_sphere_mesh(radius: float, subdivisions: int = 3, name: str = "sphere") -> TriangleMesh:
    sphere = trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius)
    return TriangleMesh(vertices=sphere.vertices, triangles=sphere.faces, name=name)


#####################################
# Rasterizer Kernels
#####################################


@njit(cache=True)
def _is_top_left(xa: float, ya: float, xb: float, yb: float) -> bool:
    # Shared edges are walked in opposite directions by the two triangles,
    # so exactly one of them owns pixel centers lying on the edge.
    dy = yb - ya
    dx = xb - xa
    return dy < 0.0 or (dy == 0.0 and dx > 0.0)


@njit(cache=True)
def _rasterize(screen, triangles, depth, object_id, triangle_id, obj):
    height = depth.shape[0]
    width = depth.shape[1]
    for t in range(triangles.shape[0]):
        i0 = triangles[t, 0]
        i1 = triangles[t, 1]
        i2 = triangles[t, 2]
        z0 = screen[i0, 2]
        z1 = screen[i1, 2]
        z2 = screen[i2, 2]
        if z0 <= NEAR_PLANE or z1 <= NEAR_PLANE or z2 <= NEAR_PLANE:
            continue
        x0 = screen[i0, 0]
        y0 = screen[i0, 1]
        x1 = screen[i1, 0]
        y1 = screen[i1, 1]
        x2 = screen[i2, 0]
        y2 = screen[i2, 1]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        if area < 0.0:
            x1, x2 = x2, x1
            y1, y2 = y2, y1
            z1, z2 = z2, z1
            area = -area

        xmin = max(int(np.ceil(min(x0, min(x1, x2)))), 0)
        xmax = min(int(np.floor(max(x0, max(x1, x2)))), width - 1)
        ymin = max(int(np.ceil(min(y0, min(y1, y2)))), 0)
        ymax = min(int(np.floor(max(y0, max(y1, y2)))), height - 1)
        if xmin > xmax or ymin > ymax:
            continue

        inv_z0 = 1.0 / z0
        inv_z1 = 1.0 / z1
        inv_z2 = 1.0 / z2
        owner0 = _is_top_left(x1, y1, x2, y2)
        owner1 = _is_top_left(x2, y2, x0, y0)
        owner2 = _is_top_left(x0, y0, x1, y1)

        for y in range(ymin, ymax + 1):
            fy = float(y)
            for x in range(xmin, xmax + 1):
                fx = float(x)
                w0 = (x2 - x1) * (fy - y1) - (y2 - y1) * (fx - x1)
                w1 = (x0 - x2) * (fy - y2) - (y0 - y2) * (fx - x2)
                w2 = (x1 - x0) * (fy - y0) - (y1 - y0) * (fx - x0)
                if w0 < 0.0 or w1 < 0.0 or w2 < 0.0:
                    continue
                if (w0 == 0.0 and not owner0) or (w1 == 0.0 and not owner1) or (w2 == 0.0 and not owner2):
                    continue
                inv_z = (w0 * inv_z0 + w1 * inv_z1 + w2 * inv_z2) / area
                z = 1.0 / inv_z
                current = depth[y, x]
                if current == 0.0 or z < current:
                    depth[y, x] = z
                    object_id[y, x] = obj
                    triangle_id[y, x] = t


@njit(cache=True)
def _run_lengths(mask, points, normals, out_fg, out_bg):
    # Foreground run starts at the contour pixel itself and walks along -n;
    # background run starts one step out along +n. Both stop at the border.
    height = mask.shape[0]
    width = mask.shape[1]
    max_steps = height + width
    for i in range(points.shape[0]):
        px = points[i, 0]
        py = points[i, 1]
        nx = normals[i, 0]
        ny = normals[i, 1]
        count = 0
        for k in range(max_steps):
            x = int(np.rint(px - k * nx))
            y = int(np.rint(py - k * ny))
            if x < 0 or y < 0 or x >= width or y >= height or not mask[y, x]:
                break
            count += 1
        out_fg[i] = count
        count = 0
        for k in range(1, max_steps):
            x = int(np.rint(px + k * nx))
            y = int(np.rint(py + k * ny))
            if x < 0 or y < 0 or x >= width or y >= height or mask[y, x]:
                break
            count += 1
        out_bg[i] = count


#####################################
# Rendering
#####################################


def _screen_coordinates(mesh: TriangleMesh, pose: Pose, intrinsics: Intrinsics) -> np.ndarray:
    camera = pose.transform(mesh.vertices)
    z = camera[:, 2]
    safe_z = np.where(z > NEAR_PLANE, z, 1.0)
    screen = np.empty_like(camera)
    screen[:, 0] = camera[:, 0] / safe_z * intrinsics.fx + intrinsics.px
    screen[:, 1] = camera[:, 1] / safe_z * intrinsics.fy + intrinsics.py
    screen[:, 2] = z
    return screen


def render_labels(scene: Sequence[tuple[TriangleMesh, Pose]], intrinsics: Intrinsics) -> RenderBuffers:
    """Rasterize several posed meshes into one shared z-buffer."""
    depth = np.zeros((intrinsics.height, intrinsics.width), dtype=np.float64)
    object_id = np.full(depth.shape, -1, dtype=np.int32)
    triangle_id = np.full(depth.shape, -1, dtype=np.int64)
    for index, (mesh, pose) in enumerate(scene):
        screen = _screen_coordinates(mesh, pose, intrinsics)
        _rasterize(screen, mesh.triangles, depth, object_id, triangle_id, np.int32(index))
    return RenderBuffers(depth=depth, object_id=object_id, triangle_id=triangle_id)


def render_depth(mesh: TriangleMesh, pose: Pose, intrinsics: Intrinsics) -> DepthImage:
    """Z-buffered depth image of one posed mesh."""
    return DepthImage(render_labels([(mesh, pose)], intrinsics).depth)


def save_mask_png(mask: SilhouetteMask, path: pathlib.Path | str) -> bool:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return bool(cv2.imwrite(str(path), mask.mask.astype(np.uint8) * 255))


def save_depth_png(depth: DepthImage, path: pathlib.Path | str) -> bool:
    """16-bit PNG with depth in millimetres (saturating at 65.535 m)."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    millimetres = np.clip(np.rint(depth.depth * 1000.0), 0, np.iinfo(np.uint16).max).astype(np.uint16)
    return bool(cv2.imwrite(str(path), millimetres))


#####################################
# Contours
#####################################


def _window_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    dy, dx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return dy.ravel(), dx.ravel()


def extract_contour(mask: SilhouetteMask) -> ContourPoints:
    """
    Contour pixels and outward normals of a silhouette.

    A contour pixel is a foreground pixel with at least one background
    4-neighbor; outside the image counts as background. The normal is the
    normalized sum of offsets to background pixels in a 5 x 5 window.
    """
    full = mask.mask
    if not full.any():
        raise EmptyMaskError("silhouette mask has no foreground pixels")

    # work on the bounding box plus a margin; outside the image is background anyway
    radius = NORMAL_WINDOW_RADIUS
    margin = radius + 1
    row_hits = np.flatnonzero(full.any(axis=1))
    col_hits = np.flatnonzero(full.any(axis=0))
    top = max(int(row_hits[0]) - margin, 0)
    left = max(int(col_hits[0]) - margin, 0)
    fg = full[top : int(row_hits[-1]) + margin + 1, left : int(col_hits[-1]) + margin + 1]

    interior = ndimage.binary_erosion(fg, structure=ndimage.generate_binary_structure(2, 1), border_value=0)
    rows, cols = np.nonzero(fg & ~interior)

    background = np.pad(~fg, radius, mode="constant", constant_values=True)
    dy, dx = _window_offsets(radius)
    window_bg = background[rows[:, None] + radius + dy[None, :], cols[:, None] + radius + dx[None, :]]
    normals = np.stack([(window_bg * dx).sum(axis=1), (window_bg * dy).sum(axis=1)], axis=1).astype(np.float64)

    lengths = np.linalg.norm(normals, axis=1)
    degenerate = lengths == 0.0
    normals[degenerate] = (1.0, 0.0)
    lengths[degenerate] = 1.0
    normals /= lengths[:, None]

    points = np.stack([cols + left, rows + top], axis=1).astype(np.float64)
    return ContourPoints(points=points, normals=normals)


def continuous_distances(mask: SilhouetteMask, points: np.ndarray, normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised continuous_distance for many contour points."""
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    normals = np.ascontiguousarray(normals, dtype=np.float64).reshape(-1, 2)
    fg = np.zeros(points.shape[0], dtype=np.float64)
    bg = np.zeros(points.shape[0], dtype=np.float64)
    _run_lengths(np.ascontiguousarray(mask.mask), points, normals, fg, bg)
    return fg, bg


def continuous_distance(mask: SilhouetteMask, point: np.ndarray, normal: np.ndarray) -> tuple[float, float]:
    """Uninterrupted foreground run along -normal and background run along +normal, in pixels."""
    fg, bg = continuous_distances(mask, np.asarray(point)[None, :], np.asarray(normal)[None, :])
    return float(fg[0]), float(bg[0])


#####################################
# Occlusion Masks
#####################################


def _disk_offsets(radius: int) -> list[tuple[int, int]]:
    return [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dy * dy + dx * dx <= radius * radius
    ]


def render_occlusion_mask(
    scene: Sequence[tuple[TriangleMesh, Pose]],
    intrinsics: Intrinsics,
    downscale: int = 4,
    radius: int = 4,
    ids: Sequence[int] | None = None,
) -> np.ndarray:
    """
    Bit-encoded visibility image at 1/downscale resolution.

    Bit k of a pixel is set when object ids[k] is visible there: inside a
    disk of `radius` pixels the object with the smallest depth claims the
    center. Where the disk only holds background every object is visible.
    """
    ids = list(range(len(scene))) if ids is None else list(ids)
    if len(ids) != len(scene):
        raise ValueError("one id per scene entry is required")
    if len(scene) > MAX_OCCLUSION_IDS or any(not 0 <= i < MAX_OCCLUSION_IDS for i in ids):
        logger.error(f"Occlusion mask supports at most {MAX_OCCLUSION_IDS} ids, got {ids}")
        raise TooManyObjectsError(f"occlusion mask supports at most {MAX_OCCLUSION_IDS} object ids")

    small = intrinsics.downscaled(downscale)
    all_visible = np.uint32(0)
    for i in ids:
        all_visible |= np.uint32(1) << np.uint32(i)
    if not scene:
        return np.full((small.height, small.width), np.uint32(0xFFFFFFFF), dtype=np.uint32)

    buffers = render_labels(scene, small)
    depth = np.where(buffers.depth > 0.0, buffers.depth, np.inf)
    bits_by_index = np.array([np.uint32(1) << np.uint32(i) for i in ids], dtype=np.uint32)
    labels = np.where(buffers.object_id >= 0, bits_by_index[np.maximum(buffers.object_id, 0)], np.uint32(0))

    padded_depth = np.pad(depth, radius, mode="constant", constant_values=np.inf)
    padded_labels = np.pad(labels, radius, mode="constant", constant_values=0)
    height, width = depth.shape
    best_depth = np.full(depth.shape, np.inf)
    best_label = np.zeros(depth.shape, dtype=np.uint32)
    for dy, dx in _disk_offsets(radius):
        window_depth = padded_depth[radius + dy : radius + dy + height, radius + dx : radius + dx + width]
        window_label = padded_labels[radius + dy : radius + dy + height, radius + dx : radius + dx + width]
        closer = window_depth < best_depth
        best_depth = np.where(closer, window_depth, best_depth)
        best_label = np.where(closer, window_label, best_label)

    return np.where(np.isinf(best_depth), all_visible, best_label).astype(np.uint32)


def is_visible(occlusion: np.ndarray, downscale: int, pixels: np.ndarray, object_id: int) -> np.ndarray:
    """Look up visibility of `object_id` at full-resolution pixel centers."""
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    cols = np.rint((pixels[:, 0] + 0.5) / downscale - 0.5).astype(np.int64)
    rows = np.rint((pixels[:, 1] + 0.5) / downscale - 0.5).astype(np.int64)
    inside = (cols >= 0) & (rows >= 0) & (cols < occlusion.shape[1]) & (rows < occlusion.shape[0])
    visible = np.zeros(pixels.shape[0], dtype=bool)
    bit = np.uint32(1) << np.uint32(object_id)
    visible[inside] = (occlusion[rows[inside], cols[inside]] & bit) != 0
    return visible
