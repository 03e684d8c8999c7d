"""
overlay_producer.py

Draw the silhouette contour of a posed model onto an image and save it as PNG.

Used to inspect tracking results frame by frame: the contour hugs the object
boundary when the pose is right. An off-screen pose writes an unmodified
copy and logs a warning.
"""

#####################################
# Import Modules
#####################################

# stdlib
import pathlib

# external
import cv2
import numpy as np

# local
from tracking.geometry import Intrinsics, Pose
from tracking.mesh_render import TriangleMesh, render_depth
from utils.utils_io import write_rgb
from utils.utils_logger import logger

#####################################
# Overlay
#####################################


def draw_contour(image: np.ndarray, mask: np.ndarray, color=(0, 255, 0), thickness: int = 1) -> tuple[np.ndarray, int]:
    """Return (RGB copy with the mask outline drawn, number of pixels changed)."""
    contours, _ = cv2.findContours(mask.astype(np.uint8), cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_NONE)
    canvas = np.ascontiguousarray(image, dtype=np.uint8).copy()
    cv2.drawContours(canvas, contours, -1, tuple(int(c) for c in color), thickness)
    changed = int(np.count_nonzero(np.any(canvas != image, axis=2)))
    return canvas, changed


def emit_overlay(
    image: np.ndarray,
    mesh: TriangleMesh,
    pose: Pose,
    intrinsics: Intrinsics,
    out_path: pathlib.Path | str,
    color=(0, 255, 0),
) -> int:
    """Write the overlay PNG; returns the count of contour pixels drawn."""
    silhouette = render_depth(mesh, pose, intrinsics).silhouette().mask
    if not silhouette.any():
        logger.warning(f"Overlay of '{mesh.name}': pose is off-screen, writing the image unchanged")
        write_rgb(image, out_path)
        return 0
    canvas, changed = draw_contour(image, silhouette, color)
    write_rgb(canvas, out_path)
    logger.debug(f"Overlay of '{mesh.name}' written to {out_path} ({changed} contour pixels)")
    return changed
