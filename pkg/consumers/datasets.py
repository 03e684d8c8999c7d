"""
datasets.py

Directory-layout adapters for external benchmark trees.

Neither dataset ships with the repository; every loader checks that the tree
is present first and raises SequenceError otherwise.

RBOT-style tree (semi-synthetic, 18 objects, 4 variants, 1001 frames each):
    <root>/camera_calibration.txt         fx fy px py on the first numeric line
    <root>/poses_first.txt                r11..r33 tx ty tz per frame, mm
    <root>/poses_second.txt               occluder trajectory, mm
    <root>/squirrel_small.obj             occluder mesh, mm
    <root>/<object>/<object>.obj          mesh, mm
    <root>/<object>/frames/a_regular0000.png, b_dynamiclight0000.png, ...

OPT-style tree, after conversion to this project's sequence layout:
    <root>/<object>/<sequence>/frames/*.png, poses.csv, intrinsics.json
    <root>/<object>/<object>.obj          mesh, meters
"""

from __future__ import annotations

# Standard library
import pathlib

# External packages
import numpy as np

# Local modules
from tracking.errors import SequenceError
from tracking.geometry import Intrinsics, Pose
from tracking.mesh_render import TriangleMesh, load_mesh
from utils.utils_io import FrameSequence, load_sequence
from utils.utils_logger import logger

# -------------------------------
# Constants
# -------------------------------

RBOT_OBJECTS = (
    "ape", "bakingsoda", "benchviseblue", "broccolisoup", "cam", "can",
    "cat", "clown", "cube", "driller", "duck", "eggbox",
    "glue", "iron", "koalacandy", "lamp", "phone", "squirrel",
)
RBOT_VARIANTS = {
    "regular": "a_regular",
    "dynamic_light": "b_dynamiclight",
    "noisy": "c_noisy",
    "occlusion": "d_occlusion",
}
RBOT_IMAGE_SIZE = (640, 512)
MM_TO_M = 0.001

OPT_OBJECTS = ("soda", "chest", "ironman", "house", "bike", "jet")


# -------------------------------
# Helpers
# -------------------------------


def scale_mesh(mesh: TriangleMesh, factor: float) -> TriangleMesh:
    return TriangleMesh(vertices=mesh.vertices * factor, triangles=mesh.triangles, name=mesh.name)


def _numeric_rows(path: pathlib.Path, width: int) -> np.ndarray:
    """Rows of a whitespace table holding exactly `width` numbers; other lines are skipped."""
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        parts = line.replace(",", " ").split()
        if len(parts) != width:
            continue
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            continue
    return np.asarray(rows, dtype=np.float64).reshape(-1, width)


# -------------------------------
# RBOT-style
# -------------------------------


def rbot_available(root: pathlib.Path | str) -> bool:
    root = pathlib.Path(root)
    return (root / "camera_calibration.txt").is_file() and (root / "poses_first.txt").is_file()


def read_rbot_poses(path: pathlib.Path) -> list[Pose]:
    rows = _numeric_rows(path, 12)
    # rotations are stored with a few digits; snap them back onto SO(3)
    return [Pose.from_rt(row[:9], row[9:] * MM_TO_M, orthonormalize=True) for row in rows]


def read_rbot_intrinsics(path: pathlib.Path) -> Intrinsics:
    rows = _numeric_rows(path, 4)
    if rows.shape[0] == 0:
        raise SequenceError(f"{path} holds no 'fx fy px py' line")
    fx, fy, px, py = rows[0]
    return Intrinsics(fx=fx, fy=fy, px=px, py=py, width=RBOT_IMAGE_SIZE[0], height=RBOT_IMAGE_SIZE[1])


def load_rbot_mesh(root: pathlib.Path | str, name: str) -> TriangleMesh:
    root = pathlib.Path(root)
    return scale_mesh(load_mesh(root / name / f"{name}.obj"), MM_TO_M)


def load_rbot_occluder(root: pathlib.Path | str) -> TriangleMesh:
    return scale_mesh(load_mesh(pathlib.Path(root) / "squirrel_small.obj"), MM_TO_M)


def load_rbot_sequence(root: pathlib.Path | str, name: str, variant: str) -> FrameSequence:
    root = pathlib.Path(root)
    if not rbot_available(root):
        logger.error(f"No RBOT-style dataset at {root}")
        raise SequenceError(f"no RBOT-style dataset at {root}")
    if variant not in RBOT_VARIANTS:
        raise SequenceError(f"unknown variant {variant!r}, expected one of {list(RBOT_VARIANTS)}")

    prefix = RBOT_VARIANTS[variant]
    frame_paths = sorted((root / name / "frames").glob(f"{prefix}[0-9]*.png"))
    gt_poses = read_rbot_poses(root / "poses_first.txt")[: len(frame_paths)]
    occluder_poses = []
    occluder_mesh_path = None
    if variant == "occlusion":
        occluder_poses = read_rbot_poses(root / "poses_second.txt")[: len(frame_paths)]
        occluder_mesh_path = root / "squirrel_small.obj"
    return FrameSequence(
        name=f"{name}_{variant}",
        frame_paths=frame_paths,
        gt_poses=gt_poses,
        intrinsics=read_rbot_intrinsics(root / "camera_calibration.txt"),
        occluder_poses=occluder_poses,
        occluder_mesh_path=occluder_mesh_path,
    )


# -------------------------------
# OPT-style
# -------------------------------


def opt_available(root: pathlib.Path | str) -> bool:
    root = pathlib.Path(root)
    return any((root / name).is_dir() for name in OPT_OBJECTS)


def opt_sequences(root: pathlib.Path | str) -> list[tuple[str, FrameSequence]]:
    """(object name, sequence) for every converted sequence found under the tree."""
    root = pathlib.Path(root)
    if not opt_available(root):
        logger.error(f"No OPT-style dataset at {root}")
        raise SequenceError(f"no OPT-style dataset at {root}")
    found = []
    for name in OPT_OBJECTS:
        for directory in sorted(p for p in (root / name).glob("*") if (p / "poses.csv").is_file()):
            found.append((name, load_sequence(directory, name=f"{name}_{directory.name}")))
    logger.info(f"Found {len(found)} OPT-style sequences under {root}")
    return found


def load_opt_mesh(root: pathlib.Path | str, name: str) -> TriangleMesh:
    return load_mesh(pathlib.Path(root) / name / f"{name}.obj")
