"""
I/O Utility
File: utils/utils_io.py

Sequence artifacts on disk:
- ground-truth / estimated poses: CSV `frame, r11..r33, tx, ty, tz` (meters, row-major)
- frames: 8-bit RGB PNG (OpenCV stores BGR; conversion happens here)
- intrinsics: JSON object with fx, fy, px, py, width, height
"""

#####################################
# Imports
#####################################

# import from Python Standard Library
import json
import pathlib
from dataclasses import dataclass, field

# import from external packages
import cv2
import numpy as np
import pandas as pd

# import from local modules
from tracking.errors import SequenceError
from tracking.geometry import Intrinsics, Pose
from .utils_logger import logger

#####################################
# Constants
#####################################

ROTATION_COLUMNS = [f"r{i}{j}" for i in range(1, 4) for j in range(1, 4)]
POSE_COLUMNS = ["frame", *ROTATION_COLUMNS, "tx", "ty", "tz"]

#####################################
# Poses
#####################################


def write_pose_csv(poses: list[Pose], path: pathlib.Path | str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [[k, *pose.rotation.reshape(-1), *pose.translation] for k, pose in enumerate(poses)]
    frame = pd.DataFrame(rows, columns=POSE_COLUMNS)
    frame["frame"] = frame["frame"].astype(int)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug(f"Wrote {len(poses)} poses to {path}")
    return path


def read_pose_csv(path: pathlib.Path | str) -> list[Pose]:
    """Poses ordered by the frame column."""
    path = pathlib.Path(path)
    frame = pd.read_csv(path)
    missing = [c for c in POSE_COLUMNS if c not in frame.columns]
    if missing:
        logger.error(f"{path} lacks pose columns {missing}")
        raise SequenceError(f"{path} lacks pose columns {missing}")
    frame = frame.sort_values("frame")
    rotations = frame[ROTATION_COLUMNS].to_numpy(dtype=np.float64).reshape(-1, 3, 3)
    translations = frame[["tx", "ty", "tz"]].to_numpy(dtype=np.float64)
    return [Pose(r, t) for r, t in zip(rotations, translations)]


#####################################
# Images
#####################################


def read_rgb(path: pathlib.Path | str, frame_index: int | None = None) -> np.ndarray:
    """Load an 8-bit image as RGB (H, W, 3) uint8."""
    path = pathlib.Path(path)
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        logger.error(f"Cannot read image {path}")
        raise SequenceError(f"cannot read image {path}", frame_index=frame_index)
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


def write_rgb(image: np.ndarray, path: pathlib.Path | str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), cv2.cvtColor(np.ascontiguousarray(image, dtype=np.uint8), cv2.COLOR_RGB2BGR)):
        raise OSError(f"cannot write image {path}")
    return path


#####################################
# Intrinsics
#####################################


def write_intrinsics(intrinsics: Intrinsics, path: pathlib.Path | str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(intrinsics.to_dict(), indent=2), encoding="utf-8")
    return path


def read_intrinsics(path: pathlib.Path | str) -> Intrinsics:
    path = pathlib.Path(path)
    try:
        return Intrinsics.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (OSError, KeyError, ValueError) as e:
        logger.error(f"Cannot read intrinsics from {path}: {e}")
        raise SequenceError(f"cannot read intrinsics from {path}: {e}") from e


#####################################
# Sequences
#####################################


@dataclass
class FrameSequence:
    """Frames on disk with per-frame ground truth; optional occluder poses for two-object runs."""

    name: str
    frame_paths: list[pathlib.Path]
    gt_poses: list[Pose]
    intrinsics: Intrinsics
    occluder_poses: list[Pose] = field(default_factory=list)
    occluder_mesh_path: pathlib.Path | None = None

    def __post_init__(self) -> None:
        if len(self.frame_paths) != len(self.gt_poses):
            raise SequenceError(
                f"sequence '{self.name}' has {len(self.frame_paths)} frames but {len(self.gt_poses)} poses"
            )
        if self.occluder_poses and len(self.occluder_poses) != len(self.gt_poses):
            raise SequenceError(f"sequence '{self.name}' has a partial occluder trajectory")

    def __len__(self) -> int:
        return len(self.frame_paths)

    def load_frame(self, index: int) -> np.ndarray:
        return read_rgb(self.frame_paths[index], frame_index=index)


def load_sequence(directory: pathlib.Path | str, name: str | None = None) -> FrameSequence:
    """
    Read a sequence directory:
        frames/*.png, poses.csv, intrinsics.json and optionally occluder_poses.csv
    """
    directory = pathlib.Path(directory)
    frame_paths = sorted((directory / "frames").glob("*.png"))
    if not frame_paths:
        logger.error(f"No frames found in {directory / 'frames'}")
        raise SequenceError(f"no frames found in {directory / 'frames'}")
    occluder_file = directory / "occluder_poses.csv"
    return FrameSequence(
        name=name or directory.name,
        frame_paths=frame_paths,
        gt_poses=read_pose_csv(directory / "poses.csv"),
        intrinsics=read_intrinsics(directory / "intrinsics.json"),
        occluder_poses=read_pose_csv(occluder_file) if occluder_file.is_file() else [],
        occluder_mesh_path=directory / "occluder.obj" if (directory / "occluder.obj").is_file() else None,
    )
