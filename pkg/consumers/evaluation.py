"""
evaluation.py

Consume frame sequences and score a tracker against ground truth.

Metrics:
- pose_errors: translational error (meters) and rotational error (radians)
- vertex_error: mean displacement of the mesh vertices between two poses
- auc_score: area under the vertex-error success curve on k_e in [0, 0.2],
  scaled to [0, 20]

Protocols:
- rbot_protocol: 5 cm / 5 degree success per frame; a failed frame resets
  the tracker to ground truth. Frame 0 initializes and is not scored.
- opt_protocol: initialize once, never reset, score the AUC of vertex errors.

Any object with reset(image, pose, occluder_pose=None) and step(image) -> Pose
can be evaluated; RegionTracker adapts tracking.tracker to that interface.
"""

from __future__ import annotations

# Standard library
import pathlib
import time
import uuid
from dataclasses import dataclass, field
from typing import Protocol

# External packages
import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

# Local modules
from tracking.geometry import Intrinsics, Pose, rotation_angle
from tracking.mesh_render import TriangleMesh
from tracking.tracker import TrackedObject, TrackerConfig, initialize, track_step
from tracking.viewpoint_model import SparseViewpointModel
from utils.utils_io import FrameSequence
from utils.utils_logger import logger

# -------------------------------
# Metrics
# -------------------------------

TRANSLATION_THRESHOLD_M = 0.05
ROTATION_THRESHOLD_RAD = np.deg2rad(5.0)
AUC_K_MAX = 0.2
AUC_SAMPLES = 201


def pose_errors(estimate: Pose, gt: Pose) -> tuple[float, float]:
    """(e_t meters, e_r radians)."""
    e_t = float(np.linalg.norm(estimate.translation - gt.translation))
    e_r = rotation_angle(estimate.rotation.T @ gt.rotation)
    return e_t, e_r


def vertex_error(mesh: TriangleMesh, estimate: Pose, gt: Pose) -> float:
    """Mean distance between the mesh vertices placed by `estimate` and by `gt`."""
    displaced = estimate.transform(mesh.vertices) - gt.transform(mesh.vertices)
    return float(np.mean(np.linalg.norm(displaced, axis=1)))


def auc_score(errors, diameter: float, k_max: float = AUC_K_MAX, samples: int = AUC_SAMPLES) -> float:
    """
    Success fraction e_v <= k_e * d integrated over k_e in [0, k_max]
    (trapezoid rule), scaled so a perfect tracker scores 20.
    """
    if not diameter > 0.0:
        raise ValueError("diameter must be positive")
    errors = np.asarray(errors, dtype=np.float64).reshape(-1)
    if errors.size == 0:
        return 0.0
    thresholds = np.linspace(0.0, k_max, samples)
    fractions = np.mean(errors[None, :] <= thresholds[:, None] * diameter, axis=1)
    return float(trapezoid(fractions, thresholds) * 20.0 / k_max)


# -------------------------------
# Reports
# -------------------------------


@dataclass
class EvalReport:
    sequence: str
    frames: list[int] = field(default_factory=list)
    e_t: list[float] = field(default_factory=list)
    e_r: list[float] = field(default_factory=list)
    e_v: list[float] = field(default_factory=list)
    success: list[bool] = field(default_factory=list)
    reinit: list[bool] = field(default_factory=list)
    valid_lines: list[int] = field(default_factory=list)
    step_ms: list[float] = field(default_factory=list)
    auc: float = float("nan")

    @property
    def success_rate(self) -> float:
        return 100.0 * float(np.mean(self.success)) if self.success else 0.0

    @property
    def reinit_count(self) -> int:
        return int(np.sum(self.reinit))

    def add(self, frame: int, e_t: float, e_r: float, e_v: float, success: bool, reinit: bool, valid_lines: int, step_ms: float) -> None:
        self.frames.append(frame)
        self.e_t.append(e_t)
        self.e_r.append(e_r)
        self.e_v.append(e_v)
        self.success.append(success)
        self.reinit.append(reinit)
        self.valid_lines.append(valid_lines)
        self.step_ms.append(step_ms)

    def records(self, run_id: str) -> list[dict]:
        return [
            {
                "run_id": run_id,
                "sequence": self.sequence,
                "frame": k,
                "success": s,
                "e_t": t,
                "e_r": r,
                "e_v": v,
                "reinit": ri,
                "valid_lines": n,
                "step_ms": ms,
            }
            for k, t, r, v, s, ri, n, ms in zip(
                self.frames, self.e_t, self.e_r, self.e_v, self.success, self.reinit, self.valid_lines, self.step_ms
            )
        ]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records(run_id=""))

    def summary(self) -> dict:
        return {
            "sequence": self.sequence,
            "frames": len(self.frames),
            "success_rate": self.success_rate,
            "reinit_count": self.reinit_count,
            "mean_e_t": float(np.mean(self.e_t)) if self.e_t else float("nan"),
            "mean_e_r": float(np.mean(self.e_r)) if self.e_r else float("nan"),
            "auc": self.auc,
            "mean_step_ms": float(np.mean(self.step_ms)) if self.step_ms else float("nan"),
        }


def new_run_id() -> str:
    return uuid.uuid4().hex[:12]


def success_table(summaries: list[dict]) -> pd.DataFrame:
    """
    Success rates with objects as rows and variants as columns, plus mean row/column.

    Each summary needs keys object, variant, success_rate.
    """
    frame = pd.DataFrame(summaries)
    table = frame.pivot_table(index="object", columns="variant", values="success_rate", aggfunc="mean")
    table["mean"] = table.mean(axis=1)
    table.loc["mean"] = table.mean(axis=0)
    return table


# -------------------------------
# Trackers under evaluation
# -------------------------------


class SequenceTracker(Protocol):
    def reset(self, image: np.ndarray, pose: Pose, occluder_pose: Pose | None = None) -> None: ...

    def step(self, image: np.ndarray) -> Pose: ...


class RegionTracker:
    """
    Adapts the region-based tracker to the protocols.

    With an occluder model the two objects are tracked jointly (ids 0 and 1)
    with occlusion masks; only the primary pose is returned by step().
    """

    def __init__(
        self,
        mesh: TriangleMesh,
        model: SparseViewpointModel,
        intrinsics: Intrinsics,
        config: TrackerConfig | None = None,
        overrides: dict | None = None,
        occluder: tuple[TriangleMesh, SparseViewpointModel] | None = None,
    ) -> None:
        self.intrinsics = intrinsics
        self.config = config or TrackerConfig()
        self.primary = TrackedObject(mesh=mesh, model=model, id=0, overrides=dict(overrides or {}))
        self.occluder = None
        if occluder is not None:
            self.occluder = TrackedObject(mesh=occluder[0], model=occluder[1], id=1)
        self.last_valid_lines = 0
        self.last_step_ms = 0.0

    @property
    def objects(self) -> list[TrackedObject]:
        return [self.primary] if self.occluder is None else [self.primary, self.occluder]

    def reset(self, image: np.ndarray, pose: Pose, occluder_pose: Pose | None = None) -> None:
        initialize(self.primary, image, pose, self.intrinsics, self.config)
        if self.occluder is not None and occluder_pose is not None:
            initialize(self.occluder, image, occluder_pose, self.intrinsics, self.config)

    def reset_occluder(self, image: np.ndarray, pose: Pose) -> None:
        if self.occluder is not None:
            initialize(self.occluder, image, pose, self.intrinsics, self.config)

    @property
    def occluder_pose(self) -> Pose | None:
        return None if self.occluder is None else self.occluder.pose

    def step(self, image: np.ndarray) -> Pose:
        results = track_step(self.objects, image, self.intrinsics, self.config)
        self.last_valid_lines = results[0].valid_lines[-1] if results[0].valid_lines else 0
        self.last_step_ms = results[0].step_ms
        return self.primary.pose


class GroundTruthTracker:
    """Returns the ground truth of each frame; protocol sanity checks."""

    def __init__(self, poses: list[Pose]) -> None:
        self.poses = poses
        self.index = 0

    def reset(self, image: np.ndarray, pose: Pose, occluder_pose: Pose | None = None) -> None:
        target = pose.as_matrix()
        self.index = next(
            k for k in range(self.index, len(self.poses)) if np.allclose(self.poses[k].as_matrix(), target)
        )

    def step(self, image: np.ndarray) -> Pose:
        self.index += 1
        return self.poses[self.index]


class FrozenTracker:
    """Never moves: always reports the pose it was last reset to."""

    def __init__(self) -> None:
        self.pose = Pose.identity()

    def reset(self, image: np.ndarray, pose: Pose, occluder_pose: Pose | None = None) -> None:
        self.pose = pose

    def step(self, image: np.ndarray) -> Pose:
        return self.pose


# -------------------------------
# Protocols
# -------------------------------


def _is_success(e_t: float, e_r: float, translation_threshold: float, rotation_threshold: float) -> bool:
    return e_t < translation_threshold and e_r < rotation_threshold


def rbot_protocol(
    tracker: SequenceTracker,
    sequence: FrameSequence,
    mesh: TriangleMesh | None = None,
    translation_threshold: float = TRANSLATION_THRESHOLD_M,
    rotation_threshold: float = ROTATION_THRESHOLD_RAD,
) -> EvalReport:
    """Track frames 1..N-1, resetting to ground truth after every failed frame."""
    report = EvalReport(sequence=sequence.name)
    gt = sequence.gt_poses
    occluder_gt = sequence.occluder_poses or [None] * len(sequence)
    tracker.reset(sequence.load_frame(0), gt[0], occluder_gt[0])

    for k in range(1, len(sequence)):
        image = sequence.load_frame(k)
        started = time.perf_counter()
        estimate = tracker.step(image)
        step_ms = getattr(tracker, "last_step_ms", (time.perf_counter() - started) * 1000.0)

        e_t, e_r = pose_errors(estimate, gt[k])
        e_v = vertex_error(mesh, estimate, gt[k]) if mesh is not None else float("nan")
        success = _is_success(e_t, e_r, translation_threshold, rotation_threshold)
        if not success:
            logger.debug(f"{sequence.name} frame {k}: failure (e_t={e_t:.4f} m, e_r={np.rad2deg(e_r):.2f} deg)")
            tracker.reset(image, gt[k], occluder_gt[k])
        elif occluder_gt[k] is not None and getattr(tracker, "occluder_pose", None) is not None:
            # the occluding object is only kept on track, never scored
            o_t, o_r = pose_errors(tracker.occluder_pose, occluder_gt[k])
            if not _is_success(o_t, o_r, translation_threshold, rotation_threshold):
                tracker.reset_occluder(image, occluder_gt[k])

        report.add(k, e_t, e_r, e_v, success, not success, getattr(tracker, "last_valid_lines", 0), step_ms)

    if mesh is not None:
        report.auc = auc_score(report.e_v, mesh.diameter)
    logger.info(
        f"{sequence.name}: success {report.success_rate:.1f}% over {len(report.frames)} frames, "
        f"{report.reinit_count} re-initializations"
    )
    return report


def opt_protocol(tracker: SequenceTracker, sequence: FrameSequence, mesh: TriangleMesh) -> EvalReport:
    """Initialize once from ground truth, never reset; AUC of per-frame vertex errors."""
    report = EvalReport(sequence=sequence.name)
    gt = sequence.gt_poses
    tracker.reset(sequence.load_frame(0), gt[0])
    for k in range(1, len(sequence)):
        started = time.perf_counter()
        estimate = tracker.step(sequence.load_frame(k))
        step_ms = getattr(tracker, "last_step_ms", (time.perf_counter() - started) * 1000.0)
        e_t, e_r = pose_errors(estimate, gt[k])
        e_v = vertex_error(mesh, estimate, gt[k])
        success = _is_success(e_t, e_r, TRANSLATION_THRESHOLD_M, ROTATION_THRESHOLD_RAD)
        report.add(k, e_t, e_r, e_v, success, False, getattr(tracker, "last_valid_lines", 0), step_ms)
    report.auc = auc_score(report.e_v, mesh.diameter)
    logger.info(f"{sequence.name}: AUC {report.auc:.2f} over {len(report.frames)} frames")
    return report


def write_report(report: EvalReport, path: pathlib.Path | str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.to_frame().drop(columns=["run_id"], errors="ignore").to_csv(path, index=False)
    return path
