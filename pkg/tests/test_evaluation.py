"""
tests/test_evaluation.py

Pose metrics, the AUC score, reports and the two evaluation protocols,
exercised with trackers whose behavior is known in advance.
"""

#####################################
# Imports
#####################################

import pathlib

import numpy as np
import pandas as pd
import pytest

from consumers.evaluation import (
    EvalReport,
    FrozenTracker,
    GroundTruthTracker,
    auc_score,
    new_run_id,
    opt_protocol,
    pose_errors,
    rbot_protocol,
    success_table,
    vertex_error,
    write_report,
)
from tracking.geometry import Intrinsics, Pose, exp_map
from tracking.mesh_render import make_box_mesh
from utils.utils_io import FrameSequence

CAMERA = Intrinsics(fx=200.0, fy=200.0, px=79.5, py=59.5, width=160, height=120)

#####################################
# Helper Functions
#####################################


class BlankSequence(FrameSequence):
    """Ground truth only; every frame is a black image."""

    def load_frame(self, index: int) -> np.ndarray:
        return np.zeros((CAMERA.height, CAMERA.width, 3), dtype=np.uint8)


def _sliding_sequence(n_frames: int, step_m: float, occluder: bool = False) -> BlankSequence:
    poses = [Pose(np.eye(3), [step_m * k, 0.0, 0.5]) for k in range(n_frames)]
    return BlankSequence(
        name="slide",
        frame_paths=[pathlib.Path(f"{k:06d}.png") for k in range(n_frames)],
        gt_poses=poses,
        intrinsics=CAMERA,
        occluder_poses=[Pose(np.eye(3), [0.0, 0.0, 0.3]) for _ in range(n_frames)] if occluder else [],
    )


#####################################
# Metrics
#####################################


def test_pose_errors_examples():
    e_t, e_r = pose_errors(Pose(np.eye(3), [0.03, 0.04, 0.0]), Pose.identity())
    assert e_t == pytest.approx(0.05)
    assert e_r == pytest.approx(0.0, abs=1e-7)
    _, e_r = pose_errors(Pose(exp_map(np.array([0.0, 0.0, np.pi / 2])), np.zeros(3)), Pose.identity())
    assert e_r == pytest.approx(np.pi / 2)


def test_vertex_error_of_a_pure_translation():
    mesh = make_box_mesh((0.1, 0.1, 0.1))
    shifted = Pose(np.eye(3), [0.0, 0.02, 0.5])
    assert vertex_error(mesh, shifted, Pose(np.eye(3), [0.0, 0.0, 0.5])) == pytest.approx(0.02)


def test_auc_examples():
    assert auc_score(np.zeros(10), 0.1) == pytest.approx(20.0)
    assert auc_score(np.full(10, 1.0), 0.1) == 0.0
    assert auc_score([], 0.1) == 0.0
    # every error just above 10% of the diameter: success from k_e = 0.101 on
    assert auc_score(np.full(5, 0.1005 * 0.2), 0.2) == pytest.approx(9.95)
    with pytest.raises(ValueError):
        auc_score([0.0], 0.0)


def test_auc_is_monotonic_in_errors():
    rng = np.random.default_rng(0)
    errors = rng.uniform(0.0, 0.03, size=100)
    assert auc_score(errors * 0.5, 0.1) >= auc_score(errors, 0.1)


#####################################
# Reports
#####################################


def test_report_summary_and_records():
    report = EvalReport(sequence="s")
    report.add(1, 0.01, 0.02, 0.003, True, False, 150, 5.0)
    report.add(2, 0.09, 0.02, 0.004, False, True, 80, 7.0)
    assert report.success_rate == 50.0
    assert report.reinit_count == 1
    summary = report.summary()
    assert summary["frames"] == 2
    assert summary["mean_step_ms"] == pytest.approx(6.0)
    records = report.records("run1")
    assert [r["frame"] for r in records] == [1, 2]
    assert records[1]["reinit"] is True
    assert EvalReport(sequence="empty").success_rate == 0.0


def test_success_table_has_mean_row_and_column():
    summaries = [
        {"object": "ape", "variant": "regular", "success_rate": 90.0},
        {"object": "ape", "variant": "noisy", "success_rate": 70.0},
        {"object": "cat", "variant": "regular", "success_rate": 100.0},
        {"object": "cat", "variant": "noisy", "success_rate": 80.0},
    ]
    table = success_table(summaries)
    assert table.loc["ape", "mean"] == pytest.approx(80.0)
    assert table.loc["mean", "regular"] == pytest.approx(95.0)
    assert table.loc["mean", "mean"] == pytest.approx(85.0)


def test_new_run_id_is_short_and_unique():
    first, second = new_run_id(), new_run_id()
    assert len(first) == 12 and first != second


def test_write_report_drops_run_id(tmp_path: pathlib.Path):
    report = EvalReport(sequence="s")
    report.add(1, 0.01, 0.02, 0.003, True, False, 150, 5.0)
    frame = pd.read_csv(write_report(report, tmp_path / "out" / "s.csv"))
    assert "run_id" not in frame.columns
    assert frame.loc[0, "valid_lines"] == 150


#####################################
# Protocols
#####################################


def test_rbot_protocol_with_ground_truth_tracker():
    sequence = _sliding_sequence(20, 0.01)
    mesh = make_box_mesh((0.05, 0.05, 0.05))
    report = rbot_protocol(GroundTruthTracker(sequence.gt_poses), sequence, mesh)
    assert report.frames == list(range(1, 20))
    assert report.success_rate == 100.0
    assert report.reinit_count == 0
    assert report.auc == pytest.approx(20.0)


def test_rbot_protocol_resets_after_failures():
    # a frozen tracker drifts 3 cm per frame: every second frame fails
    sequence = _sliding_sequence(7, 0.03)
    report = rbot_protocol(FrozenTracker(), sequence)
    assert report.success == [True, False, True, False, True, False]
    assert report.reinit == [False, True, False, True, False, True]
    assert report.success_rate == 50.0
    assert np.isnan(report.auc)


def test_rbot_protocol_with_occluder_poses():
    sequence = _sliding_sequence(5, 0.01, occluder=True)
    report = rbot_protocol(GroundTruthTracker(sequence.gt_poses), sequence)
    assert report.success_rate == 100.0


def test_opt_protocol_never_resets():
    sequence = _sliding_sequence(7, 0.03)
    mesh = make_box_mesh((0.05, 0.05, 0.05))
    frozen = opt_protocol(FrozenTracker(), sequence, mesh)
    assert frozen.reinit_count == 0
    assert frozen.e_t == pytest.approx([0.03 * k for k in range(1, 7)])
    assert frozen.auc < 20.0

    perfect = opt_protocol(GroundTruthTracker(sequence.gt_poses), sequence, mesh)
    assert perfect.auc == pytest.approx(20.0)
