"""
tests/test_cli.py

Command-line verbs end to end on small synthetic data.
"""

#####################################
# Imports
#####################################

import json
import pathlib

import numpy as np
import pandas as pd
import pytest

from track_cli import error_line, main, model_config_from, pose_from_config
from tracking.errors import ConfigError
from tracking.mesh_render import make_box_mesh, save_mesh
from utils.utils_io import read_pose_csv

BOX = ["--box", "0.06", "0.06", "0.06", "--name", "cube"]

#####################################
# Fixtures
#####################################


@pytest.fixture
def workspace(tmp_path: pathlib.Path, monkeypatch) -> pathlib.Path:
    """Small model settings and result folders confined to the temp folder."""
    monkeypatch.setenv("MODEL_CACHE_DIR", str(tmp_path / "models"))
    monkeypatch.setenv("RESULTS_DIR", str(tmp_path / "results"))
    monkeypatch.setenv("REPORT_SINK", "csv")
    config_file = tmp_path / "tracker_config.json"
    config_file.write_text(json.dumps({"viewpoint_model": {"n_c": 30, "subdivisions": 1}}), encoding="utf-8")
    return tmp_path


def _run(workspace: pathlib.Path, *argv: str) -> int:
    return main(["--config", str(workspace / "tracker_config.json"), *argv])


#####################################
# Helpers
#####################################


def test_error_line_escapes_quotes_and_newlines():
    assert error_line("config", 'bad "x"\nnext') == 'ERROR code=config message="bad \\"x\\" next"'


def test_pose_from_config_forms():
    pose = pose_from_config({"rotation": np.eye(3).tolist(), "translation": [0.0, 0.0, 0.5]})
    assert pose.translation[2] == 0.5
    matrix = np.eye(4)
    matrix[:3, 3] = [0.1, 0.0, 0.4]
    assert pose_from_config(matrix.tolist()).translation[0] == pytest.approx(0.1)
    with pytest.raises(ConfigError):
        pose_from_config({"rotation": np.eye(3).tolist()})


def test_model_config_from_rejects_unknown_keys():
    assert model_config_from({}).n_c == 200
    with pytest.raises(ConfigError):
        model_config_from({"viewpoint_model": {"n_points": 10}})
    with pytest.raises(ConfigError):
        model_config_from({"viewpoint_model": {"n_c": 0}})


#####################################
# Verbs
#####################################


def test_build_model(workspace: pathlib.Path, capsys):
    out = workspace / "cube.svm"
    assert _run(workspace, "build-model", *BOX, "--subdiv", "0", "--n-c", "10", "--out", str(out)) == 0
    assert out.is_file()
    assert "12 views x 10 points" in capsys.readouterr().out


def test_build_model_with_too_small_sphere(workspace: pathlib.Path, capsys):
    code = _run(workspace, "build-model", *BOX, "--subdiv", "0", "--radius", "0.01", "--out", str(workspace / "x.svm"))
    assert code == 1
    assert "ERROR code=viewpoint_model" in capsys.readouterr().err


def test_bad_config_file(workspace: pathlib.Path, capsys):
    broken = workspace / "broken.json"
    broken.write_text("{", encoding="utf-8")
    assert main(["--config", str(broken), "build-model", *BOX]) == 1
    assert "ERROR code=config" in capsys.readouterr().err


def test_missing_explicit_config_is_reported(workspace: pathlib.Path, capsys):
    assert main(["--config", str(workspace / "absent.json"), "build-model", *BOX]) == 1
    assert "ERROR code=config" in capsys.readouterr().err


def test_zero_frames_is_a_config_error(workspace: pathlib.Path, capsys):
    assert _run(workspace, "synthesize", *BOX, "--frames", "0", "--out", str(workspace / "empty")) == 1
    err = capsys.readouterr().err
    assert "ERROR code=config" in err
    assert "Traceback" not in err


def test_missing_sequence_is_reported(workspace: pathlib.Path, capsys):
    assert _run(workspace, "track", "--sequence", str(workspace / "nowhere"), *BOX) == 1
    assert "ERROR code=" in capsys.readouterr().err


def test_synthesize_track_evaluate_overlay(workspace: pathlib.Path):
    sequence_dir = workspace / "cube_regular"
    assert _run(workspace, "synthesize", *BOX, "--frames", "3", "--seed", "2", "--out", str(sequence_dir)) == 0
    assert len(list((sequence_dir / "frames").glob("*.png"))) == 3

    tracks = workspace / "tracks"
    assert _run(workspace, "track", "--sequence", str(sequence_dir), *BOX, "--out", str(tracks)) == 0
    assert len(read_pose_csv(tracks / "cube_poses.csv")) == 3
    assert len(pd.read_csv(tracks / "steps.csv")) == 2
    assert (workspace / "models" / "cube_s1_n30.svm").is_file()

    evaluations = workspace / "evaluations"
    code = _run(
        workspace, "evaluate-rbot", "--sequence", str(sequence_dir), *BOX, "--out", str(evaluations), "--no-sink"
    )
    assert code == 0
    frames = pd.read_csv(evaluations / "cube_regular_rbot_frames.csv")
    assert frames["frame"].tolist() == [1, 2]

    overlays = workspace / "overlays"
    assert _run(workspace, "overlay", "--sequence", str(sequence_dir), *BOX, "--every", "2", "--out", str(overlays)) == 0
    assert sorted(p.name for p in overlays.glob("*.png")) == ["000000.png", "000002.png"]


def test_benchmark_and_sweep(workspace: pathlib.Path):
    bench = workspace / "bench.json"
    assert _run(workspace, "benchmark", "--frames", "3", "--out", str(bench)) == 0
    stats = json.loads(bench.read_text(encoding="utf-8"))
    assert stats["frames"] == 2 and stats["n_c"] == 30

    sweep = workspace / "sweep.csv"
    code = _run(workspace, "sweep", "--param", "amplitude", "--values", "0.3", "0.36", "--frames", "3", "--out", str(sweep))
    assert code == 0
    frame = pd.read_csv(sweep)
    assert frame["amplitude"].tolist() == [0.3, 0.36]
    assert frame["success_rate"].between(0.0, 100.0).all()


def test_config_objects_resolve_relative_to_the_config_file(workspace: pathlib.Path):
    sequence_dir = workspace / "cube_regular"
    assert _run(workspace, "synthesize", *BOX, "--frames", "2", "--seed", "4", "--out", str(sequence_dir)) == 0

    config_dir = workspace / "configs"
    save_mesh(make_box_mesh((0.06, 0.06, 0.06), name="cube"), config_dir / "meshes" / "cube.obj")
    config_file = config_dir / "tracker_config.json"
    raw = {
        "viewpoint_model": {"n_c": 30, "subdivisions": 1},
        "objects": [{"mesh": "meshes/cube.obj", "model_cache": "models/cube.svm"}],
    }
    config_file.write_text(json.dumps(raw), encoding="utf-8")

    tracks = workspace / "tracks"
    code = main(["--config", str(config_file), "track", "--sequence", str(sequence_dir), "--out", str(tracks)])
    assert code == 0
    assert (config_dir / "models" / "cube.svm").is_file()
    assert not (workspace / "models" / "cube_s1_n30.svm").exists()
