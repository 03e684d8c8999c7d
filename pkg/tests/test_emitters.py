"""
tests/test_emitters.py

Lightweight tests to verify emitters append per-frame records without side-effects.
Uses temp paths and skips DuckDB when it isn't installed.

Usage:
  pytest -q
"""

#####################################
# Imports
#####################################

import json
import pathlib
import sqlite3

import pandas as pd
import pytest

from utils.emitters import FRAME_RESULT_COLUMNS, emit_to_sink, file_emitter, sqlite_emitter
from utils.emitters.records import as_dict, normalize_record

#####################################
# Helper Functions
#####################################


def _record(frame: int, success: bool = True) -> dict:
    return {
        "run_id": "abc123",
        "sequence": "cube_regular",
        "frame": frame,
        "success": success,
        "e_t": 0.001 * frame,
        "e_r": 0.01,
        "e_v": 0.002,
        "reinit": not success,
        "valid_lines": 180,
        "step_ms": 4.5,
    }


#####################################
# Records
#####################################


def test_normalize_record_orders_columns_and_coerces_types():
    row = normalize_record(_record(3, success=False))
    assert len(row) == len(FRAME_RESULT_COLUMNS)
    assert row[0] == "abc123"
    assert row[2] == 3
    assert row[3] == 0 and row[7] == 1


def test_as_dict_fills_missing_fields():
    data = as_dict({"sequence": "s", "frame": 1})
    assert data["run_id"] == ""
    assert data["valid_lines"] == 0


#####################################
# File Emitter
#####################################


def test_file_emitter_appends_jsonl(tmp_path: pathlib.Path):
    out = tmp_path / "frame_results.jsonl"

    assert file_emitter.emit_record(_record(1), path=out) is True
    assert file_emitter.emit_record(_record(2, success=False), path=out) is True

    content = out.read_text(encoding="utf-8").strip().splitlines()
    assert len(content) == 2
    assert json.loads(content[0])["frame"] == 1
    assert json.loads(content[1])["reinit"] == 1


def test_file_emitter_appends_csv_with_one_header(tmp_path: pathlib.Path):
    out = tmp_path / "frame_results.csv"

    assert file_emitter.emit_records([_record(1), _record(2)], path=out) is True
    assert file_emitter.emit_records([_record(3)], path=out) is True

    frame = pd.read_csv(out)
    assert list(frame.columns) == list(FRAME_RESULT_COLUMNS)
    assert frame["frame"].tolist() == [1, 2, 3]


def test_file_emitter_returns_false_on_failure(tmp_path: pathlib.Path):
    # a directory where the file should be
    out = tmp_path / "blocked.jsonl"
    out.mkdir()
    assert file_emitter.emit_record(_record(1), path=out) is False


#####################################
# SQLite Emitter
#####################################


def test_sqlite_emitter_inserts_rows(tmp_path: pathlib.Path):
    db_path = tmp_path / "test.sqlite"

    assert sqlite_emitter.emit_records([_record(1), _record(2)], db_path=db_path) is True
    assert sqlite_emitter.emit_record(_record(3), db_path=db_path) is True

    # Verify row count directly
    with sqlite3.connect(str(db_path)) as conn:
        cur = conn.cursor()
        cur.execute("SELECT COUNT(*), SUM(success) FROM frame_results;")
        count, successes = cur.fetchone()
        assert count == 3
        assert successes == 3


#####################################
# DuckDB Emitter
#####################################


@pytest.mark.optional
def test_duckdb_emitter_inserts_rows(tmp_path: pathlib.Path):
    try:
        from utils.emitters import duckdb_emitter  # keep duckdb optional
        import duckdb  # type: ignore
    except Exception as e:
        pytest.skip(f"DuckDB not installed/available: {e}")

    db_path = tmp_path / "test.duckdb"
    assert duckdb_emitter.emit_records([_record(1), _record(2, success=False)], db_path=db_path) is True

    # Verify row count directly
    con = duckdb.connect(database=str(db_path), read_only=True)
    try:
        (count,) = con.execute("SELECT COUNT(*) FROM frame_results WHERE reinit;").fetchone()
        assert count == 1
    finally:
        con.close()


#####################################
# Sink Routing
#####################################


def test_emit_to_sink_routes_by_name(tmp_path: pathlib.Path):
    assert emit_to_sink([_record(1)], "jsonl", tmp_path) is True
    assert emit_to_sink([_record(1)], "csv", tmp_path) is True
    assert emit_to_sink([_record(1)], "sqlite", tmp_path) is True
    assert (tmp_path / "frame_results.jsonl").is_file()
    assert (tmp_path / "frame_results.csv").is_file()
    assert (tmp_path / "tracking_results.sqlite").is_file()


def test_emit_to_sink_rejects_unknown_sink(tmp_path: pathlib.Path):
    with pytest.raises(ValueError):
        emit_to_sink([_record(1)], "parquet", tmp_path)
