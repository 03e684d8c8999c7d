"""
records.py

Shape of a per-frame evaluation record shared by every sink.

One record per scored frame:
    run_id, sequence, frame, success, e_t, e_r, e_v, reinit, valid_lines, step_ms
e_t and e_v are meters, e_r radians, step_ms wall-clock milliseconds.
"""

from typing import Any, Mapping

FRAME_RESULT_COLUMNS = (
    "run_id",
    "sequence",
    "frame",
    "success",
    "e_t",
    "e_r",
    "e_v",
    "reinit",
    "valid_lines",
    "step_ms",
)


def normalize_record(record: Mapping[str, Any]) -> tuple:
    """Return the record as a tuple in column order with plain Python types."""
    return (
        str(record.get("run_id", "")),
        str(record.get("sequence", "")),
        int(record.get("frame", 0)),
        int(bool(record.get("success", False))),
        float(record.get("e_t", float("nan"))),
        float(record.get("e_r", float("nan"))),
        float(record.get("e_v", float("nan"))),
        int(bool(record.get("reinit", False))),
        int(record.get("valid_lines", 0)),
        float(record.get("step_ms", 0.0)),
    )


def as_dict(record: Mapping[str, Any]) -> dict:
    return dict(zip(FRAME_RESULT_COLUMNS, normalize_record(record)))
