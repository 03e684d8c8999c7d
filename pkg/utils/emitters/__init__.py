"""
utils/emitters/__init__.py

Emitters write per-frame evaluation records to one sink.

- A *source* is an evaluation run producing one record per scored frame.
- A *sink* stores those records (file, database).
- An *emitter* is the callable bridge from records to one sink.

This package provides:
- file_emitter.py    - append records to a CSV or JSONL file
- sqlite_emitter.py  - insert records into a SQLite table
- duckdb_emitter.py  - insert records into a DuckDB table

Every emitter defines `emit_record()` and `emit_records()`; both return
False instead of raising when the sink fails.
"""

import pathlib
from typing import Any, Iterable, Mapping

from . import duckdb_emitter, file_emitter, sqlite_emitter
from .records import FRAME_RESULT_COLUMNS

__all__ = [
    "FRAME_RESULT_COLUMNS",
    "file_emitter",
    "sqlite_emitter",
    "duckdb_emitter",
    "emit_to_sink",
]


def emit_to_sink(
    records: Iterable[Mapping[str, Any]],
    sink: str,
    results_dir: pathlib.Path,
    *,
    sqlite_path: pathlib.Path | None = None,
    duckdb_path: pathlib.Path | None = None,
) -> bool:
    """Route records to the sink named csv, jsonl, sqlite or duckdb."""
    records = list(records)
    if sink == "csv":
        return file_emitter.emit_records(records, path=results_dir / "frame_results.csv")
    if sink == "jsonl":
        return file_emitter.emit_records(records, path=results_dir / "frame_results.jsonl")
    if sink == "sqlite":
        return sqlite_emitter.emit_records(records, db_path=sqlite_path or results_dir / "tracking_results.sqlite")
    if sink == "duckdb":
        return duckdb_emitter.emit_records(records, db_path=duckdb_path or results_dir / "tracking_results.duckdb")
    raise ValueError(f"unknown sink {sink!r}")
