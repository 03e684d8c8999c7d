"""
duckdb_emitter.py

Emit per-frame evaluation records into a DuckDB database.

DuckDB is an in-process OLAP engine; it suits aggregate queries over many
runs (success rate per sequence, AUC per parameter value) without a server.
The import stays optional: when duckdb is missing the emitter logs an
error and returns False.
"""
from __future__ import annotations

import pathlib
from typing import Any, Iterable, Mapping

from utils.emitters.records import FRAME_RESULT_COLUMNS, normalize_record
from utils.utils_logger import logger

try:
    import duckdb
except Exception as e:  # pragma: no cover
    duckdb = None
    _import_err = e
else:
    _import_err = None


_TABLE_SQL = """
CREATE TABLE IF NOT EXISTS frame_results (
    run_id TEXT,
    sequence TEXT,
    frame INTEGER,
    success BOOLEAN,
    e_t DOUBLE,
    e_r DOUBLE,
    e_v DOUBLE,
    reinit BOOLEAN,
    valid_lines INTEGER,
    step_ms DOUBLE
);
"""

_INSERT_SQL = f"""
INSERT INTO frame_results ({", ".join(FRAME_RESULT_COLUMNS)})
VALUES ({", ".join("?" for _ in FRAME_RESULT_COLUMNS)})
"""


def emit_records(records: Iterable[Mapping[str, Any]], *, db_path: pathlib.Path) -> bool:
    """
    Insert records into DuckDB.

    Returns:
        True on success, False on failure.
    """
    if duckdb is None:
        logger.error(f"[duckdb_emitter] duckdb not installed: {_import_err}")
        return False

    try:
        rows = []
        for record in records:
            row = list(normalize_record(record))
            row[3], row[7] = bool(row[3]), bool(row[7])
            rows.append(row)
        db_path.parent.mkdir(parents=True, exist_ok=True)
        con = duckdb.connect(database=str(db_path), read_only=False)
        try:
            con.execute(_TABLE_SQL)
            if rows:
                con.executemany(_INSERT_SQL, rows)
            logger.debug(f"[duckdb_emitter] inserted {len(rows)} records into {db_path}")
            return True
        finally:
            con.close()
    except Exception as e:
        logger.error(f"[duckdb_emitter] failed to insert into {db_path}: {e}")
        return False


def emit_record(record: Mapping[str, Any], *, db_path: pathlib.Path) -> bool:
    return emit_records([record], db_path=db_path)
