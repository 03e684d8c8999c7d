"""
sqlite_emitter.py

Emit per-frame evaluation records into a SQLite database.

- SQLite ships with Python (no install required).
- Results of many runs land in one table, keyed by run_id, so success
  rates can be compared with plain SQL.

SQLite:
INTEGER PRIMARY KEY piggybacks on the rowid and acts like an auto-incrementing key.
"""

import pathlib
import sqlite3
from typing import Any, Iterable, Mapping

from utils.emitters.records import FRAME_RESULT_COLUMNS, normalize_record
from utils.utils_logger import logger

_TABLE_SQL = """
CREATE TABLE IF NOT EXISTS frame_results (
    id INTEGER PRIMARY KEY,
    run_id TEXT,
    sequence TEXT,
    frame INTEGER,
    success INTEGER,
    e_t REAL,
    e_r REAL,
    e_v REAL,
    reinit INTEGER,
    valid_lines INTEGER,
    step_ms REAL
);
"""

_INSERT_SQL = f"""
INSERT INTO frame_results ({", ".join(FRAME_RESULT_COLUMNS)})
VALUES ({", ".join("?" for _ in FRAME_RESULT_COLUMNS)})
"""


def _ensure_table(conn: sqlite3.Connection) -> None:
    conn.execute(_TABLE_SQL)
    conn.commit()


def emit_records(records: Iterable[Mapping[str, Any]], *, db_path: pathlib.Path) -> bool:
    """
    Insert records into the frame_results table.

    Returns:
        True on success, False on failure.
    """
    try:
        rows = [normalize_record(r) for r in records]
        db_path.parent.mkdir(parents=True, exist_ok=True)
        with sqlite3.connect(str(db_path)) as conn:
            _ensure_table(conn)
            conn.executemany(_INSERT_SQL, rows)
            conn.commit()
        logger.debug(f"[sqlite_emitter] inserted {len(rows)} records into {db_path}")
        return True
    except Exception as e:
        logger.error(f"[sqlite_emitter] failed to insert into {db_path}: {e}")
        return False


def emit_record(record: Mapping[str, Any], *, db_path: pathlib.Path) -> bool:
    return emit_records([record], db_path=db_path)
