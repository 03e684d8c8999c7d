"""
file_emitter.py

Emit per-frame evaluation records to a local file sink.

A file emitter is the simplest option:
- Always available, no database required.
- `.jsonl` paths get one JSON object per line.
- `.csv` paths get rows appended through pandas; the header is written
  when the file is new.

Use this when inspecting a run by hand or when plotting results.
"""

import json
import pathlib
from typing import Any, Iterable, Mapping

import pandas as pd

from utils.emitters.records import FRAME_RESULT_COLUMNS, as_dict
from utils.utils_logger import logger


def emit_records(records: Iterable[Mapping[str, Any]], *, path: pathlib.Path) -> bool:
    """
    Append records to a JSONL or CSV file (chosen by suffix).

    Returns:
        bool: True if the write succeeded, False otherwise.
    """
    try:
        rows = [as_dict(r) for r in records]
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == ".csv":
            frame = pd.DataFrame(rows, columns=list(FRAME_RESULT_COLUMNS))
            frame.to_csv(path, mode="a", header=not path.exists(), index=False)
        else:
            with path.open("a", encoding="utf-8") as f:
                for row in rows:
                    f.write(json.dumps(row) + "\n")
        logger.debug(f"[file_emitter] wrote {len(rows)} records to {path}")
        return True
    except Exception as e:
        logger.error(f"[file_emitter] write to {path} failed: {e}")
        return False


def emit_record(record: Mapping[str, Any], *, path: pathlib.Path) -> bool:
    """Append one record; see emit_records."""
    return emit_records([record], path=path)
