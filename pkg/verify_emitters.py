"""
verify_emitters.py

Quick manual check that each report sink accepts a frame record.

Usage:
  py -m verify_emitters
"""

import pathlib
from typing import Any

from utils.emitters import emit_to_sink
from utils.emitters.records import FRAME_RESULT_COLUMNS


def main() -> None:
    """Write one demo frame record to every sink under data/demo."""
    record: dict[str, Any] = {
        "run_id": "demo",
        "sequence": "cube_regular",
        "frame": 1,
        "success": True,
        "e_t": 0.0012,
        "e_r": 0.004,
        "e_v": 0.0015,
        "reinit": False,
        "valid_lines": 180,
        "step_ms": 1.3,
    }
    assert set(record) == set(FRAME_RESULT_COLUMNS)

    out_dir = pathlib.Path("data/demo")
    for sink in ("csv", "jsonl", "sqlite", "duckdb"):
        ok = emit_to_sink([record], sink, out_dir)
        print(f"[{sink}] {'wrote 1 record' if ok else 'FAILED'} under {out_dir} (table/file: frame_results)")


if __name__ == "__main__":
    main()
