"""
Config Utility
File: utils/utils_config.py

Configuration functions for the tracker.

Environment variables come from .env in the project root; each getter
reads one variable, falls back to a default, logs the value and returns it.
Tracker parameters and object blocks live in a JSON file (see
data/tracker_config.json), loaded with load_json_config. Relative paths
inside it resolve against the directory of the file (get_config_dir).

If you rename any variables in .env, remember to:
- update .env.example
- update the corresponding function in this module.
"""

#####################################
# Imports
#####################################

# import from Python Standard Library
import json
import os
import pathlib

# import from external packages
from dotenv import load_dotenv

# import from local modules
from tracking.errors import ConfigError
from .utils_logger import logger

#####################################
# Load Environment Variables
#####################################

load_dotenv()

PROJECT_ROOT = pathlib.Path(__file__).parent.parent
REPORT_SINKS = ("csv", "jsonl", "sqlite", "duckdb")

#####################################
# Getter Functions for .env Variables
#####################################


def get_base_data_path() -> pathlib.Path:
    """Fetch BASE_DATA_DIR from environment or use default."""
    data_dir = PROJECT_ROOT / os.getenv("BASE_DATA_DIR", "data")
    logger.debug(f"BASE_DATA_DIR: {data_dir}")
    return data_dir


def get_model_cache_path() -> pathlib.Path:
    """Fetch MODEL_CACHE_DIR from environment or use default."""
    cache_dir = PROJECT_ROOT / os.getenv("MODEL_CACHE_DIR", "data/models")
    logger.debug(f"MODEL_CACHE_DIR: {cache_dir}")
    return cache_dir


def get_tracker_config_path() -> pathlib.Path:
    """Fetch TRACKER_CONFIG_FILE from environment or use default."""
    config_path = get_base_data_path() / os.getenv("TRACKER_CONFIG_FILE", "tracker_config.json")
    logger.debug(f"TRACKER_CONFIG_FILE: {config_path}")
    return config_path


def get_results_path() -> pathlib.Path:
    """Fetch RESULTS_DIR from environment or use default."""
    results_dir = PROJECT_ROOT / os.getenv("RESULTS_DIR", "data/results")
    logger.debug(f"RESULTS_DIR: {results_dir}")
    return results_dir


def get_sqlite_path() -> pathlib.Path:
    """Fetch SQLITE_DB_FILE_NAME from environment or use default."""
    sqlite_path = get_results_path() / os.getenv("SQLITE_DB_FILE_NAME", "tracking_results.sqlite")
    logger.debug(f"SQLITE_PATH: {sqlite_path}")
    return sqlite_path


def get_duckdb_path() -> pathlib.Path:
    """Fetch DUCKDB_FILE_NAME from environment or use default."""
    duckdb_path = get_results_path() / os.getenv("DUCKDB_FILE_NAME", "tracking_results.duckdb")
    logger.debug(f"DUCKDB_PATH: {duckdb_path}")
    return duckdb_path


def get_report_sink() -> str:
    """Fetch REPORT_SINK (csv | jsonl | sqlite | duckdb) from environment or use default."""
    sink = os.getenv("REPORT_SINK", "csv").lower()
    if sink not in REPORT_SINKS:
        logger.error(f"REPORT_SINK must be one of {REPORT_SINKS}, got {sink!r}")
        raise ConfigError(f"REPORT_SINK must be one of {REPORT_SINKS}, got {sink!r}")
    logger.debug(f"REPORT_SINK: {sink}")
    return sink


def get_jobs_as_int() -> int:
    """Fetch TRACKER_JOBS from environment or use default."""
    jobs = int(os.getenv("TRACKER_JOBS", 1))
    logger.debug(f"TRACKER_JOBS: {jobs}")
    return max(jobs, 1)


def get_rng_seed_as_int() -> int:
    """Fetch TRACKER_SEED from environment or use default."""
    seed = int(os.getenv("TRACKER_SEED", 0))
    logger.debug(f"TRACKER_SEED: {seed}")
    return seed


#####################################
# JSON Configuration
#####################################


def load_json_config(path: pathlib.Path | str | None = None) -> dict:
    """
    Read the tracker JSON configuration.

    An explicit path that does not exist raises ConfigError. A missing
    default file yields an empty dict (all defaults) with a warning.
    Malformed JSON raises ConfigError.
    """
    if path is not None:
        path = pathlib.Path(path)
        if not path.is_file():
            logger.error(f"Config file {path} not found")
            raise ConfigError(f"config file {path} not found")
    else:
        path = get_tracker_config_path()
        if not path.is_file():
            logger.warning(f"Config file {path} not found, using defaults")
            return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        logger.error(f"Config file {path} is not valid JSON: {e}")
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object at the top level")
    logger.info(f"Loaded tracker config from {path}")
    return data


def get_config_dir(path: pathlib.Path | str | None = None) -> pathlib.Path:
    """Directory that relative paths inside the JSON configuration resolve against."""
    path = pathlib.Path(path) if path is not None else get_tracker_config_path()
    return path.resolve().parent
