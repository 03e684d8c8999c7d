"""
Logger Setup Script
File: utils/utils_logger.py

One loguru logger for the whole tracker, configured at import.

Features:
- Logs to a rotating file (logs/tracker_log.log) and to stderr.
- LOG_LEVEL and LOG_FOLDER environment variables set level and folder.
- Sanitizes messages to remove personal/identifying information
  (user name, home directory, working directory).
"""

#####################################
# Import Modules
#####################################

# Imports from Python Standard Library
import getpass
import os
import pathlib
import sys
from typing import Any, Mapping

# Imports from external packages
from loguru import logger

#####################################
# Default Configurations
#####################################

# Set directory where logs will be stored
LOG_FOLDER: pathlib.Path = pathlib.Path(os.getenv("LOG_FOLDER", "logs"))

# Set the name of the log file
LOG_FILE: pathlib.Path = LOG_FOLDER.joinpath("tracker_log.log")

LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()

#####################################
# Helper Functions
#####################################


def sanitize_message(record: Mapping[str, Any]) -> str:
    """Remove personal/identifying information from log messages and escape braces."""
    message = record["message"]

    try:
        message = message.replace(getpass.getuser(), "USER")
    except Exception:
        pass

    # working directory first; it usually sits below home
    try:
        message = message.replace(str(pathlib.Path.cwd()), "PROJECT_ROOT")
    except Exception:
        pass

    try:
        message = message.replace(str(pathlib.Path.home()), "~")
    except Exception:
        pass

    message = message.replace("\\", "/")

    # Escape braces so loguru's formatter won't treat them as fields
    return message.replace("{", "{{").replace("}", "}}")


def format_sanitized(record: Mapping[str, Any]) -> str:
    """Formatter returning `time | level | module | message`."""
    message = sanitize_message(record)
    time_str = record["time"].strftime("%Y-%m-%d %H:%M:%S")
    level_name = record["level"].name
    return f"{time_str} | {level_name} | {record['name']} | {message}\n"


try:
    LOG_FOLDER.mkdir(parents=True, exist_ok=True)
except Exception as e:
    print(f"Error creating log folder: {e}", file=sys.stderr)

try:
    logger.remove()
    logger.add(
        LOG_FILE,
        level=LOG_LEVEL,
        rotation="50 kB",
        retention=1,
        compression=None,
        enqueue=True,
        format=format_sanitized,
    )
    logger.add(
        sys.stderr,
        level=LOG_LEVEL,
        enqueue=True,
        format=format_sanitized,
    )
    logger.debug(f"Logging to file: {LOG_FILE} at level {LOG_LEVEL}")
except Exception as e:
    logger.error(f"Error configuring logger to write to file: {e}")
