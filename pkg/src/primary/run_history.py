#!/usr/bin/env python3
"""
Run history for SDMASK
A JSON index of pipeline runs kept in the output root, newest first
"""

import pathlib
import re
import threading
import time
from datetime import datetime
from typing import Any, Dict, List, Optional

from src.primary.stats_manager import load_json, save_json
from src.primary.utils.logger import get_logger

logger = get_logger("server")

HISTORY_FILE_NAME = "run_history.json"
RUN_ID_PATTERN = re.compile(r"^[A-Za-z0-9_.-]+$")

# Lock to prevent race conditions during file operations
history_lock = threading.Lock()


def get_history_file_path(out_root) -> pathlib.Path:
    return pathlib.Path(out_root) / HISTORY_FILE_NAME


def is_valid_run_id(run_id: str) -> bool:
    return bool(run_id) and bool(RUN_ID_PATTERN.match(run_id)) and run_id not in (".", "..")


def new_run_id() -> str:
    return datetime.now().strftime("%Y%m%d-%H%M%S-%f")


def _load(out_root) -> List[Dict[str, Any]]:
    history = load_json(get_history_file_path(out_root), default=[])
    if not isinstance(history, list):
        logger.error(f"Run history {get_history_file_path(out_root)} is corrupt; starting a new one")
        return []
    return history


def add_run_entry(out_root, run_id: str, mask_mode: str, out_dir) -> Optional[Dict[str, Any]]:
    """
    Add a new history entry

    Args:
        out_root: output root holding the history file
        run_id: unique run identifier (also the run's directory name)
        mask_mode: the run's mask mode
        out_dir: directory the run reports into

    Returns:
        The stored entry, or None when it could not be saved
    """
    if not is_valid_run_id(run_id):
        logger.error(f"Invalid run id: {run_id!r}")
        return None
    timestamp = int(time.time())
    entry = {
        "run_id": run_id,
        "started": timestamp,
        "started_readable": datetime.fromtimestamp(timestamp).strftime("%Y-%m-%d %H:%M:%S"),
        "finished": None,
        "status": "running",
        "mask_mode": mask_mode,
        "out_dir": str(out_dir),
    }
    with history_lock:
        history = _load(out_root)
        history.insert(0, entry)
        if not save_json(get_history_file_path(out_root), history):
            return None
    logger.info(f"Added run {run_id} ({mask_mode}) to history")
    return entry


def update_run_entry(out_root, run_id: str, status: str, error: Optional[str] = None) -> bool:
    with history_lock:
        history = _load(out_root)
        for entry in history:
            if entry.get("run_id") == run_id:
                entry["status"] = status
                entry["finished"] = int(time.time())
                if error is not None:
                    entry["error"] = error
                return save_json(get_history_file_path(out_root), history)
    logger.error(f"Run {run_id} not found in history")
    return False


def get_runs(out_root) -> List[Dict[str, Any]]:
    with history_lock:
        return _load(out_root)


def get_run(out_root, run_id: str) -> Optional[Dict[str, Any]]:
    for entry in get_runs(out_root):
        if entry.get("run_id") == run_id:
            return entry
    return None
