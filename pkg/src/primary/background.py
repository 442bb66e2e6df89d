#!/usr/bin/env python3
"""
Background execution for SDMASK
Fans sequences out to worker threads and runs whole pipeline jobs in the
background for the report server
"""

import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

from src.primary.errors import SdmaskError
from src.primary.utils.logger import get_logger

logger = get_logger("pipeline")

T = TypeVar("T")
R = TypeVar("R")

# Global state for managing background run threads and their status
run_threads: Dict[str, threading.Thread] = {}
run_status: Dict[str, Dict[str, Any]] = {}
status_lock = threading.Lock()
stop_event = threading.Event()  # Use an event for clearer stop signaling


class RunCancelledError(SdmaskError):
    """The run was stopped before all sequences were processed."""


class RunInProgressError(SdmaskError):
    """Another background run has not finished yet."""


def map_sequences(worker: Callable[[int, T], R], items: Sequence[T], jobs: int = 1) -> List[R]:
    """
    Apply worker(position, item) to every item and return results in item
    order. Within one item the worker runs serially; items run on up to
    `jobs` threads.
    """

    def guarded(position: int, item: T) -> R:
        if stop_event.is_set():
            raise RunCancelledError("run cancelled before all sequences were processed")
        return worker(position, item)

    if jobs <= 1 or len(items) <= 1:
        return [guarded(position, item) for position, item in enumerate(items)]

    with ThreadPoolExecutor(max_workers=jobs, thread_name_prefix="sequence") as pool:
        futures = [pool.submit(guarded, position, item) for position, item in enumerate(items)]
        # result() re-raises the first failure in item order
        return [future.result() for future in futures]


def _set_status(run_id: str, **fields) -> None:
    with status_lock:
        run_status.setdefault(run_id, {}).update(fields)


def get_run_status(run_id: str) -> Optional[Dict[str, Any]]:
    with status_lock:
        status = run_status.get(run_id)
        return dict(status) if status is not None else None


def _run_wrapper(run_id: str, target: Callable[[], Any], on_finish: Optional[Callable[[str, str, Optional[str]], Any]]):
    _set_status(run_id, status="running")
    error = None
    try:
        target()
        status = "ok"
    except Exception as e:
        status = "failed"
        error = str(e)
        logger.error(f"Background run {run_id} failed: {e}", exc_info=not isinstance(e, SdmaskError))
    _set_status(run_id, status=status, error=error)
    if on_finish is not None:
        try:
            on_finish(run_id, status, error)
        except Exception as e:
            logger.error(f"Error finishing background run {run_id}: {e}", exc_info=True)


def active_run() -> Optional[str]:
    """Id of the background run still in progress, if any."""
    with status_lock:
        for run_id, thread in run_threads.items():
            if thread.is_alive():
                return run_id
    return None


def start_background_run(run_id: str, target: Callable[[], Any],
                         on_finish: Optional[Callable[[str, str, Optional[str]], Any]] = None) -> threading.Thread:
    """Start target() on a daemon thread registered under run_id; one run at a time."""
    with status_lock:
        for active_id, existing in run_threads.items():
            if existing.is_alive():
                raise RunInProgressError(f"run {active_id} is already in progress")
        thread = threading.Thread(
            target=_run_wrapper,
            args=(run_id, target, on_finish),
            name=f"run-{run_id}",
            daemon=True,
        )
        run_threads[run_id] = thread
        run_status[run_id] = {"status": "queued", "error": None}
        logger.info(f"Starting background run {run_id}...")
        thread.start()
    return thread


def shutdown_handler(signum, frame):
    """Handle termination signals (SIGINT, SIGTERM)."""
    logger.info(f"Received signal {signum}. Initiating shutdown...")
    stop_event.set()  # Signal all threads to stop


def shutdown_threads(timeout: float = 10.0):
    """Wait for background runs to finish."""
    logger.info("Waiting for background runs to stop...")
    for run_id, thread in list(run_threads.items()):
        if thread.is_alive():
            thread.join(timeout=timeout)
            if thread.is_alive():
                logger.warning(f"Background run {run_id} did not stop gracefully")
    logger.info("All background runs stopped.")
