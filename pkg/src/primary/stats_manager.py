#!/usr/bin/env python3
"""
Statistics Manager for SDMASK
Collects per-frame event statistics from parallel sequence workers, reduces
them in a fixed order, and persists them as JSON
"""

import os
import json
import pathlib
import threading
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from src.primary.errors import OutputError
from src.primary.network.events import EventStats
from src.primary.utils.logger import get_logger

logger = get_logger("metrics")

FRAME_STATS_FILE = "frame_stats.json"

# Lock for thread-safe operations
stats_lock = threading.Lock()


def write_text_atomic(path, text: str) -> None:
    """Write through a temp file and rename; raises OutputError naming the path."""
    path = pathlib.Path(path)
    temp_file = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(temp_file, "w", newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(temp_file, path)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def write_json_atomic(path, data: Any) -> None:
    write_text_atomic(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def save_json(path, data: Any) -> bool:
    """Atomic JSON write that logs instead of raising."""
    try:
        write_json_atomic(path, data)
        logger.debug(f"Saved {path}")
        return True
    except OutputError as e:
        logger.error(f"Error saving {path}: {e}", exc_info=True)
        return False


def load_json(path, default: Any = None) -> Any:
    path = pathlib.Path(path)
    if not path.exists():
        return default
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error loading {path}: {e}")
        return default


class SequenceStatsCollector:
    """
    Thread-safe store of per-frame stats keyed by sequence position, so the
    reduction order is the manifest order whatever order workers finish in.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._by_sequence: Dict[int, List[EventStats]] = {}
        self._seq_ids: Dict[int, str] = {}

    def add(self, position: int, seq_id: str, frames: Sequence[EventStats]) -> None:
        with self._lock:
            self._by_sequence[position] = list(frames)
            self._seq_ids[position] = seq_id

    def sequences(self) -> List[List[EventStats]]:
        with self._lock:
            return [self._by_sequence[k] for k in sorted(self._by_sequence)]

    def seq_ids(self) -> List[str]:
        with self._lock:
            return [self._seq_ids[k] for k in sorted(self._seq_ids)]

    def frames(self) -> List[EventStats]:
        return [frame for sequence in self.sequences() for frame in sequence]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sequences": [
                {"seq_id": seq_id, "frames": [frame.to_dict() for frame in frames]}
                for seq_id, frames in zip(self.seq_ids(), self.sequences())
            ]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SequenceStatsCollector":
        collector = cls()
        for position, item in enumerate(data.get("sequences", [])):
            collector.add(position, item["seq_id"], [EventStats.from_dict(f) for f in item["frames"]])
        return collector


@dataclass
class LayerTotals:
    """One row of layers.csv."""

    name: str
    neurons: int
    events: int
    synops: int
    event_rate: float
    dense_macs: int


def aggregate_layers(frames: Sequence[EventStats]) -> List[LayerTotals]:
    """Run totals per layer, in layer order; event_rate is the per-frame mean."""
    from src.primary.metrics.cost import event_rate

    if not frames:
        return []
    rates = event_rate(frames)
    rows = []
    for index, first in enumerate(frames[0].layers):
        rows.append(LayerTotals(
            name=first.name,
            neurons=first.neurons,
            events=sum(frame.layers[index].events_out for frame in frames),
            synops=sum(frame.layers[index].synops for frame in frames),
            event_rate=rates[index],
            dense_macs=first.dense_macs,
        ))
    return rows


def save_frame_stats(out_dir, collector: SequenceStatsCollector) -> bool:
    with stats_lock:
        return save_json(pathlib.Path(out_dir) / FRAME_STATS_FILE, collector.to_dict())


def load_frame_stats(run_dir) -> Optional[SequenceStatsCollector]:
    data = load_json(pathlib.Path(run_dir) / FRAME_STATS_FILE)
    if data is None:
        logger.warning(f"No frame statistics found in {run_dir}")
        return None
    return SequenceStatsCollector.from_dict(data)
