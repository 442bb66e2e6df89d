#!/usr/bin/env python3
"""
JSON-Lines dataset manifest ingestion

One record per line:
  {"seq_id": str, "frame_index": int, "image_path": str, "split": "train"|"val",
   "boxes": [[x1, y1, x2, y2, class_id], ...]}
Relative image paths resolve against the manifest's directory.
"""

import json
import pathlib
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.primary.errors import ManifestError
from src.primary.pipeline.imageio import read_ppm
from src.primary.utils.logger import get_logger

logger = get_logger("pipeline")

SPLITS = ("train", "val")

Box = Tuple[float, float, float, float, int]


@dataclass(frozen=True)
class FrameRecord:
    seq_id: str
    frame_index: int
    image_path: pathlib.Path
    split: str
    boxes: Tuple[Box, ...] = ()
    line_number: int = 0

    def load_image(self) -> np.ndarray:
        """float32 [3, H, W] in [0, 1]."""
        return read_ppm(self.image_path)


@dataclass
class Sequence:
    seq_id: str
    frames: List[FrameRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)


def _parse_boxes(raw, line_number: int, seq_id: str) -> Tuple[Box, ...]:
    if not isinstance(raw, list):
        raise ManifestError("boxes must be a list", line_number=line_number, seq_id=seq_id)
    boxes = []
    for item in raw:
        if not isinstance(item, list) or len(item) != 5:
            raise ManifestError(f"box {item!r} is not [x1, y1, x2, y2, class_id]", line_number=line_number, seq_id=seq_id)
        try:
            x1, y1, x2, y2 = (float(v) for v in item[:4])
            class_id = int(item[4])
        except (TypeError, ValueError) as e:
            raise ManifestError(f"box {item!r} is not numeric", line_number=line_number, seq_id=seq_id) from e
        boxes.append((x1, y1, x2, y2, class_id))
    return tuple(boxes)


def parse_record(line: str, line_number: int, base_dir: pathlib.Path) -> FrameRecord:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise ManifestError(f"malformed JSON: {e.msg}", line_number=line_number) from e
    if not isinstance(record, dict):
        raise ManifestError("record must be a JSON object", line_number=line_number)
    missing = [key for key in ("seq_id", "frame_index", "image_path") if key not in record]
    if missing:
        raise ManifestError(f"missing field(s) {', '.join(missing)}", line_number=line_number)

    seq_id = str(record["seq_id"])
    frame_index = record["frame_index"]
    if isinstance(frame_index, bool) or not isinstance(frame_index, int):
        raise ManifestError("frame_index must be an integer", line_number=line_number, seq_id=seq_id)
    split = record.get("split", "val")
    if split not in SPLITS:
        raise ManifestError(f"split must be one of {SPLITS}, got {split!r}", line_number=line_number, seq_id=seq_id)

    image_path = pathlib.Path(str(record["image_path"]))
    if not image_path.is_absolute():
        image_path = base_dir / image_path
    if not image_path.is_file():
        raise ManifestError("image file not found", line_number=line_number, seq_id=seq_id, path=image_path)

    return FrameRecord(
        seq_id=seq_id,
        frame_index=frame_index,
        image_path=image_path,
        split=split,
        boxes=_parse_boxes(record.get("boxes", []), line_number, seq_id),
        line_number=line_number,
    )


def load_manifest(path, split: Optional[str] = None) -> List[Sequence]:
    """
    Parse a manifest into sequences in order of first appearance, frames in
    frame_index order. Records of other splits are dropped when split is given.
    """
    path = pathlib.Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ManifestError(f"cannot read manifest: {e}", path=path) from e

    sequences: Dict[str, Sequence] = {}
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        record = parse_record(line, line_number, path.parent)
        sequence = sequences.setdefault(record.seq_id, Sequence(seq_id=record.seq_id))
        if sequence.frames and record.frame_index <= sequence.frames[-1].frame_index:
            raise ManifestError(
                f"frame_index {record.frame_index} does not increase after {sequence.frames[-1].frame_index}",
                line_number=line_number,
                seq_id=record.seq_id,
            )
        sequence.frames.append(record)

    result = []
    for sequence in sequences.values():
        if split is not None:
            sequence = Sequence(sequence.seq_id, [f for f in sequence.frames if f.split == split])
        if sequence.frames:
            result.append(sequence)
    logger.info(f"Manifest {path}: {len(result)} sequences, {sum(len(s) for s in result)} frames")
    return result


def ingest(path, split: Optional[str] = None) -> Iterator[Sequence]:
    """Iterate the manifest's sequences; the whole file is validated before the first one is yielded."""
    return iter(load_manifest(path, split=split))
