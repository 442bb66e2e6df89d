#!/usr/bin/env python3
"""
Per-frame image dumps: input, masked input and the delta-encoded input
"""

import pathlib
from typing import Dict

from src.primary.errors import UnknownFrameError
from src.primary.pipeline.imageio import write_pgm, write_ppm
from src.primary.pipeline.runner import RunResult
from src.primary.utils.logger import get_logger

logger = get_logger("pipeline")


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in name)


def dump_delta(result: RunResult, seq_id: str, frame_index: int, out_dir) -> Dict[str, pathlib.Path]:
    """Write <seq>_<frame>_{input.ppm, masked.ppm, delta.pgm} for a retained frame."""
    buffer = result.dumps.get((str(seq_id), int(frame_index)))
    if buffer is None:
        raise UnknownFrameError(f"frame {frame_index} of sequence {seq_id!r} was not retained by the run")
    out_dir = pathlib.Path(out_dir)
    stem = f"{_safe(str(seq_id))}_{int(frame_index):06d}"
    paths = {
        "input": out_dir / f"{stem}_input.ppm",
        "masked": out_dir / f"{stem}_masked.ppm",
        "delta": out_dir / f"{stem}_delta.pgm",
    }
    write_ppm(paths["input"], buffer.input)
    write_ppm(paths["masked"], buffer.masked)
    write_pgm(paths["delta"], buffer.delta)
    logger.info(f"Dumped frame {frame_index} of {seq_id} to {out_dir}")
    return paths
