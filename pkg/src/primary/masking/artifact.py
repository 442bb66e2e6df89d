#!/usr/bin/env python3
"""
Static mask artifact: a P5 image of the region grid (0 = skip, 255 = keep)
next to a JSON sidecar {p, k_s, source_manifest}
"""

import pathlib
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.primary.errors import ConfigurationError
from src.primary.masking.regions import RegionMask
from src.primary.pipeline.imageio import read_pgm, write_pgm
from src.primary.stats_manager import load_json, write_json_atomic
from src.primary.utils.logger import get_logger

logger = get_logger("masking")


def sidecar_path(path) -> pathlib.Path:
    return pathlib.Path(path).with_suffix(".json")


def save_static_mask(path, mask: RegionMask, k_s: float, source_manifest: Optional[str] = None) -> pathlib.Path:
    path = pathlib.Path(path)
    write_pgm(path, np.where(mask.grid, 255, 0).astype(np.uint8))
    write_json_atomic(sidecar_path(path), {
        "p": mask.region_size,
        "k_s": k_s,
        "source_manifest": source_manifest,
    })
    logger.info(f"Wrote static mask {path}: {mask.kept}/{mask.grid.size} regions kept")
    return path


def load_static_mask(path) -> Tuple[RegionMask, Dict[str, Any]]:
    """Read a static mask artifact; pixel values other than 0 and 255 are rejected."""
    path = pathlib.Path(path)
    pixels = read_pgm(path)
    if not np.all((pixels == 0) | (pixels == 255)):
        raise ConfigurationError(f"static mask {path} holds values other than 0 and 255")
    meta = load_json(sidecar_path(path), default=None)
    if meta is None:
        raise ConfigurationError(f"static mask {path} has no readable sidecar {sidecar_path(path)}")
    if "p" not in meta:
        raise ConfigurationError(f"static mask sidecar {sidecar_path(path)} lacks the region size 'p'")
    return RegionMask(grid=pixels == 255, region_size=int(meta["p"])), meta
