#!/usr/bin/env python3
"""
Region grids: heatmaps, static top-k masks, dynamic thresholded masks,
their union, and applying a mask to a frame
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from src.primary.errors import ConfigurationError, ShapeMismatchError
from src.primary.tensor_engine import LetterboxTransform


@dataclass(frozen=True)
class Heatmap:
    """Per-pixel count of training images whose boxes cover the pixel."""

    values: np.ndarray
    images: int = 0


@dataclass(frozen=True)
class RegionScores:
    scores: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.scores)):
            raise ConfigurationError("region scores must be finite")

    @property
    def shape(self):
        return self.scores.shape


@dataclass(frozen=True)
class RegionMask:
    """Keep (True) / skip (False) flag per p x p region."""

    grid: np.ndarray
    region_size: int = 16

    def __post_init__(self):
        if self.region_size <= 0:
            raise ConfigurationError(f"region size must be positive, got {self.region_size}")
        if self.grid.ndim != 2:
            raise ShapeMismatchError(f"region grid must be 2-D, got shape {self.grid.shape}")
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=bool))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.grid.shape

    @property
    def extent(self) -> Tuple[int, int]:
        """Pixel extent (H, W) the grid covers."""
        return self.grid.shape[0] * self.region_size, self.grid.shape[1] * self.region_size

    @property
    def kept(self) -> int:
        return int(np.count_nonzero(self.grid))

    @classmethod
    def full(cls, extent: int = 448, region_size: int = 16, keep: bool = True) -> "RegionMask":
        if extent % region_size:
            raise ConfigurationError(f"region size {region_size} does not divide extent {extent}")
        n = extent // region_size
        return cls(grid=np.full((n, n), keep, dtype=bool), region_size=region_size)

    def pixel_mask(self) -> np.ndarray:
        """Boolean [H, W] map with each region's flag repeated over its pixels."""
        p = self.region_size
        return np.repeat(np.repeat(self.grid, p, axis=0), p, axis=1)


def _covered_span(lo: float, hi: float, cell: int, count: int) -> Optional[Tuple[int, int]]:
    """Indices of cells [i*cell, (i+1)*cell) that overlap [lo, hi) with positive length."""
    lo = max(lo, 0.0)
    hi = min(hi, float(cell * count))
    if not hi > lo:
        return None
    first = int(math.floor(lo / cell))
    last = int(math.ceil(hi / cell)) - 1
    return first, min(last, count - 1)


def _rasterize(boxes: Iterable[Sequence[float]], rows: int, cols: int, cell: int) -> np.ndarray:
    grid = np.zeros((rows, cols), dtype=bool)
    for box in boxes:
        x1, y1, x2, y2 = (float(v) for v in box[:4])
        ys = _covered_span(y1, y2, cell, rows)
        xs = _covered_span(x1, x2, cell, cols)
        if ys is None or xs is None:
            continue
        grid[ys[0]:ys[1] + 1, xs[0]:xs[1] + 1] = True
    return grid


def build_heatmap(annotations: Iterable[Iterable[Sequence[float]]], H: int, W: int) -> Heatmap:
    """
    Sum over images of the binary "inside any box" map.

    Boxes are [x1, y1, x2, y2, ...] in pixel coordinates; a pixel counts as
    inside when its unit square overlaps the box with positive area. Boxes
    are clipped to the image and zero-area boxes are ignored.
    """
    values = np.zeros((H, W), dtype=np.int32)
    images = 0
    for boxes in annotations:
        values += _rasterize(boxes, H, W, 1)
        images += 1
    return Heatmap(values=values, images=images)


def aggregate_regions(h: Heatmap, p: int) -> RegionScores:
    """Sum the heatmap over each p x p block."""
    rows, cols = h.values.shape
    if p <= 0 or rows % p or cols % p:
        raise ConfigurationError(f"region size {p} does not divide heatmap extent {rows}x{cols}")
    blocks = h.values.astype(np.int64).reshape(rows // p, p, cols // p, p).sum(axis=(1, 3))
    return RegionScores(scores=blocks.astype(np.float64))


def keep_count(k_s: float, total: int) -> int:
    """round-half-up(k_s * total) clamped to [1, total]."""
    return int(min(max(math.floor(k_s * total + 0.5), 1), total))


def keep_rate_for_sparsity(sparsity: float) -> float:
    """Static keep rate that produces the given frame sparsity."""
    if not 0.0 <= sparsity < 1.0:
        raise ConfigurationError(f"target sparsity must lie in [0, 1), got {sparsity}")
    return 1.0 - sparsity


def static_topk(scores: RegionScores, k_s: float, region_size: int = 16) -> RegionMask:
    """Keep the round(k_s * R) best regions; equal scores go to the lower row-major index."""
    if not 0.0 < k_s <= 1.0:
        raise ConfigurationError(f"k_s must lie in (0, 1], got {k_s}")
    flat = scores.scores.reshape(-1)
    keep = keep_count(k_s, flat.size)
    order = np.argsort(-flat, kind="stable")
    grid = np.zeros(flat.size, dtype=bool)
    grid[order[:keep]] = True
    return RegionMask(grid=grid.reshape(scores.shape), region_size=region_size)


def dynamic_mask(logits: RegionScores, t_reg: float, region_size: int = 16) -> RegionMask:
    """Keep regions whose sigmoid(logit) reaches t_reg."""
    return RegionMask(grid=expit(logits.scores) >= t_reg, region_size=region_size)


def rescale_mask(mask: RegionMask, extent: int) -> RegionMask:
    """
    Express a mask on a canvas of a different size with the same region size.

    Going from 224 to 448 with p = 16, each 14x14 cell becomes a 2x2 block
    of the 28x28 grid.
    """
    rows, cols = mask.shape
    current = mask.extent[0]
    if mask.extent[0] != mask.extent[1]:
        raise ShapeMismatchError(f"only square masks can be rescaled, got extent {mask.extent}")
    if extent == current:
        return mask
    target_cells = extent // mask.region_size
    if extent % mask.region_size or target_cells % rows:
        raise ShapeMismatchError(f"cannot map a {rows}x{cols} grid onto extent {extent}")
    factor = target_cells // rows
    grid = np.repeat(np.repeat(mask.grid, factor, axis=0), factor, axis=1)
    return RegionMask(grid=grid, region_size=mask.region_size)


def combine(stat: RegionMask, dyn: RegionMask) -> RegionMask:
    """Union of two masks on the same grid."""
    if stat.shape != dyn.shape or stat.region_size != dyn.region_size:
        raise ShapeMismatchError(
            f"cannot combine masks {stat.shape}/p={stat.region_size} and {dyn.shape}/p={dyn.region_size}"
        )
    return RegionMask(grid=np.logical_or(stat.grid, dyn.grid), region_size=stat.region_size)


def apply_mask(frame: np.ndarray, mask: RegionMask) -> np.ndarray:
    """Zero every pixel of a skipped region; kept regions are copied unchanged."""
    if frame.ndim != 3 or tuple(frame.shape[1:]) != mask.extent:
        raise ShapeMismatchError(f"frame shape {frame.shape} does not match mask extent {mask.extent}")
    return np.where(mask.pixel_mask()[None, :, :], frame, np.zeros((), dtype=frame.dtype))


def region_labels(boxes: Iterable[Sequence[float]], grid_shape: Tuple[int, int], p: int,
                  transform: Optional[LetterboxTransform] = None) -> np.ndarray:
    """True for every region whose pixels overlap a (transformed) box with positive area."""
    mapped = [transform.to_canvas(box) if transform is not None else tuple(box[:4]) for box in boxes]
    return _rasterize(mapped, grid_shape[0], grid_shape[1], p)
