#!/usr/bin/env python3
"""
Offline jobs on the train split: building the static mask artifact and
fitting the MGNet region head
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from src.primary.errors import ConfigurationError
from src.primary.masking.artifact import save_static_mask
from src.primary.masking.mgnet import MGNetConfig, has_mgnet, mgnet_features, params_from_tensors, random_params
from src.primary.masking.regions import RegionMask, aggregate_regions, build_heatmap, region_labels, static_topk
from src.primary.masking.train import HeadTrainingResult, train_region_head
from src.primary.pipeline.imageio import image_size
from src.primary.pipeline.ingest import load_manifest
from src.primary.tensor_engine import avg_downsample2x, letterbox, letterbox_transform
from src.primary.utils.logger import get_logger

logger = get_logger("masking")


def build_static_mask(manifest, k_s: float, region_size: int = 16, extent: int = 448, out=None) -> RegionMask:
    """
    Top-k regions of the train-split box heatmap on the letterboxed canvas;
    written as an artifact when `out` is given.
    """
    annotations = []
    for sequence in load_manifest(manifest, split="train"):
        for record in sequence:
            h, w = image_size(record.image_path)
            transform = letterbox_transform(h, w, extent)
            annotations.append([transform.to_canvas(box) for box in record.boxes])
    if not annotations:
        raise ConfigurationError(f"manifest {manifest} has no train-split frames to build a static mask from")
    heatmap = build_heatmap(annotations, extent, extent)
    mask = static_topk(aggregate_regions(heatmap, region_size), k_s, region_size)
    logger.info(f"Static mask from {heatmap.images} images keeps {mask.kept}/{mask.grid.size} regions")
    if out is not None:
        save_static_mask(out, mask, k_s, source_manifest=str(manifest))
    return mask


@dataclass
class HeadTrainingJob:
    result: HeadTrainingResult
    weights: Dict[str, np.ndarray]
    samples: int


def train_head(manifest, weights: Mapping[str, np.ndarray], epochs: int = 200, lr: float = 0.5, seed: int = 0,
               detector_input: int = 448, plateau_patience: Optional[int] = None,
               mgnet_config: Optional[MGNetConfig] = None) -> HeadTrainingJob:
    """Fit the region head on train-split frames with the rest of MGNet frozen."""
    cfg = mgnet_config or MGNetConfig.from_settings()
    params = params_from_tensors(weights, cfg) if has_mgnet(weights) else random_params(cfg, seed=seed)
    features, labels = [], []
    for sequence in load_manifest(manifest, split="train"):
        for record in sequence:
            canvas, transform = letterbox(record.load_image(), target=detector_input)
            features.append(mgnet_features(avg_downsample2x(canvas), params))
            small = transform.scaled(cfg.image_size / detector_input)
            labels.append(region_labels(record.boxes, (cfg.grid, cfg.grid), cfg.patch_size, small).reshape(-1))
    if not features:
        raise ConfigurationError(f"manifest {manifest} has no train-split frames to train on")

    result = train_region_head(
        np.stack(features), np.stack(labels), epochs=epochs, lr=lr, seed=seed,
        initial=(params.head_w, params.head_b), plateau_patience=plateau_patience,
    )
    updated = dict(weights)
    updated.update(params.with_head(result.weight, result.bias).to_tensors())
    return HeadTrainingJob(result=result, weights=updated, samples=len(features))
