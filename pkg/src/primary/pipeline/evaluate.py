#!/usr/bin/env python3
"""
Stand-alone evaluators: mask mIoU over a manifest, and mAP@0.5 of a run's
detections.json against the manifest boxes
"""

from typing import Any, Dict, List, Optional

from src.primary.config import RunConfig
from src.primary.errors import ConfigurationError
from src.primary.metrics.quality import map50
from src.primary.network.config import NetworkConfig
from src.primary.network.detect import Detection
from src.primary.pipeline.imageio import image_size
from src.primary.pipeline.ingest import load_manifest
from src.primary.pipeline.runner import frame_mask, load_models, mask_miou
from src.primary.stats_manager import load_json
from src.primary.tensor_engine import letterbox, letterbox_transform
from src.primary.utils.logger import get_logger

logger = get_logger("pipeline")


def evaluate_miou(manifest, run_config: RunConfig, weights_path=None, split: Optional[str] = "val",
                  net: Optional[NetworkConfig] = None) -> Dict[str, Any]:
    """Mean per-frame IoU between the configured mask mode's keep grid and the box regions."""
    if run_config.mask_mode == "none":
        raise ConfigurationError("mIoU needs a mask mode other than 'none'")
    models = load_models(run_config, weights_path, net=net)
    values: List[float] = []
    for sequence in load_manifest(manifest, split=split):
        for record in sequence:
            canvas, transform = letterbox(record.load_image(), target=models.net.input_size)
            values.append(mask_miou(frame_mask(canvas, run_config, models), record.boxes, transform))
    value = sum(values) / len(values) if values else None
    logger.info(f"mIoU ({run_config.mask_mode}) over {len(values)} frames: {value}")
    return {"mask_mode": run_config.mask_mode, "frames": len(values), "miou": value}


def evaluate_map(manifest, detections_path, split: Optional[str] = "val", input_size: int = 448) -> Dict[str, Any]:
    """mAP@0.5 of saved detections (canvas coordinates) against the manifest's boxes."""
    saved = load_json(detections_path)
    if not isinstance(saved, list):
        raise ConfigurationError(f"{detections_path} is not a detections file")
    by_frame = {
        (str(entry["seq_id"]), int(entry["frame_index"])): [
            Detection(box=tuple(d["box"]), class_id=int(d["class_id"]), confidence=float(d["confidence"]))
            for d in entry["detections"]
        ]
        for entry in saved
    }
    detections, gt_boxes = [], []
    for sequence in load_manifest(manifest, split=split):
        for record in sequence:
            h, w = image_size(record.image_path)
            transform = letterbox_transform(h, w, input_size)
            detections.append(by_frame.get((record.seq_id, record.frame_index), []))
            gt_boxes.append([tuple(transform.to_canvas(box)) + (int(box[4]),) for box in record.boxes])
    value = map50(detections, gt_boxes)
    logger.info(f"mAP@0.5 over {len(detections)} frames: {value}")
    return {"frames": len(detections), "map50": value}
