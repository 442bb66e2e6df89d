#!/usr/bin/env python3
"""
Mask and detection quality: region mIoU, mAP@0.5 and frame sparsity
"""

from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.primary.errors import ShapeMismatchError
from src.primary.masking.regions import RegionMask
from src.primary.network.detect import Detection, box_iou

MaskLike = Union[RegionMask, np.ndarray]


def _grid(mask: MaskLike) -> np.ndarray:
    return mask.grid if isinstance(mask, RegionMask) else np.asarray(mask, dtype=bool)


def mask_iou(pred: MaskLike, gt: MaskLike) -> float:
    """|pred and gt| / |pred or gt|; 1.0 when both are empty."""
    p, g = _grid(pred), _grid(gt)
    if p.shape != g.shape:
        raise ShapeMismatchError(f"mask shapes {p.shape} and {g.shape} differ")
    union = int(np.count_nonzero(p | g))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(p & g)) / union


def miou(pred: Union[MaskLike, Sequence[MaskLike]], gt: Union[MaskLike, Sequence[MaskLike]]) -> float:
    """Mean over frames of the per-frame region IoU."""
    if isinstance(pred, (RegionMask, np.ndarray)):
        return mask_iou(pred, gt)
    if len(pred) != len(gt):
        raise ShapeMismatchError(f"{len(pred)} predicted masks for {len(gt)} ground-truth grids")
    if not pred:
        raise ShapeMismatchError("miou needs at least one frame")
    return sum(mask_iou(p, g) for p, g in zip(pred, gt)) / len(pred)


def frame_sparsity(mask: MaskLike) -> float:
    """Fraction of skipped regions."""
    grid = _grid(mask)
    return 1.0 - np.count_nonzero(grid) / grid.size


def _as_detection(item) -> Detection:
    if isinstance(item, Detection):
        return item
    box, class_id, confidence = item
    return Detection(box=tuple(box), class_id=int(class_id), confidence=float(confidence))


def average_precision(recall: Sequence[float], precision: Sequence[float]) -> float:
    """Area under the precision envelope, interpolated at every recall point."""
    mrec = np.concatenate([[0.0], np.asarray(recall, dtype=np.float64), [1.0]])
    mpre = np.concatenate([[0.0], np.asarray(precision, dtype=np.float64), [0.0]])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def map50(detections: Sequence[Sequence], gt_boxes: Sequence[Sequence[Sequence[float]]],
          iou_threshold: float = 0.5) -> Optional[float]:
    """
    Mean over classes with ground truth of the all-point-interpolated AP.

    detections: per frame, Detection objects or (box, class_id, confidence)
    gt_boxes: per frame, [x1, y1, x2, y2, class_id] rows
    Returns None when no frame has any ground truth.
    """
    if len(detections) != len(gt_boxes):
        raise ShapeMismatchError(f"{len(detections)} detection lists for {len(gt_boxes)} frames")

    gt_by_class: Dict[int, Dict[int, List[Tuple[float, ...]]]] = {}
    for frame, boxes in enumerate(gt_boxes):
        for row in boxes:
            gt_by_class.setdefault(int(row[4]), {}).setdefault(frame, []).append(tuple(row[:4]))
    if not gt_by_class:
        return None

    aps = []
    for class_id in sorted(gt_by_class):
        frames_gt = gt_by_class[class_id]
        n_gt = sum(len(boxes) for boxes in frames_gt.values())
        candidates = []
        for frame, items in enumerate(detections):
            for item in items:
                det = _as_detection(item)
                if det.class_id == class_id:
                    candidates.append((frame, det))
        # stable: equal confidences keep insertion order
        candidates.sort(key=lambda fd: -fd[1].confidence)

        matched = {frame: [False] * len(boxes) for frame, boxes in frames_gt.items()}
        tp, fp = 0, 0
        recall, precision = [], []
        for frame, det in candidates:
            best_iou, best_index = 0.0, -1
            for index, gt in enumerate(frames_gt.get(frame, [])):
                if matched[frame][index]:
                    continue
                iou = box_iou(det.box, gt)
                if iou > best_iou:
                    best_iou, best_index = iou, index
            if best_index >= 0 and best_iou >= iou_threshold:
                matched[frame][best_index] = True
                tp += 1
            else:
                fp += 1
            recall.append(tp / n_gt)
            precision.append(tp / (tp + fp))
        aps.append(average_precision(recall, precision) if candidates else 0.0)
    return float(np.mean(aps))
