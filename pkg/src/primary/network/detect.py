#!/usr/bin/env python3
"""
YOLO-style head decoding and non-maximum suppression
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import expit

from src.primary.errors import ShapeMismatchError
from src.primary.network.config import HeadSpec

# exp() argument bound for box sizes; keeps x1 < x2 representable
SIZE_LOGIT_LIMIT = 20.0


@dataclass(frozen=True)
class Detection:
    box: Tuple[float, float, float, float]
    class_id: int
    confidence: float

    def __post_init__(self):
        x1, y1, x2, y2 = self.box
        if not (x1 < x2 and y1 < y2):
            raise ValueError(f"degenerate detection box {self.box}")

    def to_dict(self):
        return {"box": [float(v) for v in self.box], "class_id": int(self.class_id),
                "confidence": float(self.confidence)}


def box_iou(a: Sequence[float], b: Sequence[float]) -> float:
    ix1, iy1 = max(a[0], b[0]), max(a[1], b[1])
    ix2, iy2 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def nms(detections: List[Detection], iou_threshold: float = 0.5) -> List[Detection]:
    """Greedy per-class suppression; sorted by confidence, stable on ties."""
    ordered = sorted(detections, key=lambda d: -d.confidence)
    kept: List[Detection] = []
    for candidate in ordered:
        if all(k.class_id != candidate.class_id or box_iou(k.box, candidate.box) <= iou_threshold for k in kept):
            kept.append(candidate)
    return kept


def decode_detections(head: np.ndarray, head_spec: HeadSpec, conf_thresh: float,
                      nms_iou: float = 0.5, input_size: int = 448) -> List[Detection]:
    """
    Decode a [anchors*(5+C), G, G] head into boxes on the input canvas.

    Per cell and anchor: centre = (cell + sigmoid(tx, ty)) * stride, size =
    anchor * exp(tw, th), confidence = sigmoid(obj) * sigmoid(best class logit).
    """
    n_anchors = len(head_spec.anchors)
    per_anchor = 5 + head_spec.classes
    if head.ndim != 3 or head.shape[0] != n_anchors * per_anchor or head.shape[1] != head.shape[2]:
        raise ShapeMismatchError(f"head shape {head.shape} does not match {n_anchors} anchors x {per_anchor}")
    grid = head.shape[1]
    stride = input_size / grid
    values = np.asarray(head, dtype=np.float64).reshape(n_anchors, per_anchor, grid, grid)

    cols = np.arange(grid, dtype=np.float64)[None, :]
    rows = np.arange(grid, dtype=np.float64)[:, None]
    found: List[Detection] = []
    for a, (anchor_w, anchor_h) in enumerate(head_spec.anchors):
        tx, ty, tw, th, obj = values[a, :5]
        class_logits = values[a, 5:]
        best_class = np.argmax(class_logits, axis=0)
        best_logit = np.take_along_axis(class_logits, best_class[None], axis=0)[0]
        confidence = expit(obj) * expit(best_logit)
        cx = (cols + expit(tx)) * stride
        cy = (rows + expit(ty)) * stride
        w = anchor_w * np.exp(np.clip(tw, -SIZE_LOGIT_LIMIT, SIZE_LOGIT_LIMIT))
        h = anchor_h * np.exp(np.clip(th, -SIZE_LOGIT_LIMIT, SIZE_LOGIT_LIMIT))
        for r, c in zip(*np.nonzero(confidence > conf_thresh)):
            box = (cx[r, c] - w[r, c] / 2, cy[r, c] - h[r, c] / 2, cx[r, c] + w[r, c] / 2, cy[r, c] + h[r, c] / 2)
            found.append(Detection(box=tuple(float(v) for v in box), class_id=int(best_class[r, c]),
                                   confidence=float(confidence[r, c])))
    return nms(found, nms_iou)
