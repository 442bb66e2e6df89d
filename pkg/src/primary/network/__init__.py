"""
Detector graph, dense and sigma-delta execution, and detection decoding
"""

from src.primary.network.config import HeadSpec, LayerSpec, NetworkConfig, default_config, load_config, parse_config
from src.primary.network.detect import Detection, box_iou, decode_detections, nms
from src.primary.network.detector import (
    Detector,
    ann_forward,
    build_detector,
    quantize_detector,
    random_weights,
)
from src.primary.network.events import EventStats, LayerStats
from src.primary.network.macs import count_macs, total_macs
from src.primary.network.sdnn import Sdnn, convert_to_sdnn, sdnn_step

__all__ = [
    "HeadSpec", "LayerSpec", "NetworkConfig", "default_config", "load_config", "parse_config",
    "Detection", "box_iou", "decode_detections", "nms",
    "Detector", "ann_forward", "build_detector", "quantize_detector", "random_weights",
    "EventStats", "LayerStats", "count_macs", "total_macs",
    "Sdnn", "convert_to_sdnn", "sdnn_step",
]
