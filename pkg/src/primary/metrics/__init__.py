"""
Cost model (energy, latency, EDP, GOPS/W), quality evaluators and calibration
"""

from src.primary.metrics.calibrate import CalibrationResult, Observation, calibrate, default_coefficients
from src.primary.metrics.cost import (
    CostCoefficients,
    CostReport,
    Improvement,
    build_cost_report,
    edp,
    energy,
    event_rate,
    gops_per_watt,
    improvement,
    latency,
    load_coefficients,
    throughput,
)
from src.primary.metrics.quality import average_precision, frame_sparsity, map50, mask_iou, miou

__all__ = [
    "CalibrationResult", "Observation", "calibrate", "default_coefficients",
    "CostCoefficients", "CostReport", "Improvement", "build_cost_report", "edp", "energy",
    "event_rate", "gops_per_watt", "improvement", "latency", "load_coefficients", "throughput",
    "average_precision", "frame_sparsity", "map50", "mask_iou", "miou",
]
