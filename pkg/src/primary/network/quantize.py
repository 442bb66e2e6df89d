#!/usr/bin/env python3
"""
Symmetric int8 quantization helpers for the detector's integer path
"""

import numpy as np

from src.primary.tensor_engine import INT8_MAX, INT32_MAX, INT32_MIN, QuantParams, quantize


def abs_max_scale(values: np.ndarray) -> float:
    """Per-tensor scale max|v|/127; 1.0 for an all-zero tensor."""
    peak = float(np.max(np.abs(values))) if np.size(values) else 0.0
    if peak == 0.0 or not np.isfinite(peak):
        return 1.0
    return peak / INT8_MAX


def quantize_weight(weight: np.ndarray):
    """Returns (int8 weight, weight scale)."""
    scale = abs_max_scale(weight)
    return quantize(weight, QuantParams(scale)), scale


def quantize_bias(bias: np.ndarray, input_scale: float, weight_scale: float) -> np.ndarray:
    """Bias expressed at the accumulator scale s_in * s_w, saturated to int32."""
    acc_scale = float(input_scale) * float(weight_scale)
    scaled = np.rint(np.asarray(bias, dtype=np.float64) / acc_scale)
    return np.clip(scaled, INT32_MIN, INT32_MAX).astype(np.int32)


def requant_multiplier(input_scale: float, weight_scale: float, output_scale: float) -> float:
    return float(input_scale) * float(weight_scale) / float(output_scale)


def requantize(acc: np.ndarray, multiplier: float) -> np.ndarray:
    """clamp(rint(acc * multiplier), -127, 127) carried as int32."""
    scaled = np.rint(np.asarray(acc, dtype=np.float64) * multiplier)
    return np.clip(scaled, -INT8_MAX, INT8_MAX).astype(np.int32)
