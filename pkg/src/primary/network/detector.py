#!/usr/bin/env python3
"""
Detector weights, dense (ANN) forward pass and int8 conversion
"""

from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from src.primary import tensor_engine
from src.primary.errors import ConfigurationError, ShapeMismatchError
from src.primary.network.config import NetworkConfig
from src.primary.network.events import INPUT_LAYER_NAME, EventStats, LayerStats
from src.primary.network.layers import DetectorLayer
from src.primary.network.quantize import abs_max_scale, quantize_bias, quantize_weight, requant_multiplier
from src.primary.utils.logger import get_logger

logger = get_logger("network")

PREFIX = "detector"
INPUT_SCALE_KEY = f"{PREFIX}.input_scale"


def weight_key(index: int) -> str:
    return f"{PREFIX}.{index}.weight"


def bias_key(index: int) -> str:
    return f"{PREFIX}.{index}.bias"


def scale_key(index: int) -> str:
    """float32 [s_w, s_out]; s_out is 0 for the last layer, which is never requantized."""
    return f"{PREFIX}.{index}.scale"


def layer_name(net: NetworkConfig, index: int) -> str:
    return f"{net.layers[index].kind}{index + 1}"


def _fetch(weights: Mapping[str, np.ndarray], key: str) -> np.ndarray:
    if key not in weights:
        raise ShapeMismatchError(f"weights have no tensor named {key!r}")
    return weights[key]


class Detector:
    """A NetworkConfig bound to concrete weights."""

    def __init__(self, net: NetworkConfig, layers: List[DetectorLayer],
                 input_quant: Optional[tensor_engine.QuantParams] = None, head_scale: float = 1.0):
        self.net = net
        self.layers = layers
        self.input_quant = input_quant
        self.head_scale = head_scale

    @property
    def integer(self) -> bool:
        return self.input_quant is not None

    @property
    def input_dtype(self) -> np.dtype:
        return np.dtype(np.int8) if self.integer else np.dtype(np.float32)

    def prepare_input(self, frame: np.ndarray) -> np.ndarray:
        """Validate a [3,S,S] float frame and bring it onto the detector's input grid."""
        if tuple(frame.shape) != self.net.input_shape():
            raise ShapeMismatchError(f"frame shape {frame.shape}, detector expects {self.net.input_shape()}")
        if self.integer:
            return tensor_engine.quantize(frame, self.input_quant)
        return np.asarray(frame, dtype=np.float32)

    def dequantize_head(self, raw: np.ndarray) -> np.ndarray:
        if self.integer:
            return (np.asarray(raw, dtype=np.float64) * self.head_scale).astype(np.float32)
        return np.array(raw, dtype=np.float32, copy=True)

    def forward_raw(self, frame: np.ndarray) -> np.ndarray:
        x = self.prepare_input(frame)
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def forward(self, frame: np.ndarray) -> np.ndarray:
        return self.dequantize_head(self.forward_raw(frame))

    def forward_with_stats(self, frame: np.ndarray) -> Tuple[np.ndarray, EventStats]:
        """Dense pass that bills nonzero activations as events and dense MACs as synops."""
        x = self.prepare_input(frame)
        stats = [LayerStats(name=INPUT_LAYER_NAME, neurons=int(x.size), events_out=int(np.count_nonzero(x)))]
        for layer in self.layers:
            events_in = int(np.count_nonzero(x))
            x = layer.forward(x)
            stats.append(LayerStats(
                name=layer.name,
                neurons=layer.neurons,
                events_in=events_in,
                events_out=int(np.count_nonzero(x)),
                synops=layer.dense_macs,
                dense_macs=layer.dense_macs,
            ))
        return self.dequantize_head(x), EventStats(layers=stats)


def build_detector(net: NetworkConfig, weights: Mapping[str, np.ndarray]) -> Detector:
    """Bind weights to a config; int8 weights select the integer path."""
    integer = _fetch(weights, weight_key(0)).dtype == np.int8
    shapes = net.layer_shapes()
    layers = []
    input_quant = None
    head_scale = 1.0
    if integer:
        input_scale = float(_fetch(weights, INPUT_SCALE_KEY).reshape(-1)[0])
        input_quant = tensor_engine.QuantParams(input_scale)
        s_in = input_scale

    for index, spec in enumerate(net.layers):
        weight = _fetch(weights, weight_key(index))
        bias = _fetch(weights, bias_key(index))
        if (weight.dtype == np.int8) != integer:
            raise ShapeMismatchError(f"layer {index}: weights mix int8 and float32 tensors")
        multiplier = None
        if integer:
            scales = np.asarray(_fetch(weights, scale_key(index)), dtype=np.float64).reshape(-1)
            if scales.shape != (2,):
                raise ShapeMismatchError(f"{scale_key(index)} must hold [s_w, s_out]")
            s_w, s_out = float(scales[0]), float(scales[1])
            if index == len(net.layers) - 1:
                head_scale = s_in * s_w
            else:
                if s_out <= 0:
                    raise ConfigurationError(f"layer {index}: output scale must be positive, got {s_out}")
                multiplier = requant_multiplier(s_in, s_w, s_out)
                s_in = s_out
        in_shape, out_shape = shapes[index]
        layers.append(DetectorLayer(
            name=layer_name(net, index),
            spec=spec,
            input_shape=in_shape,
            output_shape=out_shape,
            weight=weight,
            bias=bias,
            requant_multiplier=multiplier,
        ))
    return Detector(net, layers, input_quant=input_quant, head_scale=head_scale)


def ann_forward(net: NetworkConfig, weights: Mapping[str, np.ndarray], frame: np.ndarray) -> np.ndarray:
    """Dense forward pass returning the [head_ch, grid, grid] head tensor."""
    return build_detector(net, weights).forward(frame)


def random_weights(net: NetworkConfig, seed: int = 0) -> Dict[str, np.ndarray]:
    """He-initialised float32 detector weights with small biases."""
    rng = np.random.default_rng(seed)
    weights = {}
    for index, spec in enumerate(net.layers):
        fan_in = spec.cin * spec.k * spec.k
        shape = (spec.cout, spec.cin, spec.k, spec.k) if spec.kind == "conv" else (spec.cout, spec.cin)
        weights[weight_key(index)] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(np.float32)
        weights[bias_key(index)] = rng.uniform(-0.05, 0.05, size=spec.cout).astype(np.float32)
    return weights


def calibrate_activation_scales(net: NetworkConfig, float_weights: Mapping[str, np.ndarray],
                                frames: Iterable[np.ndarray]) -> Tuple[float, List[float]]:
    """Abs-max scales of the input and of every layer's activated output over the frames."""
    detector = build_detector(net, float_weights)
    if detector.integer:
        raise ConfigurationError("activation calibration needs float32 weights")
    input_peak = 0.0
    peaks = [0.0] * len(detector.layers)
    seen = 0
    for frame in frames:
        x = detector.prepare_input(frame)
        input_peak = max(input_peak, float(np.max(np.abs(x))))
        for index, layer in enumerate(detector.layers):
            x = layer.forward(x)
            peaks[index] = max(peaks[index], float(np.max(np.abs(x))))
        seen += 1
    if not seen:
        raise ConfigurationError("activation calibration needs at least one frame")
    return abs_max_scale(np.array([input_peak])), [abs_max_scale(np.array([peak])) for peak in peaks]


def quantize_detector(net: NetworkConfig, float_weights: Mapping[str, np.ndarray],
                      frames: Iterable[np.ndarray]) -> Dict[str, np.ndarray]:
    """int8 weights, int32 biases and [s_w, s_out] scales for every layer."""
    input_scale, output_scales = calibrate_activation_scales(net, float_weights, frames)
    quantized = {INPUT_SCALE_KEY: np.array([input_scale], dtype=np.float32)}
    s_in = float(np.float32(input_scale))
    last = len(net.layers) - 1
    for index in range(len(net.layers)):
        w_q, s_w = quantize_weight(float_weights[weight_key(index)])
        s_w = float(np.float32(s_w))
        s_out = 0.0 if index == last else float(np.float32(output_scales[index]))
        quantized[weight_key(index)] = w_q
        quantized[bias_key(index)] = quantize_bias(float_weights[bias_key(index)], s_in, s_w)
        quantized[scale_key(index)] = np.array([s_w, s_out], dtype=np.float32)
        s_in = s_out
    logger.info(f"Quantized {len(net.layers)} detector layers to int8 (input scale {input_scale:.6g})")
    return quantized
