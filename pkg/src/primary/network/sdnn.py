#!/usr/bin/env python3
"""
Sigma-delta version of the detector

Every layer is wrapped between a sigma decoder and a delta encoder, the input
frame goes through its own delta encoder and the head is read back through a
sigma decoder. Layers are stepped strictly in order for each frame.
"""

from typing import List, Mapping, Optional, Tuple

import numpy as np

from src.primary.network.config import NetworkConfig
from src.primary.network.detector import Detector, build_detector
from src.primary.network.events import INPUT_LAYER_NAME, EventStats, LayerStats
from src.primary.sigma_delta import DeltaState, EventFrame, SigmaDeltaLayer, SigmaState, delta_encode, sigma_decode, wrap_layer


class Sdnn:
    """Event-driven detector instance; owns per-sequence temporal state."""

    def __init__(self, detector: Detector, theta: Optional[float] = None, input_theta: Optional[float] = None):
        self.detector = detector
        net = detector.net
        self.input_theta = net.input_theta if input_theta is None else float(input_theta)
        self.input_encoder = DeltaState(net.input_shape(), theta=self.input_theta, dtype=detector.input_dtype)
        self.layers: List[SigmaDeltaLayer] = [
            wrap_layer(layer, spec.theta if theta is None else theta)
            for layer, spec in zip(detector.layers, net.layers)
        ]
        last = detector.layers[-1]
        self.head = SigmaState(last.output_shape, dtype=last.dtype)
        self.last_input_events: Optional[EventFrame] = None

    def reset(self) -> None:
        """Forget all temporal state; the next frame is sent in full."""
        self.input_encoder.x_ref.fill(0)
        for layer in self.layers:
            layer.reset()
        self.head.x_est.fill(0)
        self.last_input_events = None

    def step(self, frame: np.ndarray) -> Tuple[np.ndarray, EventStats]:
        x = self.detector.prepare_input(frame)
        events = delta_encode(self.input_encoder, x)
        self.last_input_events = events
        stats = [LayerStats(name=INPUT_LAYER_NAME, neurons=int(x.size), events_out=events.nonzero_count)]
        for sd_layer in self.layers:
            events, report = sd_layer.step(events)
            stats.append(LayerStats(
                name=sd_layer.name,
                neurons=report.neurons,
                events_in=report.events_in,
                events_out=report.events_out,
                synops=report.synops,
                dense_macs=sd_layer.layer.dense_macs,
            ))
        head_raw = sigma_decode(self.head, events)
        return self.detector.dequantize_head(head_raw), EventStats(layers=stats)


def convert_to_sdnn(net: NetworkConfig, weights: Mapping[str, np.ndarray],
                    theta: Optional[float] = None, input_theta: Optional[float] = None) -> Sdnn:
    """Wrap every layer with fresh sigma-delta state; theta overrides apply to all layers."""
    return Sdnn(build_detector(net, weights), theta=theta, input_theta=input_theta)


def sdnn_step(sdnn: Sdnn, frame: np.ndarray) -> Tuple[np.ndarray, EventStats]:
    return sdnn.step(frame)
