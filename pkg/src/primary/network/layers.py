#!/usr/bin/env python3
"""
Concrete detector layers

A layer owns its weights and knows how many synapses each of its input
elements drives (the fan-out map), which is what a sigma-delta wrapper bills
as synaptic operations when that element carries an event.
"""

from typing import Optional, Tuple

import numpy as np

from src.primary import tensor_engine
from src.primary.errors import ShapeMismatchError
from src.primary.network.config import LayerSpec
from src.primary.network.quantize import requantize


def _axis_coverage(n_in: int, n_out: int, k: int, stride: int, pad: int) -> np.ndarray:
    """How many output positions along one axis read each input position."""
    coverage = np.zeros(n_in, dtype=np.int64)
    for o in range(n_out):
        start = o * stride - pad
        lo = max(start, 0)
        hi = min(start + k, n_in)
        if lo < hi:
            coverage[lo:hi] += 1
    return coverage


def conv_fanout(input_shape: Tuple[int, int, int], spec: LayerSpec, output_shape: Tuple[int, int, int]) -> np.ndarray:
    c_in, h, w = input_shape
    _, h_out, w_out = output_shape
    rows = _axis_coverage(h, h_out, spec.k, spec.stride, spec.pad)
    cols = _axis_coverage(w, w_out, spec.k, spec.stride, spec.pad)
    plane = spec.cout * rows[:, None] * cols[None, :]
    return np.broadcast_to(plane, (c_in, h, w)).copy()


def dense_macs(spec: LayerSpec, output_shape: Tuple[int, ...]) -> int:
    """k^2 * C_in * C_out * H_out * W_out for conv, C_in * C_out for linear."""
    if spec.kind == "linear":
        return spec.cin * spec.cout
    _, h_out, w_out = output_shape
    return spec.k * spec.k * spec.cin * spec.cout * h_out * w_out


class DetectorLayer:
    """
    One conv or linear layer with its activation.

    Float layers hold float32 weights. Integer layers hold int8 weights, an
    int32 bias and a requantization multiplier s_in*s_w/s_out; the last layer
    of a detector keeps its int32 accumulator (requant_multiplier is None).
    """

    def __init__(
        self,
        name: str,
        spec: LayerSpec,
        input_shape: Tuple[int, ...],
        output_shape: Tuple[int, ...],
        weight: np.ndarray,
        bias: np.ndarray,
        requant_multiplier: Optional[float] = None,
    ):
        self.name = name
        self.spec = spec
        self.input_shape = tuple(input_shape)
        self.output_shape = tuple(output_shape)
        self.weight = weight
        self.bias = bias
        self.requant_multiplier = requant_multiplier
        self.integer = weight.dtype == np.int8

        expected_w = (spec.cout, spec.cin, spec.k, spec.k) if spec.kind == "conv" else (spec.cout, spec.cin)
        if weight.shape != expected_w:
            raise ShapeMismatchError(f"{name}: weight shape {weight.shape}, config expects {expected_w}")
        if bias.shape != (spec.cout,):
            raise ShapeMismatchError(f"{name}: bias shape {bias.shape}, config expects ({spec.cout},)")
        if self.integer and bias.dtype != np.int32:
            raise ShapeMismatchError(f"{name}: int8 weights need an int32 bias, got {bias.dtype}")
        if not self.integer and (weight.dtype != np.float32 or bias.dtype != np.float32):
            raise ShapeMismatchError(f"{name}: float layers need float32 weight and bias")

        self.dtype = np.dtype(np.int32) if self.integer else np.dtype(np.float32)
        if spec.kind == "conv":
            self.fanout = conv_fanout(self.input_shape, spec, self.output_shape)
        else:
            self.fanout = np.full(self.input_shape, spec.cout, dtype=np.int64)
        self.dense_macs = dense_macs(spec, self.output_shape)

    @property
    def neurons(self) -> int:
        return int(np.prod(self.output_shape))

    def forward(self, x: np.ndarray) -> np.ndarray:
        if tuple(x.shape) != self.input_shape:
            raise ShapeMismatchError(f"{self.name}: input shape {x.shape}, expected {self.input_shape}")
        if not self.integer:
            x = x.astype(np.float32, copy=False)
        if self.spec.kind == "conv":
            y = tensor_engine.conv2d(x, self.weight, self.bias, stride=self.spec.stride, padding=self.spec.pad)
        else:
            y = tensor_engine.linear(x, self.weight, self.bias)
        if self.spec.act == "relu":
            y = tensor_engine.relu(y)
        if self.integer and self.requant_multiplier is not None:
            y = requantize(y, self.requant_multiplier)
        return y
