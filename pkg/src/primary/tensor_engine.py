#!/usr/bin/env python3
"""
Deterministic numeric kernel for SDMASK
Dense tensors are numpy arrays of dtype float32, int8 or int32. Every reduction
below runs in a fixed order so results are bit-identical across runs and
thread counts.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.primary.errors import AccumulationOverflowError, ConfigurationError, ShapeMismatchError

INT8_MAX = 127
INT32_MIN = np.iinfo(np.int32).min
INT32_MAX = np.iinfo(np.int32).max


@dataclass(frozen=True)
class QuantParams:
    """Per-tensor symmetric quantization parameters."""

    scale: float
    zero_point: int = 0

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise ConfigurationError(f"quantization scale must be positive, got {self.scale}")
        if self.zero_point != 0:
            raise ConfigurationError("only symmetric quantization (zero_point = 0) is supported")


@dataclass(frozen=True)
class LetterboxTransform:
    """Maps original image coordinates onto the letterboxed canvas."""

    scale: float
    pad_x: int
    pad_y: int
    content_w: int
    content_h: int
    canvas: int

    def to_canvas(self, box):
        x1, y1, x2, y2 = box[:4]
        return (
            x1 * self.scale + self.pad_x,
            y1 * self.scale + self.pad_y,
            x2 * self.scale + self.pad_x,
            y2 * self.scale + self.pad_y,
        )

    def to_original(self, box):
        x1, y1, x2, y2 = box[:4]
        return (
            (x1 - self.pad_x) / self.scale,
            (y1 - self.pad_y) / self.scale,
            (x2 - self.pad_x) / self.scale,
            (y2 - self.pad_y) / self.scale,
        )

    def scaled(self, factor: float) -> "LetterboxTransform":
        """Same mapping followed by a uniform resize of the canvas (0.5 for the 224 canvas)."""
        return LetterboxTransform(
            scale=self.scale * factor,
            pad_x=self.pad_x * factor,
            pad_y=self.pad_y * factor,
            content_w=self.content_w * factor,
            content_h=self.content_h * factor,
            canvas=int(round(self.canvas * factor)),
        )


def _is_integer(x: np.ndarray) -> bool:
    return np.issubdtype(x.dtype, np.integer)


def _check_int32(acc: np.ndarray, what: str) -> np.ndarray:
    if acc.size and (acc.min() < INT32_MIN or acc.max() > INT32_MAX):
        raise AccumulationOverflowError(f"{what}: int32 accumulator overflow")
    return acc.astype(np.int32)


def conv2d(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
    """
    Cross-correlation with zero padding.

    Loop order per output element is fixed: input channel, kernel row, kernel
    column, then the bias is added. The float path accumulates in float32; the
    integer path (int8 weights, integer activations, int32 bias) accumulates in
    int64 and fails on results outside int32.
    """
    if x.ndim != 3 or weights.ndim != 4:
        raise ShapeMismatchError(f"conv2d expects [C,H,W] input and [Co,Ci,k,k] weights, got {x.shape} and {weights.shape}")
    c_out, c_in, k, k_w = weights.shape
    if k != k_w or k % 2 == 0:
        raise ShapeMismatchError(f"conv2d kernel must be square and odd, got {k}x{k_w}")
    if x.shape[0] != c_in:
        raise ShapeMismatchError(f"conv2d input has {x.shape[0]} channels, weights expect {c_in}")
    if bias.shape != (c_out,):
        raise ShapeMismatchError(f"conv2d bias shape {bias.shape} does not match {c_out} output channels")
    if stride < 1 or padding < 0:
        raise ConfigurationError(f"invalid stride {stride} or padding {padding}")

    _, h, w = x.shape
    h_out = (h + 2 * padding - k) // stride + 1
    w_out = (w + 2 * padding - k) // stride + 1
    if h_out < 1 or w_out < 1:
        raise ShapeMismatchError(f"conv2d output would be empty for input {x.shape} with k={k}, pad={padding}")

    integer_path = weights.dtype == np.int8
    if integer_path:
        if not _is_integer(x) or bias.dtype != np.int32:
            raise ShapeMismatchError("integer conv2d needs integer activations and an int32 bias")
        acc_dtype = np.int64
    else:
        if weights.dtype != np.float32 or x.dtype != np.float32:
            raise ShapeMismatchError(f"float conv2d needs float32 tensors, got {x.dtype} and {weights.dtype}")
        acc_dtype = np.float32

    padded = np.pad(x.astype(acc_dtype), ((0, 0), (padding, padding), (padding, padding)))
    w_acc = weights.astype(acc_dtype)
    acc = np.zeros((c_out, h_out, w_out), dtype=acc_dtype)
    row_span = stride * (h_out - 1) + 1
    col_span = stride * (w_out - 1) + 1
    for ci in range(c_in):
        for ky in range(k):
            for kx in range(k):
                window = padded[ci, ky:ky + row_span:stride, kx:kx + col_span:stride]
                acc += w_acc[:, ci, ky, kx][:, None, None] * window[None, :, :]
    acc = acc + bias.astype(acc_dtype)[:, None, None]

    if integer_path:
        return _check_int32(acc, "conv2d")
    return acc


def linear(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Dense layer y = W x + b over a flattened input, same dtype rules as conv2d."""
    flat = x.reshape(-1)
    if weights.ndim != 2 or weights.shape[1] != flat.shape[0] or bias.shape != (weights.shape[0],):
        raise ShapeMismatchError(f"linear weights {weights.shape} / bias {bias.shape} do not fit input of size {flat.shape[0]}")
    as_conv = weights.reshape(weights.shape[0], weights.shape[1], 1, 1)
    return conv2d(flat.reshape(-1, 1, 1), as_conv, bias).reshape(-1)


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x), dtype preserved."""
    return np.maximum(x, np.zeros((), dtype=x.dtype))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """float32 matrix product summed over the inner index in ascending order."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul shapes {a.shape} and {b.shape} do not align")
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float32)
    for i in range(a.shape[1]):
        out += a[:, i, None] * b[None, i, :]
    return out


def avg_downsample2x(x: np.ndarray) -> np.ndarray:
    """Mean of each 2x2 block, summed as (top pair) + (bottom pair)."""
    if x.ndim != 3:
        raise ShapeMismatchError(f"avg_downsample2x expects [C,H,W], got {x.shape}")
    if x.shape[1] % 2 or x.shape[2] % 2:
        raise ShapeMismatchError(f"avg_downsample2x needs even extents, got {x.shape[1:]}")
    x = np.asarray(x, dtype=np.float32)
    top = x[:, 0::2, 0::2] + x[:, 0::2, 1::2]
    bottom = x[:, 1::2, 0::2] + x[:, 1::2, 1::2]
    return ((top + bottom) * np.float32(0.25)).astype(np.float32)


def _bilinear_axis(n_in: int, n_out: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source indices and weights for half-pixel-centred bilinear sampling."""
    ratio = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * ratio - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a [C,H,W] tensor; identity when the size is unchanged."""
    c, h, w = x.shape
    if (h, w) == (out_h, out_w):
        return np.array(x, dtype=np.float32, copy=True)
    data = np.asarray(x, dtype=np.float64)
    y_lo, y_hi, wy = _bilinear_axis(h, out_h)
    x_lo, x_hi, wx = _bilinear_axis(w, out_w)
    rows = data[:, y_lo, :] * (1.0 - wy)[None, :, None] + data[:, y_hi, :] * wy[None, :, None]
    out = rows[:, :, x_lo] * (1.0 - wx)[None, None, :] + rows[:, :, x_hi] * wx[None, None, :]
    return out.astype(np.float32)


def letterbox(frame: np.ndarray, target: int = 448, pad_value: float = 0.0):
    """
    Aspect-preserving resize to fit a target x target canvas, content centred.

    Returns the canvas and the LetterboxTransform needed to map boxes into it.
    """
    if frame.ndim != 3 or frame.shape[1] < 1 or frame.shape[2] < 1:
        raise ShapeMismatchError(f"letterbox expects a non-empty [C,H,W] frame, got {frame.shape}")
    transform = letterbox_transform(frame.shape[1], frame.shape[2], target)
    new_h, new_w = transform.content_h, transform.content_w
    content = resize_bilinear(frame, new_h, new_w)
    canvas = np.full((frame.shape[0], target, target), pad_value, dtype=np.float32)
    canvas[:, transform.pad_y:transform.pad_y + new_h, transform.pad_x:transform.pad_x + new_w] = content
    return canvas, transform


def letterbox_transform(h: int, w: int, target: int = 448) -> LetterboxTransform:
    """The mapping letterbox() applies to an h x w image, without touching pixels."""
    scale = target / max(h, w)
    new_w = min(target, max(1, int(round(w * scale))))
    new_h = min(target, max(1, int(round(h * scale))))
    return LetterboxTransform(
        scale=scale,
        pad_x=(target - new_w) // 2,
        pad_y=(target - new_h) // 2,
        content_w=new_w,
        content_h=new_h,
        canvas=target,
    )


def quantize(x: np.ndarray, q: QuantParams) -> np.ndarray:
    """Round-half-to-even of x/scale, saturated to [-127, 127]."""
    scaled = np.asarray(x, dtype=np.float64) / q.scale
    return np.clip(np.rint(scaled), -INT8_MAX, INT8_MAX).astype(np.int8)


def dequantize(q_values: np.ndarray, q: QuantParams) -> np.ndarray:
    return (np.asarray(q_values, dtype=np.float64) * q.scale).astype(np.float32)
