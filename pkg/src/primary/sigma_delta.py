#!/usr/bin/env python3
"""
Sigma-delta encoding and decoding for SDMASK

Delta encoding emits the change of a signal since the last transmitted value
whenever that change reaches the threshold; sigma decoding accumulates the
received messages back into an estimate. Wrapping a layer between a sigma
decoder and a delta encoder turns a dense layer into an event-driven one.
"""

from dataclasses import dataclass
from typing import Optional, Protocol, Tuple, Union

import numpy as np

from src.primary.errors import ConfigurationError, ShapeMismatchError


def _state_dtype(dtype: np.dtype) -> np.dtype:
    # Integer signals are tracked in int64 so differences of int32 values never wrap.
    return np.dtype(np.int64) if np.issubdtype(dtype, np.integer) else np.dtype(np.float32)


@dataclass
class EventFrame:
    """Dense event tensor (zeros where nothing fired) plus its nonzero count."""

    values: np.ndarray
    nonzero_count: int

    @classmethod
    def from_values(cls, values: np.ndarray) -> "EventFrame":
        return cls(values=values, nonzero_count=int(np.count_nonzero(values)))

    @classmethod
    def empty(cls, shape, dtype) -> "EventFrame":
        return cls(values=np.zeros(shape, dtype=dtype), nonzero_count=0)

    @property
    def shape(self):
        return self.values.shape


class DeltaState:
    """Reference memory x_ref of a delta encoder and its threshold."""

    def __init__(self, shape, theta: float = 0.0, dtype=np.float32):
        if theta < 0 or not np.isfinite(theta):
            raise ConfigurationError(f"sigma-delta threshold must be a nonnegative number, got {theta}")
        self.theta = float(theta)
        self.x_ref = np.zeros(tuple(shape), dtype=_state_dtype(np.dtype(dtype)))

    @property
    def shape(self):
        return self.x_ref.shape


class SigmaState:
    """Accumulator x_est of a sigma decoder."""

    def __init__(self, shape, dtype=np.float32):
        self.x_est = np.zeros(tuple(shape), dtype=_state_dtype(np.dtype(dtype)))

    @property
    def shape(self):
        return self.x_est.shape


def delta_encode(state: DeltaState, x: np.ndarray) -> EventFrame:
    """
    Emit s = x - x_ref wherever |x - x_ref| >= theta, else 0, and move x_ref onto
    x at every element that fired. The boundary |d| == theta fires.
    """
    if x.shape != state.shape:
        raise ShapeMismatchError(f"delta_encode: signal shape {x.shape} != state shape {state.shape}")
    signal = x.astype(state.x_ref.dtype, copy=False)
    diff = signal - state.x_ref
    fired = np.abs(diff) >= state.theta
    events = np.where(fired, diff, np.zeros((), dtype=diff.dtype))
    # Copy x instead of adding s so the reference is exact where it fired.
    np.copyto(state.x_ref, signal, where=fired)
    return EventFrame.from_values(events)


def sigma_decode(state: SigmaState, events: EventFrame) -> np.ndarray:
    """Accumulate events into x_est and return a copy of the new estimate."""
    if events.shape != state.shape:
        raise ShapeMismatchError(f"sigma_decode: event shape {events.shape} != state shape {state.shape}")
    if events.nonzero_count:
        state.x_est += events.values.astype(state.x_est.dtype, copy=False)
    return state.x_est.copy()


def reset(state: Union[DeltaState, SigmaState, "SigmaDeltaLayer"]) -> None:
    """Zero the memories so the next frame is transmitted in full."""
    if isinstance(state, DeltaState):
        state.x_ref.fill(0)
    elif isinstance(state, SigmaState):
        state.x_est.fill(0)
    elif isinstance(state, SigmaDeltaLayer):
        state.reset()
    else:
        raise TypeError(f"cannot reset {type(state).__name__}")


class DenseLayer(Protocol):
    """What wrap_layer needs from a layer."""

    name: str
    input_shape: Tuple[int, ...]
    output_shape: Tuple[int, ...]
    dtype: np.dtype
    fanout: np.ndarray  # per input element: number of weights it drives

    def forward(self, x: np.ndarray) -> np.ndarray:
        ...


@dataclass
class StepReport:
    """Per-frame event accounting for one sigma-delta layer."""

    events_in: int
    events_out: int
    synops: int
    neurons: int


class SigmaDeltaLayer:
    """
    A dense layer wrapped in sigma decoding (input side) and delta encoding
    (output side).
    """

    def __init__(self, layer: DenseLayer, theta: float = 0.0):
        self.layer = layer
        self.theta = float(theta)
        self.sigma = SigmaState(layer.input_shape, dtype=layer.dtype)
        self.delta = DeltaState(layer.output_shape, theta=theta, dtype=layer.dtype)
        self._fanout = np.asarray(layer.fanout, dtype=np.int64)
        if self._fanout.shape != tuple(layer.input_shape):
            raise ShapeMismatchError(
                f"{layer.name}: fan-out map {self._fanout.shape} does not match input {layer.input_shape}"
            )
        self.last_output: Optional[np.ndarray] = None

    @property
    def name(self) -> str:
        return self.layer.name

    def reset(self) -> None:
        reset(self.sigma)
        reset(self.delta)
        self.last_output = None

    def step(self, events: EventFrame) -> Tuple[EventFrame, StepReport]:
        neurons = int(np.prod(self.layer.output_shape))
        if events.nonzero_count == 0 and self.last_output is not None:
            # Unchanged estimate, unchanged output: every element already sits
            # within theta of its reference, so nothing fires.
            out = EventFrame.empty(self.layer.output_shape, self.delta.x_ref.dtype)
            return out, StepReport(events_in=0, events_out=0, synops=0, neurons=neurons)

        x_est = sigma_decode(self.sigma, events)
        y = self.layer.forward(x_est)
        self.last_output = y
        out = delta_encode(self.delta, y)
        synops = int(self._fanout[events.values != 0].sum())
        report = StepReport(
            events_in=events.nonzero_count,
            events_out=out.nonzero_count,
            synops=synops,
            neurons=neurons,
        )
        return out, report


def wrap_layer(layer: DenseLayer, theta: float = 0.0) -> SigmaDeltaLayer:
    """Wrap a dense layer so it consumes and produces event frames."""
    return SigmaDeltaLayer(layer, theta)
