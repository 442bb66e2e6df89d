#!/usr/bin/env python3
"""
Detector graph description and JSON loading
"""

import json
import math
import pathlib
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from src.primary.errors import ConfigurationError
from src.primary.utils.logger import get_logger

logger = get_logger("network")

LAYER_KINDS = ("conv", "linear")
ACTIVATIONS = ("relu", "none")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    cin: int
    cout: int
    k: int = 1
    stride: int = 1
    pad: int = 0
    act: str = "relu"
    theta: float = 0.0

    def validate(self, index: int) -> None:
        where = f"layer {index}"
        if self.kind not in LAYER_KINDS:
            raise ConfigurationError(f"{where}: kind must be one of {LAYER_KINDS}, got {self.kind!r}")
        if self.act not in ACTIVATIONS:
            raise ConfigurationError(f"{where}: act must be one of {ACTIVATIONS}, got {self.act!r}")
        if self.cin < 1 or self.cout < 1:
            raise ConfigurationError(f"{where}: channel counts must be positive")
        if self.stride not in (1, 2):
            raise ConfigurationError(f"{where}: stride must be 1 or 2, got {self.stride}")
        if self.k not in (1, 3):
            raise ConfigurationError(f"{where}: kernel must be 1 or 3, got {self.k}")
        if self.pad < 0:
            raise ConfigurationError(f"{where}: padding must be nonnegative")
        if self.theta < 0:
            raise ConfigurationError(f"{where}: theta must be nonnegative")
        if self.kind == "linear" and (self.k != 1 or self.stride != 1 or self.pad != 0):
            raise ConfigurationError(f"{where}: linear layers take k=1, stride=1, pad=0")


@dataclass(frozen=True)
class HeadSpec:
    anchors: Tuple[Tuple[float, float], ...]
    classes: int

    def __post_init__(self):
        if not self.anchors or self.classes < 1:
            raise ConfigurationError("head needs at least one anchor and one class")
        for w, h in self.anchors:
            if not (math.isfinite(w) and math.isfinite(h) and w > 0 and h > 0):
                raise ConfigurationError(f"anchor sizes must be positive and finite, got [{w}, {h}]")

    @property
    def channels(self) -> int:
        return len(self.anchors) * (5 + self.classes)


@dataclass(frozen=True)
class NetworkConfig:
    layers: Tuple[LayerSpec, ...]
    head: HeadSpec
    input_size: int = 448
    input_channels: int = 3
    input_theta: float = 0.0
    precision: str = "int8"
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        self.validate()

    @property
    def is_convolutional(self) -> bool:
        return all(spec.kind == "conv" for spec in self.layers)

    @property
    def grid(self) -> int:
        stride_product = 1
        for spec in self.layers:
            stride_product *= spec.stride
        return self.input_size // stride_product

    def input_shape(self) -> Tuple[int, int, int]:
        return (self.input_channels, self.input_size, self.input_size)

    def layer_shapes(self) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
        """(input shape, output shape) per layer."""
        shapes = []
        current: Tuple[int, ...] = self.input_shape()
        for spec in self.layers:
            if spec.kind == "conv":
                _, h, w = current
                h_out = (h + 2 * spec.pad - spec.k) // spec.stride + 1
                w_out = (w + 2 * spec.pad - spec.k) // spec.stride + 1
                out: Tuple[int, ...] = (spec.cout, h_out, w_out)
            else:
                out = (spec.cout,)
            shapes.append((current, out))
            current = out
        return shapes

    def validate(self) -> None:
        if not self.layers:
            raise ConfigurationError("network config has no layers")
        if self.input_size < 1:
            raise ConfigurationError(f"input size must be positive, got {self.input_size}")
        if self.precision not in ("int8", "f32"):
            raise ConfigurationError(f"precision must be 'int8' or 'f32', got {self.precision!r}")
        if self.input_theta < 0:
            raise ConfigurationError("input theta must be nonnegative")
        for index, spec in enumerate(self.layers):
            spec.validate(index)

        in_elements = self.input_channels
        for index, spec in enumerate(self.layers):
            if spec.kind == "conv" and spec.cin != in_elements:
                raise ConfigurationError(f"layer {index}: cin {spec.cin} != {in_elements} incoming channels")
            in_elements = spec.cout

        for index, (in_shape, _) in enumerate(self.layer_shapes()):
            spec = self.layers[index]
            if spec.kind == "linear":
                size = 1
                for extent in in_shape:
                    size *= extent
                if size != spec.cin:
                    raise ConfigurationError(f"layer {index}: linear cin {spec.cin} != {size} incoming values")
            elif in_shape[1] + 2 * spec.pad < spec.k or in_shape[2] + 2 * spec.pad < spec.k:
                raise ConfigurationError(f"layer {index}: kernel larger than its padded input")

        if self.layers[-1].cout != self.head.channels:
            raise ConfigurationError(
                f"head has {self.layers[-1].cout} channels, expected anchors x (5 + classes) = {self.head.channels}"
            )
        if self.is_convolutional:
            stride_product = 1
            for spec in self.layers:
                stride_product *= spec.stride
            out_shape = self.layer_shapes()[-1][1]
            if self.input_size % stride_product or out_shape[1] != self.input_size // stride_product:
                raise ConfigurationError(
                    f"stride/grid inconsistency: input {self.input_size} / stride product {stride_product} "
                    f"does not give the {out_shape[1]}x{out_shape[2]} output grid"
                )


def parse_config(data: Dict[str, Any], source: Optional[str] = None) -> NetworkConfig:
    """Validate a config dictionary in the documented JSON schema."""
    if not isinstance(data, dict):
        raise ConfigurationError("network config must be a JSON object")
    try:
        layers = tuple(
            LayerSpec(
                kind=item["kind"],
                cin=int(item["cin"]),
                cout=int(item["cout"]),
                k=int(item.get("k", 1)),
                stride=int(item.get("stride", 1)),
                pad=int(item.get("pad", 0)),
                act=item.get("act", "relu"),
                theta=float(item.get("theta", 0.0)),
            )
            for item in data["layers"]
        )
        head_data = data["head"]
        head = HeadSpec(
            anchors=tuple((float(w), float(h)) for w, h in head_data["anchors"]),
            classes=int(head_data["classes"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"network config schema violation: {e!r}") from e
    return NetworkConfig(
        layers=layers,
        head=head,
        input_size=int(data.get("input", 448)),
        input_theta=float(data.get("input_theta", 0.0)),
        precision=data.get("precision", "int8"),
        source=source,
    )


def load_config(path) -> NetworkConfig:
    """Read and validate a network config JSON file."""
    path = pathlib.Path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"network config {path} is not valid JSON: {e}") from e
    except OSError as e:
        raise ConfigurationError(f"cannot read network config {path}: {e}") from e
    net = parse_config(data, source=str(path))
    logger.info(f"Loaded network config {path}: {len(net.layers)} layers, grid {net.grid}")
    return net


def default_config() -> NetworkConfig:
    """The shipped YOLO-KP config from default_configs/yolo_kp.json."""
    from src.primary import settings_manager

    return parse_config(settings_manager.load_settings("yolo_kp"), source="default_configs/yolo_kp.json")
