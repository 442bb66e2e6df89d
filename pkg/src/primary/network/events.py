#!/usr/bin/env python3
"""
Per-layer event statistics for one frame
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

INPUT_LAYER_NAME = "input"


@dataclass
class LayerStats:
    name: str
    neurons: int
    events_in: int = 0
    events_out: int = 0
    synops: int = 0
    dense_macs: int = 0


@dataclass
class EventStats:
    """Stats of every layer of one frame, input encoder first, in layer order."""

    layers: List[LayerStats] = field(default_factory=list)

    def layer(self, name: str) -> LayerStats:
        for item in self.layers:
            if item.name == name:
                return item
        raise KeyError(name)

    @property
    def input_events(self) -> int:
        return self.layers[0].events_out if self.layers else 0

    @property
    def total_events(self) -> int:
        return sum(item.events_out for item in self.layers)

    @property
    def total_synops(self) -> int:
        return sum(item.synops for item in self.layers)

    @property
    def total_neurons(self) -> int:
        return sum(item.neurons for item in self.layers)

    @property
    def total_dense_macs(self) -> int:
        return sum(item.dense_macs for item in self.layers)

    def to_dict(self) -> Dict[str, Any]:
        return {"layers": [asdict(item) for item in self.layers]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EventStats":
        return cls(layers=[LayerStats(**item) for item in data.get("layers", [])])
