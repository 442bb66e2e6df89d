#!/usr/bin/env python3
"""
Neuromorphic cost model: energy, latency and the figures derived from them

energy = sum over layers of synops*e_synop + events*e_event + neurons*e_static
latency = sum over layers of t_layer + synops*t_synop
"""

import json
import pathlib
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

from src.primary.errors import ConfigurationError
from src.primary.network.events import EventStats

NJ_PER_MJ = 1e6
NS_PER_MS = 1e6
US_PER_MS = 1e3

COEFFICIENT_KEYS = {
    "e_synop": "e_synop_nJ",
    "e_event": "e_event_nJ",
    "e_static": "e_static_nJ",
    "t_synop": "t_synop_ns",
    "t_layer": "t_layer_us",
}


@dataclass(frozen=True)
class CostCoefficients:
    e_synop: float
    e_event: float
    e_static: float
    t_synop: float
    t_layer: float

    def __post_init__(self):
        for name in COEFFICIENT_KEYS:
            value = getattr(self, name)
            if not value >= 0:
                raise ConfigurationError(f"cost coefficient {name} must be nonnegative, got {value}")

    def to_json(self) -> Dict[str, float]:
        return {key: getattr(self, name) for name, key in COEFFICIENT_KEYS.items()}

    @classmethod
    def from_json(cls, data: Dict[str, float]) -> "CostCoefficients":
        try:
            return cls(**{name: float(data[key]) for name, key in COEFFICIENT_KEYS.items()})
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"coefficients JSON needs {sorted(COEFFICIENT_KEYS.values())}: {e!r}") from e


def load_coefficients(path) -> CostCoefficients:
    path = pathlib.Path(path)
    try:
        with open(path, "r") as f:
            return CostCoefficients.from_json(json.load(f))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read coefficients {path}: {e}") from e


@dataclass
class CostReport:
    energy_mJ: Optional[float]
    latency_ms: Optional[float]
    throughput_fps: Optional[float]
    edp_uJs: Optional[float]
    gops_per_watt: Optional[float]
    frame_sparsity: Optional[float]
    event_rate: List[float] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def event_rate(stats: Sequence[EventStats]) -> List[float]:
    """Per-layer events_out / neurons, averaged over frames."""
    if not stats:
        return []
    rates = [0.0] * len(stats[0].layers)
    for frame in stats:
        for index, layer in enumerate(frame.layers):
            if layer.neurons <= 0:
                raise ConfigurationError(f"layer {layer.name} has no neurons")
            rates[index] += layer.events_out / layer.neurons
    return [rate / len(stats) for rate in rates]


def energy(stats: EventStats, coeff: CostCoefficients) -> float:
    """Energy of one frame in mJ."""
    total_nj = 0.0
    for layer in stats.layers:
        total_nj += layer.synops * coeff.e_synop + layer.events_out * coeff.e_event + layer.neurons * coeff.e_static
    return total_nj / NJ_PER_MJ


def latency(stats: EventStats, coeff: CostCoefficients) -> float:
    """Fall-through latency of one frame in ms."""
    total_ms = 0.0
    for layer in stats.layers:
        total_ms += coeff.t_layer / US_PER_MS + layer.synops * coeff.t_synop / NS_PER_MS
    return total_ms


def edp(energy_mJ: float, latency_ms: float) -> float:
    """Energy-delay product; mJ x ms is numerically uJ x s."""
    if energy_mJ < 0 or latency_ms < 0:
        raise ConfigurationError("energy and latency must be nonnegative")
    return energy_mJ * latency_ms


def throughput(latency_ms: float) -> float:
    if latency_ms <= 0:
        raise ConfigurationError("latency must be positive to derive throughput")
    return 1000.0 / latency_ms


def gops_per_watt(dense_macs: float, energy_mJ: float) -> float:
    """Dense-equivalent GOPS/W with 1 MAC = 2 ops."""
    if energy_mJ <= 0:
        raise ConfigurationError("energy must be positive to derive GOPS/W")
    return (2.0 * dense_macs) / (energy_mJ / 1e3) / 1e9


def build_cost_report(frames: Sequence[EventStats], coeff: CostCoefficients,
                      dense_macs: Optional[int] = None, frame_sparsity: Optional[float] = None) -> CostReport:
    """Per-frame means over a run; every rate is None for a run without frames."""
    if not frames:
        return CostReport(None, None, None, None, None, frame_sparsity, [])
    mean_energy = sum(energy(frame, coeff) for frame in frames) / len(frames)
    mean_latency = sum(latency(frame, coeff) for frame in frames) / len(frames)
    if dense_macs is None:
        dense_macs = frames[0].total_dense_macs
    return CostReport(
        energy_mJ=mean_energy,
        latency_ms=mean_latency,
        throughput_fps=throughput(mean_latency) if mean_latency > 0 else None,
        edp_uJs=edp(mean_energy, mean_latency),
        gops_per_watt=gops_per_watt(dense_macs, mean_energy) if mean_energy > 0 else None,
        frame_sparsity=frame_sparsity,
        event_rate=event_rate(frames),
    )


@dataclass
class Improvement:
    """Gains of one mask mode relative to the unmasked baseline; >1 means better."""

    edp: Optional[float]
    throughput: Optional[float]
    energy_ratio: Optional[float]
    event_sparsity_gain: Optional[float]
    synaptic_sparsity_gain: Optional[float]

    def to_dict(self):
        return asdict(self)


def _ratio(numerator, denominator) -> Optional[float]:
    if numerator is None or denominator is None or denominator == 0:
        return None
    return numerator / denominator


def improvement(baseline: CostReport, candidate: CostReport, baseline_events: int = 0, candidate_events: int = 0,
                baseline_synops: int = 0, candidate_synops: int = 0) -> Improvement:
    return Improvement(
        edp=_ratio(baseline.edp_uJs, candidate.edp_uJs),
        throughput=_ratio(candidate.throughput_fps, baseline.throughput_fps),
        energy_ratio=_ratio(baseline.energy_mJ, candidate.energy_mJ),
        event_sparsity_gain=_ratio(baseline_events, candidate_events),
        synaptic_sparsity_gain=_ratio(baseline_synops, candidate_synops),
    )
