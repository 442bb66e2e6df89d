#!/usr/bin/env python3
"""
Least-squares fitting of cost coefficients to measured energy/latency pairs
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from src.primary.errors import CalibrationError
from src.primary.metrics.cost import NJ_PER_MJ, NS_PER_MS, US_PER_MS, CostCoefficients
from src.primary.network.events import EventStats
from src.primary.utils.logger import get_logger

logger = get_logger("metrics")

# Pull toward the seeds; small enough to leave a determined system unbiased.
SEED_WEIGHT = 1e-6


@dataclass(frozen=True)
class Observation:
    """Per-frame totals of one measured regime."""

    synops: float
    events: float
    neurons: float
    layers: int
    energy_mJ: float
    latency_ms: float
    label: str = ""

    @classmethod
    def from_stats(cls, frames: Sequence[EventStats], energy_mJ: float, latency_ms: float, label: str = "") -> "Observation":
        if not frames:
            raise CalibrationError("an observation needs at least one frame of statistics")
        n = len(frames)
        return cls(
            synops=sum(f.total_synops for f in frames) / n,
            events=sum(f.total_events for f in frames) / n,
            neurons=sum(f.total_neurons for f in frames) / n,
            layers=len(frames[0].layers),
            energy_mJ=energy_mJ,
            latency_ms=latency_ms,
            label=label,
        )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Observation":
        try:
            return cls(
                synops=float(data["synops"]),
                events=float(data["events"]),
                neurons=float(data["neurons"]),
                layers=int(data["layers"]),
                energy_mJ=float(data["energy_mJ"]),
                latency_ms=float(data["latency_ms"]),
                label=str(data.get("label", "")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CalibrationError(f"malformed observation {data!r}: {e!r}") from e


@dataclass
class CalibrationResult:
    coefficients: CostCoefficients
    energy_residuals_mJ: List[float] = field(default_factory=list)
    latency_residuals_ms: List[float] = field(default_factory=list)
    energy_rank: int = 0
    latency_rank: int = 0

    @property
    def rank_deficient(self) -> bool:
        return self.energy_rank < 3 or self.latency_rank < 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coefficients": self.coefficients.to_json(),
            "energy_residuals_mJ": self.energy_residuals_mJ,
            "latency_residuals_ms": self.latency_residuals_ms,
            "energy_rank": self.energy_rank,
            "latency_rank": self.latency_rank,
            "rank_deficient": self.rank_deficient,
        }


def _fit(a: np.ndarray, b: np.ndarray, seed: np.ndarray):
    """Nonnegative least squares on unit-norm columns, nudged toward the seed."""
    norms = np.linalg.norm(a, axis=0)
    norms[norms == 0] = 1.0
    a_s = a / norms
    scale = max(float(np.linalg.norm(b)), 1.0)
    u_seed = seed * norms / scale
    stacked_a = np.vstack([a_s, SEED_WEIGHT * np.eye(a.shape[1])])
    stacked_b = np.concatenate([b / scale, SEED_WEIGHT * u_seed])
    u, _ = nnls(stacked_a, stacked_b)
    x = u * scale / norms
    return x, int(np.linalg.matrix_rank(a_s)), a @ x - b


def calibrate(observations: Sequence[Observation], seeds: Optional[CostCoefficients] = None) -> CalibrationResult:
    """
    Fit e_synop/e_event/e_static to the energies and t_synop/t_layer to the
    latencies. Directions the data leave undetermined stay at the seeds.
    """
    if not observations:
        raise CalibrationError("calibration needs at least one observation")
    seeds = seeds or CostCoefficients(0.0, 0.0, 0.0, 0.0, 0.0)

    a_energy = np.array([[o.synops, o.events, o.neurons] for o in observations], dtype=np.float64)
    b_energy = np.array([o.energy_mJ * NJ_PER_MJ for o in observations], dtype=np.float64)
    a_latency = np.array([[o.synops, o.layers * US_PER_MS] for o in observations], dtype=np.float64)
    b_latency = np.array([o.latency_ms * NS_PER_MS for o in observations], dtype=np.float64)

    e, energy_rank, energy_res = _fit(a_energy, b_energy, np.array([seeds.e_synop, seeds.e_event, seeds.e_static]))
    t, latency_rank, latency_res = _fit(a_latency, b_latency, np.array([seeds.t_synop, seeds.t_layer]))

    result = CalibrationResult(
        coefficients=CostCoefficients(e_synop=float(e[0]), e_event=float(e[1]), e_static=float(e[2]),
                                      t_synop=float(t[0]), t_layer=float(t[1])),
        energy_residuals_mJ=[float(r / NJ_PER_MJ) for r in energy_res],
        latency_residuals_ms=[float(r / NS_PER_MS) for r in latency_res],
        energy_rank=energy_rank,
        latency_rank=latency_rank,
    )
    if result.rank_deficient:
        logger.warning(
            f"Calibration is rank deficient (energy rank {energy_rank}/3, latency rank {latency_rank}/2); "
            "undetermined coefficients stay near their seeds"
        )
    logger.info(f"Calibrated coefficients: {result.coefficients.to_json()}")
    return result


@lru_cache(maxsize=1)
def default_coefficients() -> CostCoefficients:
    """Coefficients calibrated on the reference regimes in default_configs/coefficients.json."""
    from src.primary import settings_manager

    data = settings_manager.load_settings("coefficients")
    regimes = data.get("reference_regimes", [])
    if not regimes:
        raise CalibrationError("coefficients settings define no reference regimes")
    seeds = CostCoefficients.from_json(data["seeds"]) if "seeds" in data else None
    return calibrate([Observation.from_dict(r) for r in regimes], seeds=seeds).coefficients
