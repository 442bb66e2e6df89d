#!/usr/bin/env python3
"""
Mask-mode comparison on one stream, relative to the unmasked run
"""

import dataclasses
import pathlib
from typing import Any, Dict, List, Optional

from src.primary.config import MASK_MODES, RunConfig
from src.primary.metrics.cost import improvement
from src.primary.network.config import NetworkConfig
from src.primary.pipeline.report import run_and_report, summary_dict
from src.primary.pipeline.runner import RunResult
from src.primary.pipeline.weights import load_weights
from src.primary.stats_manager import write_json_atomic
from src.primary.utils.logger import get_logger

logger = get_logger("pipeline")

COMPARE_FILE = "compare.json"


def compare_modes(manifest, weights_path, run_config: RunConfig, out_dir, net: Optional[NetworkConfig] = None,
                  modes: Optional[List[str]] = None) -> Dict[str, Any]:
    """
    Run every mask mode (static ones only when a static mask is configured)
    and report each against `none`; per-mode reports go to <out>/<mode>/.
    """
    if modes is None:
        modes = [m for m in MASK_MODES if run_config.static_mask_path or m not in ("static", "combined")]
    if "none" not in modes:
        modes = ["none"] + list(modes)
    weights = load_weights(weights_path) if weights_path else None
    out_dir = pathlib.Path(out_dir)

    results: Dict[str, RunResult] = {}
    for mode in modes:
        mode_config = dataclasses.replace(run_config, mask_mode=mode, out_dir=str(out_dir / mode))
        results[mode] = run_and_report(manifest, None, mode_config, net=net, weights=weights)

    baseline = results["none"]
    base_report = baseline.cost_report()
    base_events = sum(f.stats.total_events for f in baseline.frames)
    base_synops = sum(f.stats.total_synops for f in baseline.frames)
    comparison: Dict[str, Any] = {"modes": {}}
    for mode, result in results.items():
        gains = improvement(
            base_report, result.cost_report(),
            baseline_events=base_events, candidate_events=sum(f.stats.total_events for f in result.frames),
            baseline_synops=base_synops, candidate_synops=sum(f.stats.total_synops for f in result.frames),
        )
        comparison["modes"][mode] = {"summary": summary_dict(result), "improvement": gains.to_dict()}
        logger.info(f"{mode}: EDP gain {gains.edp}, energy ratio {gains.energy_ratio}")
    write_json_atomic(out_dir / COMPARE_FILE, comparison)
    return comparison
