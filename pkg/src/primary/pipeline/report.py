#!/usr/bin/env python3
"""
Run report files: summary.json, layers.csv, detections.json, frame_stats.json
"""

import csv
import io
import pathlib
from typing import Any, Dict, List, Optional, Sequence

from src.primary.pipeline.runner import RunResult, run
from src.primary.stats_manager import LayerTotals, load_json, save_frame_stats, write_json_atomic, write_text_atomic
from src.primary.utils.logger import get_logger

logger = get_logger("pipeline")

SUMMARY_FILE = "summary.json"
LAYERS_FILE = "layers.csv"
DETECTIONS_FILE = "detections.json"
LAYERS_HEADER = ["layer", "neurons", "events", "synops", "event_rate", "dense_macs"]


def layers_csv(rows: Sequence[LayerTotals]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(LAYERS_HEADER)
    for row in rows:
        writer.writerow([row.name, row.neurons, row.events, row.synops, f"{row.event_rate:.6f}", row.dense_macs])
    return buffer.getvalue()


def summary_dict(result: RunResult) -> Dict[str, Any]:
    cfg = result.config
    report = result.cost_report()
    summary: Dict[str, Any] = {
        "status": result.status,
        "mask_mode": cfg.mask_mode,
        "engine": cfg.engine,
        "sequences": len(result.sequences),
        "frames": len(result.frames),
        "frame_sparsity": result.frame_sparsity(),
        "frame_sparsity_per_sequence": result.frame_sparsity_per_sequence(),
        "event_sparsity": result.event_sparsity(),
        "synaptic_sparsity": result.synaptic_sparsity(),
        "input_events": result.input_events(),
        "energy_mJ": report.energy_mJ,
        "latency_ms": report.latency_ms,
        "throughput_fps": report.throughput_fps,
        "edp_uJs": report.edp_uJs,
        "gops_per_watt": report.gops_per_watt,
        "map50": result.map50(),
        "miou": result.miou(),
        "coefficients": result.coefficients.to_json(),
        "config": {
            "k_s": result.static_k_s if result.static_k_s is not None else cfg.k_s,
            "t_reg": cfg.t_reg,
            "region_size": cfg.region_size,
            "theta": cfg.theta,
            "input_theta": cfg.input_theta,
            "conf_thresh": cfg.conf_thresh,
            "nms_iou": cfg.nms_iou,
            "seed": cfg.seed,
        },
    }
    if result.error is not None:
        summary["error"] = result.error
    return summary


def detections_dict(result: RunResult) -> List[Dict[str, Any]]:
    return [
        {
            "seq_id": frame.seq_id,
            "frame_index": frame.frame_index,
            "detections": [d.to_dict() for d in frame.detections],
        }
        for frame in result.frames
    ]


def report(result: RunResult, out_dir) -> Dict[str, pathlib.Path]:
    """Write every report file for a (possibly failed) run."""
    out_dir = pathlib.Path(out_dir)
    paths = {
        "summary": out_dir / SUMMARY_FILE,
        "layers": out_dir / LAYERS_FILE,
        "detections": out_dir / DETECTIONS_FILE,
    }
    write_text_atomic(paths["layers"], layers_csv(result.layer_totals()))
    write_json_atomic(paths["detections"], detections_dict(result))
    save_frame_stats(out_dir, result.collector())
    write_json_atomic(paths["summary"], summary_dict(result))
    logger.info(f"Wrote {result.status} report for {len(result.frames)} frames to {out_dir}")
    return paths


def load_summary(out_dir) -> Optional[Dict[str, Any]]:
    return load_json(pathlib.Path(out_dir) / SUMMARY_FILE)


def run_and_report(manifest, weights_path, run_config, **kwargs) -> RunResult:
    """
    run() followed by report() into run_config.out_dir. A failed run still
    flushes whatever it aggregated, marked failed, before the error propagates.
    """
    try:
        result = run(manifest, weights_path, run_config, **kwargs)
    except Exception as e:
        partial = getattr(e, "partial_result", None)
        if partial is not None:
            try:
                report(partial, run_config.out_dir)
            except Exception as flush_error:
                logger.error(f"Could not flush partial report to {run_config.out_dir}: {flush_error}")
        raise
    report(result, run_config.out_dir)
    return result
