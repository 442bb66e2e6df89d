#!/usr/bin/env python3
"""
Run report routes: history, per-run summary and layer table, and background runs
"""

import csv
import io
import pathlib

from flask import Blueprint, Response, current_app, jsonify, request

from src.primary import __version__, background, run_history
from src.primary.config import build_run_config
from src.primary.errors import SdmaskError
from src.primary.pipeline.report import LAYERS_FILE, load_summary, run_and_report
from src.primary.stats_manager import load_frame_stats
from src.primary.utils.logger import get_logger

logger = get_logger("server")
runs_blueprint = Blueprint("runs", __name__)

# request body key -> RunConfig field
RUN_OPTIONS = {
    "mask": "mask_mode",
    "ks": "k_s",
    "treg": "t_reg",
    "theta": "theta",
    "coeff": "coeff_path",
    "static_mask": "static_mask_path",
    "engine": "engine",
    "seed": "seed",
    "jobs": "jobs",
}


def _out_root() -> pathlib.Path:
    return pathlib.Path(current_app.config["OUT_ROOT"])


def _run_dir(run_id: str):
    """The run's directory, or None for ids that could escape the output root."""
    if not run_history.is_valid_run_id(run_id):
        return None
    return _out_root() / run_id


@runs_blueprint.route("/health", methods=["GET"])
def health():
    return jsonify({"status": "ok", "version": __version__}), 200


@runs_blueprint.route("/runs", methods=["GET"])
def list_runs():
    """Get every run in the history, newest first"""
    try:
        return jsonify({"runs": run_history.get_runs(_out_root())}), 200
    except Exception as e:
        logger.error(f"Error listing runs: {str(e)}", exc_info=True)
        return jsonify({"error": str(e)}), 500


@runs_blueprint.route("/runs/<run_id>", methods=["GET"])
def get_run_summary(run_id):
    """Get a run's summary.json"""
    try:
        run_dir = _run_dir(run_id)
        if run_dir is None:
            return jsonify({"error": f"Invalid run id: {run_id}"}), 400
        summary = load_summary(run_dir)
        if summary is None:
            return jsonify({"error": f"No summary for run {run_id}"}), 404
        return jsonify(summary), 200
    except Exception as e:
        logger.error(f"Error getting summary for {run_id}: {str(e)}", exc_info=True)
        return jsonify({"error": str(e)}), 500


@runs_blueprint.route("/runs/<run_id>/layers", methods=["GET"])
def get_run_layers(run_id):
    """Get a run's layers.csv as JSON rows, or raw with ?format=csv"""
    try:
        run_dir = _run_dir(run_id)
        if run_dir is None:
            return jsonify({"error": f"Invalid run id: {run_id}"}), 400
        path = run_dir / LAYERS_FILE
        if not path.is_file():
            return jsonify({"error": f"No layer table for run {run_id}"}), 404
        text = path.read_text(encoding="utf-8")
        if request.args.get("format") == "csv":
            return Response(text, status=200, mimetype="text/csv")
        rows = list(csv.DictReader(io.StringIO(text)))
        for row in rows:
            for key in ("neurons", "events", "synops", "dense_macs"):
                row[key] = int(row[key])
            row["event_rate"] = float(row["event_rate"])
        return jsonify({"run_id": run_id, "layers": rows}), 200
    except Exception as e:
        logger.error(f"Error getting layers for {run_id}: {str(e)}", exc_info=True)
        return jsonify({"error": str(e)}), 500


@runs_blueprint.route("/runs/<run_id>/frames", methods=["GET"])
def get_run_frames(run_id):
    """Per-frame event totals from frame_stats.json; ?seq=<seq_id> narrows to one sequence"""
    try:
        run_dir = _run_dir(run_id)
        if run_dir is None:
            return jsonify({"error": f"Invalid run id: {run_id}"}), 400
        collector = load_frame_stats(run_dir)
        if collector is None:
            return jsonify({"error": f"No frame statistics for run {run_id}"}), 404
        wanted = request.args.get("seq")
        sequences = []
        for seq_id, frames in zip(collector.seq_ids(), collector.sequences()):
            if wanted is not None and seq_id != wanted:
                continue
            sequences.append({
                "seq_id": seq_id,
                "frames": [
                    {
                        "position": position,
                        "input_events": stats.input_events,
                        "events": stats.total_events,
                        "synops": stats.total_synops,
                        "layers": stats.to_dict()["layers"],
                    }
                    for position, stats in enumerate(frames)
                ],
            })
        if wanted is not None and not sequences:
            return jsonify({"error": f"Run {run_id} has no sequence {wanted}"}), 404
        return jsonify({"run_id": run_id, "sequences": sequences}), 200
    except Exception as e:
        logger.error(f"Error getting frame statistics for {run_id}: {str(e)}", exc_info=True)
        return jsonify({"error": str(e)}), 500


@runs_blueprint.route("/runs/<run_id>/status", methods=["GET"])
def get_run_state(run_id):
    """Live status for runs started by this server, else the history entry"""
    status = background.get_run_status(run_id)
    if status is not None:
        return jsonify({"run_id": run_id, **status}), 200
    entry = run_history.get_run(_out_root(), run_id)
    if entry is None:
        return jsonify({"error": f"Unknown run: {run_id}"}), 404
    return jsonify({"run_id": run_id, "status": entry.get("status"), "error": entry.get("error")}), 200


@runs_blueprint.route("/runs", methods=["POST"])
def start_run():
    """Start a run in the background; 202 with its run id"""
    data = request.get_json(silent=True) or {}
    manifest = data.get("manifest")
    if not manifest:
        return jsonify({"error": "manifest is required"}), 400

    out_root = _out_root()
    run_id = data.get("run_id") or run_history.new_run_id()
    if not run_history.is_valid_run_id(run_id):
        return jsonify({"error": f"Invalid run id: {run_id}"}), 400
    if run_history.get_run(out_root, run_id) is not None:
        return jsonify({"error": f"Run {run_id} already exists"}), 409
    active = background.active_run()
    if active is not None:
        return jsonify({"error": f"Run {active} is still in progress"}), 409

    unknown = sorted(set(data) - set(RUN_OPTIONS) - {"manifest", "weights", "run_id"})
    if unknown:
        return jsonify({"error": f"Unknown run options: {', '.join(unknown)}"}), 400
    overrides = {field: data[key] for key, field in RUN_OPTIONS.items() if key in data}
    out_dir = out_root / run_id
    try:
        run_config = build_run_config(out_dir=str(out_dir), **overrides)
    except SdmaskError as e:
        return jsonify({"error": str(e)}), 400
    except (TypeError, ValueError) as e:
        return jsonify({"error": f"Invalid run options: {e}"}), 400

    if run_history.add_run_entry(out_root, run_id, run_config.mask_mode, out_dir) is None:
        return jsonify({"error": "Failed to record the run"}), 500

    def on_finish(finished_id, status, error):
        run_history.update_run_entry(out_root, finished_id, status, error)

    try:
        background.start_background_run(
            run_id,
            lambda: run_and_report(manifest, data.get("weights"), run_config),
            on_finish=on_finish,
        )
    except background.RunInProgressError as e:
        run_history.update_run_entry(out_root, run_id, "failed", str(e))
        return jsonify({"error": str(e)}), 409
    return jsonify({"run_id": run_id, "status": "queued"}), 202
