#!/usr/bin/env python3
"""
Command-line interface for SDMASK
"""

import argparse
import json
import pathlib
import sys
from typing import List, Optional, Sequence, Tuple

from src.primary import __version__
from src.primary.config import ENGINES, MASK_MODES, build_run_config
from src.primary.errors import ConfigurationError, SdmaskError
from src.primary.utils.logger import get_logger, setup_main_logger, update_logging_levels

logger = get_logger("pipeline")


def _dump_spec(value: str) -> Tuple[str, int]:
    """SEQ:FRAME, split on the last colon so sequence ids may contain colons."""
    seq_id, sep, frame = value.rpartition(":")
    if not sep or not seq_id:
        raise argparse.ArgumentTypeError(f"expected SEQ:FRAME, got {value!r}")
    try:
        return seq_id, int(frame)
    except ValueError:
        raise argparse.ArgumentTypeError(f"frame index in {value!r} is not an integer")


def _add_run_options(parser: argparse.ArgumentParser, out_help: str) -> None:
    parser.add_argument("--manifest", required=True, help="JSONL frame manifest")
    parser.add_argument("--weights", help="SDNNW1 weights container (seeded random weights when omitted)")
    parser.add_argument("--config", help="network config JSON (default: the yolo_kp settings)")
    parser.add_argument("--mask", choices=MASK_MODES, help="mask mode (default from run.json: none); static and combined need --static-mask")
    parser.add_argument("--static-mask", dest="static_mask", help="static mask artifact (P5 image)")
    parser.add_argument("--ks", type=float, help="static keep rate in (0, 1]")
    parser.add_argument("--treg", type=float, help="dynamic region threshold in (0, 1)")
    parser.add_argument("--theta", type=float, help="sigma-delta threshold for every layer")
    parser.add_argument("--input-theta", dest="input_theta", type=float, help="threshold of the input encoder")
    parser.add_argument("--coeff", help="cost coefficients JSON (default: calibrated defaults)")
    parser.add_argument("--engine", choices=ENGINES, help="sdnn (event driven) or ann (dense)")
    parser.add_argument("--split", default="val", help="manifest split to evaluate (default: val)")
    parser.add_argument("--out", help=out_help)
    parser.add_argument("--seed", type=int, help="seed for generated weights")
    parser.add_argument("--jobs", type=int, help="sequences processed in parallel")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdmask", description="Sigma-delta detection with input region masking")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--debug", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-static-mask", help="top-k region mask from the train-split box heatmap")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ks", type=float, help="keep rate in (0, 1]")
    p.add_argument("--sparsity", type=float, help="target frame sparsity; sets ks = 1 - sparsity")
    p.add_argument("--region-size", dest="region_size", type=int, default=16)
    p.add_argument("--extent", type=int, default=448, help="detector canvas size")
    p.add_argument("--out", required=True, help="output P5 image; the JSON sidecar is written next to it")

    p = sub.add_parser("run", help="run the masked detector and write the report")
    _add_run_options(p, "report directory")
    p.add_argument("--dump", action="append", type=_dump_spec, default=[], metavar="SEQ:FRAME",
                   help="also write the input, masked and delta images of this frame")

    p = sub.add_parser("dump-delta", help="write the input, masked and delta images of one frame")
    _add_run_options(p, "directory for the images")
    p.add_argument("--seq", required=True, help="sequence id")
    p.add_argument("--frame", required=True, type=int, help="frame index")

    p = sub.add_parser("eval-miou", help="mean IoU of the keep grid against box regions")
    _add_run_options(p, "optional JSON result file")

    p = sub.add_parser("eval-map", help="mAP@0.5 of a run's detections.json")
    p.add_argument("--manifest", required=True)
    p.add_argument("--detections", required=True, help="detections.json of a run")
    p.add_argument("--split", default="val")
    p.add_argument("--input-size", dest="input_size", type=int, default=448)
    p.add_argument("--out", help="optional JSON result file")

    p = sub.add_parser("calibrate", help="fit cost coefficients to measured energy and latency")
    p.add_argument("--observations", help="JSON list of observations, or an object with 'reference_regimes' "
                                           "(default: the shipped reference regimes)")
    p.add_argument("--coeff", help="coefficients JSON used as seeds")
    p.add_argument("--out", help="write the calibrated coefficients JSON here")

    p = sub.add_parser("compare", help="run every mask mode and report gains over 'none'")
    _add_run_options(p, "directory for per-mode reports and compare.json")
    p.add_argument("--modes", nargs="+", choices=MASK_MODES)

    p = sub.add_parser("init-weights", help="write seeded random detector and MGNet weights")
    p.add_argument("--config", help="network config JSON")
    p.add_argument("--precision", choices=("int8", "f32"), help="detector precision (default: from config)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-head", help="fit the MGNet region head on the train split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--patience", type=int, help="epochs without improvement before the learning rate drops")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="updated weights container")

    p = sub.add_parser("serve", help="serve run reports over HTTP")
    p.add_argument("--out", help="output root (default: the general output_root setting)")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    return parser


def _run_config(args, out_dir: Optional[str] = None, dump_frames: Sequence[Tuple[str, int]] = ()):
    overrides = {
        "mask_mode": args.mask,
        "static_mask_path": args.static_mask,
        "k_s": args.ks,
        "t_reg": args.treg,
        "theta": args.theta,
        "input_theta": args.input_theta,
        "coeff_path": args.coeff,
        "engine": args.engine,
        "seed": args.seed,
        "jobs": args.jobs,
        "out_dir": out_dir,
    }
    if dump_frames:
        overrides["dump_frames"] = tuple(dump_frames)
    return build_run_config(**overrides)


def _network(args):
    from src.primary.network.config import default_config, load_config

    return load_config(args.config) if getattr(args, "config", None) else default_config()


def _emit(data, out: Optional[str] = None) -> None:
    from src.primary.stats_manager import write_json_atomic

    if out:
        write_json_atomic(pathlib.Path(out), data)
    print(json.dumps(data, indent=2, sort_keys=True))


def cmd_build_static_mask(args) -> int:
    from src.primary import settings_manager
    from src.primary.masking.regions import keep_rate_for_sparsity
    from src.primary.pipeline.offline import build_static_mask

    if args.sparsity is not None and args.ks is not None:
        raise ConfigurationError("give either --ks or --sparsity, not both")
    k_s = keep_rate_for_sparsity(args.sparsity) if args.sparsity is not None else args.ks
    if k_s is None:
        k_s = float(settings_manager.get_setting("run", "k_s", 0.2))
    mask = build_static_mask(args.manifest, k_s, region_size=args.region_size, extent=args.extent, out=args.out)
    _emit({"out": args.out, "k_s": k_s, "kept": mask.kept, "regions": int(mask.grid.size)})
    return 0


def cmd_run(args) -> int:
    from src.primary.pipeline.dumps import dump_delta
    from src.primary.pipeline.report import run_and_report

    run_config = _run_config(args, out_dir=args.out, dump_frames=args.dump)
    result = run_and_report(args.manifest, args.weights, run_config, net=_network(args), split=args.split)
    for seq_id, frame_index in args.dump:
        dump_delta(result, seq_id, frame_index, pathlib.Path(run_config.out_dir) / "dumps")
    logger.info(f"Report written to {run_config.out_dir}")
    return 0


def cmd_dump_delta(args) -> int:
    from src.primary.pipeline.dumps import dump_delta
    from src.primary.pipeline.runner import run

    run_config = _run_config(args, out_dir=args.out, dump_frames=[(args.seq, args.frame)])
    result = run(args.manifest, args.weights, run_config, net=_network(args), split=args.split)
    paths = dump_delta(result, args.seq, args.frame, run_config.out_dir)
    _emit({name: str(path) for name, path in paths.items()})
    return 0


def cmd_eval_miou(args) -> int:
    from src.primary.pipeline.evaluate import evaluate_miou

    run_config = _run_config(args)
    _emit(evaluate_miou(args.manifest, run_config, args.weights, split=args.split, net=_network(args)), args.out)
    return 0


def cmd_eval_map(args) -> int:
    from src.primary.pipeline.evaluate import evaluate_map

    _emit(evaluate_map(args.manifest, args.detections, split=args.split, input_size=args.input_size), args.out)
    return 0


def cmd_calibrate(args) -> int:
    from src.primary import settings_manager
    from src.primary.metrics.calibrate import Observation, calibrate
    from src.primary.metrics.cost import CostCoefficients, load_coefficients
    from src.primary.stats_manager import load_json, write_json_atomic

    defaults = settings_manager.load_settings("coefficients")
    if args.observations:
        data = load_json(args.observations)
        if data is None:
            raise ConfigurationError(f"cannot read observations from {args.observations}")
    else:
        data = defaults
    regimes = data.get("reference_regimes", []) if isinstance(data, dict) else data
    if args.coeff:
        seeds = load_coefficients(args.coeff)
    elif isinstance(data, dict) and "seeds" in data:
        seeds = CostCoefficients.from_json(data["seeds"])
    else:
        seeds = CostCoefficients.from_json(defaults["seeds"]) if "seeds" in defaults else None

    result = calibrate([Observation.from_dict(r) for r in regimes], seeds=seeds)
    if args.out:
        write_json_atomic(pathlib.Path(args.out), result.coefficients.to_json())
    _emit(result.to_dict())
    return 0


def cmd_compare(args) -> int:
    from src.primary.pipeline.compare import compare_modes

    run_config = _run_config(args, out_dir=args.out)
    comparison = compare_modes(args.manifest, args.weights, run_config, run_config.out_dir, net=_network(args),
                               modes=args.modes)
    _emit({mode: entry["improvement"] for mode, entry in comparison["modes"].items()})
    return 0


def cmd_init_weights(args) -> int:
    from src.primary.pipeline.bootstrap import init_weights
    from src.primary.pipeline.weights import save_weights

    tensors = init_weights(_network(args), seed=args.seed, precision=args.precision)
    save_weights(args.out, tensors)
    _emit({"out": args.out, "tensors": len(tensors)})
    return 0


def cmd_train_head(args) -> int:
    from src.primary.pipeline.offline import train_head
    from src.primary.pipeline.weights import load_weights, save_weights

    job = train_head(args.manifest, load_weights(args.weights), epochs=args.epochs, lr=args.lr, seed=args.seed,
                     plateau_patience=args.patience)
    save_weights(args.out, job.weights)
    _emit({"out": args.out, "samples": job.samples, "final_loss": job.result.final_loss})
    return 0


def cmd_serve(args) -> int:
    from src.primary.web_server import serve

    serve(args.out, host=args.host, port=args.port, debug=args.debug or None)
    return 0


COMMANDS = {
    "build-static-mask": cmd_build_static_mask,
    "run": cmd_run,
    "dump-delta": cmd_dump_delta,
    "eval-miou": cmd_eval_miou,
    "eval-map": cmd_eval_map,
    "calibrate": cmd_calibrate,
    "compare": cmd_compare,
    "init-weights": cmd_init_weights,
    "train-head": cmd_train_head,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; 2 for SDMASK errors, 1 for anything unexpected."""
    args = build_parser().parse_args(argv)
    setup_main_logger(debug_mode=True if args.debug else None)
    if args.debug:
        update_logging_levels(True)
    try:
        return COMMANDS[args.command](args)
    except SdmaskError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {e}")
        return 1
