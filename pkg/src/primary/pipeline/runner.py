#!/usr/bin/env python3
"""
End-to-end run orchestration

Per sequence: fresh sigma-delta state. Per frame: letterbox, build the
region mask for the configured mode, apply it, step the detector, decode
detections. Sequences may run on parallel workers; every aggregate is
reduced in manifest order.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.primary import background
from src.primary.config import RunConfig, log_configuration
from src.primary.errors import SdmaskError, ShapeMismatchError
from src.primary.masking.artifact import load_static_mask
from src.primary.masking.mgnet import MGNetConfig, MGNetParams, has_mgnet, mgnet_forward, params_from_tensors, random_params
from src.primary.masking.regions import RegionMask, apply_mask, combine, dynamic_mask, region_labels, rescale_mask
from src.primary.metrics.calibrate import default_coefficients
from src.primary.metrics.cost import CostCoefficients, CostReport, build_cost_report, load_coefficients
from src.primary.metrics.quality import frame_sparsity, map50, mask_iou
from src.primary.network.config import NetworkConfig, default_config
from src.primary.network.detect import Detection, decode_detections
from src.primary.network.detector import build_detector
from src.primary.network.events import EventStats
from src.primary.network.sdnn import Sdnn
from src.primary.pipeline.bootstrap import init_weights
from src.primary.pipeline.imageio import to_uint8
from src.primary.pipeline.ingest import Sequence, load_manifest
from src.primary.pipeline.weights import load_weights
from src.primary.sigma_delta import DeltaState, delta_encode
from src.primary.stats_manager import LayerTotals, SequenceStatsCollector, aggregate_layers
from src.primary.tensor_engine import LetterboxTransform, avg_downsample2x, letterbox
from src.primary.utils.logger import debug_log, get_logger

logger = get_logger("pipeline")


@dataclass
class RunModels:
    """Everything loaded once per run and shared read-only by the workers."""

    net: NetworkConfig
    weights: Mapping[str, np.ndarray]
    coefficients: CostCoefficients
    static_mask: Optional[RegionMask] = None
    mgnet: Optional[MGNetParams] = None
    static_k_s: Optional[float] = None  # keep rate the static artifact was built with


@dataclass
class DumpBuffer:
    input: np.ndarray  # uint8 [3, S, S] letterboxed frame
    masked: np.ndarray  # uint8 [3, S, S]
    delta: np.ndarray  # uint8 [S, S], |input events| scaled to 0..255


@dataclass
class FrameResult:
    seq_id: str
    frame_index: int
    stats: EventStats
    detections: List[Detection]
    gt_boxes: List[Tuple[float, float, float, float, int]]
    frame_sparsity: float
    miou: Optional[float] = None
    kept_regions: Optional[np.ndarray] = None


@dataclass
class SequenceResult:
    seq_id: str
    frames: List[FrameResult] = field(default_factory=list)
    dumps: Dict[Tuple[str, int], DumpBuffer] = field(default_factory=dict)


@dataclass
class RunResult:
    config: RunConfig
    net: NetworkConfig
    coefficients: CostCoefficients
    sequences: List[SequenceResult] = field(default_factory=list)
    status: str = "ok"
    error: Optional[str] = None
    static_k_s: Optional[float] = None

    @property
    def frames(self) -> List[FrameResult]:
        return [frame for sequence in self.sequences for frame in sequence.frames]

    @property
    def dumps(self) -> Dict[Tuple[str, int], DumpBuffer]:
        merged: Dict[Tuple[str, int], DumpBuffer] = {}
        for sequence in self.sequences:
            merged.update(sequence.dumps)
        return merged

    def collector(self) -> SequenceStatsCollector:
        collector = SequenceStatsCollector()
        for position, sequence in enumerate(self.sequences):
            collector.add(position, sequence.seq_id, [frame.stats for frame in sequence.frames])
        return collector

    def layer_totals(self) -> List[LayerTotals]:
        return aggregate_layers([frame.stats for frame in self.frames])

    def cost_report(self) -> CostReport:
        frames = self.frames
        return build_cost_report(
            [frame.stats for frame in frames],
            self.coefficients,
            frame_sparsity=self.frame_sparsity(),
        )

    def frame_sparsity(self) -> Optional[float]:
        """Mean over frames."""
        frames = self.frames
        if not frames:
            return None
        return sum(frame.frame_sparsity for frame in frames) / len(frames)

    def frame_sparsity_per_sequence(self) -> Optional[float]:
        """Mean over sequences of each sequence's mean."""
        means = [
            sum(f.frame_sparsity for f in sequence.frames) / len(sequence.frames)
            for sequence in self.sequences if sequence.frames
        ]
        return sum(means) / len(means) if means else None

    def event_sparsity(self) -> Optional[float]:
        frames = self.frames
        neurons = sum(f.stats.total_neurons for f in frames)
        return 1.0 - sum(f.stats.total_events for f in frames) / neurons if neurons else None

    def synaptic_sparsity(self) -> Optional[float]:
        frames = self.frames
        dense = sum(f.stats.total_dense_macs for f in frames)
        return 1.0 - sum(f.stats.total_synops for f in frames) / dense if dense else None

    def input_events(self) -> int:
        return sum(f.stats.input_events for f in self.frames)

    def map50(self) -> Optional[float]:
        frames = self.frames
        return map50([f.detections for f in frames], [f.gt_boxes for f in frames])

    def miou(self) -> Optional[float]:
        values = [f.miou for f in self.frames if f.miou is not None]
        return sum(values) / len(values) if values else None


def load_models(run_config: RunConfig, weights_path=None, net: Optional[NetworkConfig] = None,
                weights: Optional[Mapping[str, np.ndarray]] = None) -> RunModels:
    """Resolve config, weights, coefficients, static mask and MGNet for a run."""
    net = net or default_config()
    if weights is None:
        if weights_path is not None:
            weights = load_weights(weights_path)
        else:
            logger.warning(f"No weights given; using seeded random weights (seed {run_config.seed})")
            weights = init_weights(net, seed=run_config.seed)

    coefficients = load_coefficients(run_config.coeff_path) if run_config.coeff_path else default_coefficients()

    static_mask = None
    static_k_s = None
    if run_config.mask_mode in ("static", "combined"):
        static_mask, meta = load_static_mask(run_config.static_mask_path)
        if meta.get("k_s") is not None:
            static_k_s = float(meta["k_s"])
            if not math.isclose(static_k_s, run_config.k_s):
                logger.warning(
                    f"Static mask {run_config.static_mask_path} was built with k_s {static_k_s}; "
                    f"reporting that instead of the configured {run_config.k_s}"
                )
        if static_mask.extent != (net.input_size, net.input_size):
            raise ShapeMismatchError(
                f"static mask covers {static_mask.extent}, detector input is {net.input_size}x{net.input_size}"
            )
        if static_mask.region_size != run_config.region_size:
            raise ShapeMismatchError(
                f"static mask region size {static_mask.region_size} != configured {run_config.region_size}"
            )

    mgnet = None
    if run_config.mask_mode in ("dynamic", "combined"):
        mgnet_config = MGNetConfig.from_settings()
        if has_mgnet(weights):
            mgnet = params_from_tensors(weights, mgnet_config)
        else:
            logger.warning(f"Weights hold no MGNet tensors; using seeded random parameters (seed {run_config.seed})")
            mgnet = random_params(mgnet_config, seed=run_config.seed)
        if mgnet_config.image_size * 2 != net.input_size:
            raise ShapeMismatchError(
                f"MGNet input {mgnet_config.image_size} is not half the detector input {net.input_size}"
            )

    return RunModels(net=net, weights=weights, coefficients=coefficients, static_mask=static_mask, mgnet=mgnet,
                     static_k_s=static_k_s)


@dataclass
class FrameMask:
    """
    A frame's region mask on the detector canvas, plus the same mask on the
    grid it was predicted on (the MGNet grid for dynamic masks), where its
    mIoU is scored.
    """

    applied: RegionMask
    native: RegionMask

    def scoring_transform(self, transform: LetterboxTransform) -> LetterboxTransform:
        factor = self.native.extent[0] / self.applied.extent[0]
        return transform if factor == 1 else transform.scaled(factor)


def frame_mask(canvas: np.ndarray, run_config: RunConfig, models: RunModels) -> Optional[FrameMask]:
    """The region mask for one letterboxed frame, or None when nothing is masked."""
    mode = run_config.mask_mode
    if mode == "none":
        return None
    if mode == "static":
        return FrameMask(models.static_mask, models.static_mask)
    logits = mgnet_forward(avg_downsample2x(canvas), models.mgnet)
    native = dynamic_mask(logits, run_config.t_reg, run_config.region_size)
    dyn = rescale_mask(native, canvas.shape[1])
    if mode == "dynamic":
        return FrameMask(dyn, native)
    union = combine(models.static_mask, dyn)
    return FrameMask(union, union)


def mask_miou(mask: FrameMask, boxes, transform: LetterboxTransform) -> float:
    """IoU of the mask's native grid against the regions the frame's boxes touch."""
    native = mask.native
    labels = region_labels(boxes, native.shape, native.region_size, mask.scoring_transform(transform))
    return mask_iou(native, labels)


def _delta_image(events: np.ndarray) -> np.ndarray:
    """Per-pixel max |event| over channels scaled so the peak maps to 255."""
    magnitude = np.abs(np.asarray(events, dtype=np.float64)).max(axis=0)
    peak = magnitude.max()
    if peak <= 0:
        return np.zeros(magnitude.shape, dtype=np.uint8)
    return np.rint(magnitude / peak * 255.0).astype(np.uint8)


def process_sequence(sequence: Sequence, run_config: RunConfig, models: RunModels) -> SequenceResult:
    """Run one sequence from a reset state; frames strictly in order."""
    net = models.net
    if run_config.engine == "sdnn":
        sdnn = Sdnn(build_detector(net, models.weights), theta=run_config.theta, input_theta=run_config.input_theta)
        detector = sdnn.detector
    else:
        sdnn = None
        detector = build_detector(net, models.weights)
        # what an input delta encoder would have sent, for dumps only
        dump_encoder = DeltaState(net.input_shape(), theta=0.0, dtype=detector.input_dtype)

    wanted_dumps = {(str(seq), int(index)) for seq, index in run_config.dump_frames}
    result = SequenceResult(seq_id=sequence.seq_id)
    for record in sequence:
        canvas, transform = letterbox(record.load_image(), target=net.input_size)
        mask = frame_mask(canvas, run_config, models)
        masked = apply_mask(canvas, mask.applied) if mask is not None else canvas

        if sdnn is not None:
            head, stats = sdnn.step(masked)
            input_events = sdnn.last_input_events.values
        else:
            head, stats = detector.forward_with_stats(masked)
            input_events = delta_encode(dump_encoder, detector.prepare_input(masked)).values

        detections = decode_detections(head, net.head, run_config.conf_thresh, run_config.nms_iou, net.input_size)
        gt_boxes = [tuple(transform.to_canvas(box)) + (int(box[4]),) for box in record.boxes]

        miou = None
        kept = None
        if mask is not None:
            miou = mask_miou(mask, record.boxes, transform)
            kept = mask.applied.grid
        frame_result = FrameResult(
            seq_id=record.seq_id,
            frame_index=record.frame_index,
            stats=stats,
            detections=detections,
            gt_boxes=gt_boxes,
            frame_sparsity=frame_sparsity(mask.applied) if mask is not None else 0.0,
            miou=miou,
            kept_regions=kept,
        )
        result.frames.append(frame_result)

        key = (record.seq_id, record.frame_index)
        if key in wanted_dumps:
            result.dumps[key] = DumpBuffer(input=to_uint8(canvas), masked=to_uint8(masked),
                                           delta=_delta_image(input_events))
        debug_log(
            f"{record.seq_id}#{record.frame_index}: {len(detections)} detections, "
            f"{stats.input_events} input events, sparsity {frame_result.frame_sparsity:.3f}",
            [layer.events_out for layer in stats.layers],
            component="pipeline",
        )
    return result


def run(manifest, weights_path, run_config: RunConfig, net: Optional[NetworkConfig] = None,
        weights: Optional[Mapping[str, np.ndarray]] = None, split: Optional[str] = "val",
        models: Optional[RunModels] = None) -> RunResult:
    """
    Run the masked detector over every sequence of the manifest split.

    Raises the first module error after recording it on the partial result,
    which is attached to the exception as `partial_result`.
    """
    log_configuration(run_config)
    models = models or load_models(run_config, weights_path, net=net, weights=weights)
    result = RunResult(config=run_config, net=models.net, coefficients=models.coefficients,
                       static_k_s=models.static_k_s)
    done: Dict[int, SequenceResult] = {}

    def worker(position: int, sequence: Sequence) -> SequenceResult:
        logger.info(f"Processing sequence {sequence.seq_id} ({len(sequence)} frames)")
        outcome = process_sequence(sequence, run_config, models)
        done[position] = outcome
        return outcome

    try:
        sequences = load_manifest(manifest, split=split)
        result.sequences = background.map_sequences(worker, sequences, jobs=run_config.jobs)
    except Exception as e:
        result.sequences = [done[k] for k in sorted(done)]
        result.status = "failed"
        result.error = str(e)
        logger.error(f"Run failed after {len(result.sequences)} complete sequences: {e}",
                     exc_info=not isinstance(e, SdmaskError))
        e.partial_result = result
        raise

    logger.info(f"Run finished: {len(result.sequences)} sequences, {len(result.frames)} frames")
    return result
