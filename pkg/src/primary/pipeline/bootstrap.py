#!/usr/bin/env python3
"""
Seeded weights for running the pipeline without trained models
"""

from typing import Dict, Iterable, Optional

import numpy as np

from src.primary.masking.mgnet import MGNetConfig, random_params
from src.primary.network.config import NetworkConfig
from src.primary.network.detector import quantize_detector, random_weights
from src.primary.utils.logger import get_logger

logger = get_logger("pipeline")

CALIBRATION_FRAMES = 2


def synthetic_frames(net: NetworkConfig, seed: int, count: int = CALIBRATION_FRAMES):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield rng.uniform(0.0, 1.0, size=net.input_shape()).astype(np.float32)


def init_weights(net: NetworkConfig, seed: int = 0, precision: Optional[str] = None,
                 mgnet_config: Optional[MGNetConfig] = None,
                 calibration_frames: Optional[Iterable[np.ndarray]] = None) -> Dict[str, np.ndarray]:
    """
    Random detector weights (float32, or int8 with calibrated scales) plus
    random MGNet parameters, all derived from one seed.
    """
    precision = precision or net.precision
    tensors = random_weights(net, seed)
    if precision == "int8":
        frames = calibration_frames if calibration_frames is not None else synthetic_frames(net, seed + 1)
        tensors = quantize_detector(net, tensors, frames)
    tensors.update(random_params(mgnet_config or MGNetConfig.from_settings(), seed=seed + 2).to_tensors())
    logger.info(f"Initialised {precision} detector and MGNet weights from seed {seed}")
    return tensors
