#!/usr/bin/env python3
"""
Gradient-descent fitting of the MGNet region head on frozen attention features
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from src.primary.errors import ShapeMismatchError, TrainingDivergedError
from src.primary.utils.logger import get_logger

logger = get_logger("masking")


@dataclass
class HeadTrainingResult:
    weight: np.ndarray
    bias: np.ndarray
    final_loss: float
    loss_history: List[float] = field(default_factory=list)
    lr_history: List[float] = field(default_factory=list)


def region_head_loss_and_grad(weight: np.ndarray, bias: np.ndarray, features: np.ndarray,
                              labels: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Mean binary cross-entropy of sigmoid(features @ weight + bias) against
    labels, and its gradient with respect to weight and bias.

    features: [n, d_in], labels: [n, d_out] in {0, 1}.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    z = x @ w + b
    # log(1 + exp(-|z|)) form keeps large logits finite
    losses = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    loss = float(losses.mean())
    dz = (expit(z) - y) / y.size
    return loss, x.T @ dz, dz.sum(axis=0)


def train_region_head(
    features: np.ndarray,
    labels: np.ndarray,
    epochs: int = 200,
    lr: float = 0.5,
    seed: int = 0,
    initial: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    plateau_patience: Optional[int] = None,
    plateau_min_delta: float = 1e-4,
    plateau_factor: float = 0.1,
) -> HeadTrainingResult:
    """
    Full-batch gradient descent on the region head.

    Args:
        features: [n, N] cls-attention scores, one row per frame
        labels: [n, N] or [n, g, g] boolean region labels
        epochs: number of gradient steps
        lr: learning rate; 0 leaves the weights untouched
        seed: seeds the initial weights when `initial` is not given
        initial: (weight [N, N], bias [N]) to start from
        plateau_patience: epochs without a loss improvement of at least
            plateau_min_delta before lr is multiplied by plateau_factor

    Returns:
        HeadTrainingResult with the weights, per-epoch losses and final loss
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or np.shape(labels)[0] != x.shape[0]:
        raise ShapeMismatchError(f"features {x.shape} and labels {np.shape(labels)} disagree on sample count")
    y = np.asarray(labels, dtype=np.float64).reshape(x.shape[0], -1)

    if initial is not None:
        weight = np.asarray(initial[0], dtype=np.float64).copy()
        bias = np.asarray(initial[1], dtype=np.float64).copy()
    else:
        rng = np.random.default_rng(seed)
        weight = rng.normal(0.0, 0.01, size=(x.shape[1], y.shape[1]))
        bias = np.zeros(y.shape[1])
    if weight.shape != (x.shape[1], y.shape[1]) or bias.shape != (y.shape[1],):
        raise ShapeMismatchError(f"head shapes {weight.shape}/{bias.shape} do not fit {x.shape[1]} -> {y.shape[1]}")

    losses: List[float] = []
    lrs: List[float] = []
    best = np.inf
    stale = 0
    for epoch in range(epochs):
        loss, grad_w, grad_b = region_head_loss_and_grad(weight, bias, x, y)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"region head loss became {loss} at epoch {epoch}")
        losses.append(loss)
        lrs.append(lr)
        weight -= lr * grad_w
        bias -= lr * grad_b

        if plateau_patience is not None:
            if loss < best - plateau_min_delta:
                best = loss
                stale = 0
            else:
                stale += 1
                if stale >= plateau_patience:
                    lr *= plateau_factor
                    stale = 0
                    logger.debug(f"Loss plateaued at epoch {epoch}; learning rate now {lr:g}")

    final_loss, _, _ = region_head_loss_and_grad(weight, bias, x, y)
    if not np.isfinite(final_loss):
        raise TrainingDivergedError(f"region head loss became {final_loss} after training")
    logger.info(f"Trained region head for {epochs} epochs, final BCE {final_loss:.6f}")
    return HeadTrainingResult(
        weight=weight.astype(np.float32),
        bias=bias.astype(np.float32),
        final_loss=float(final_loss),
        loss_history=losses,
        lr_history=lrs,
    )
