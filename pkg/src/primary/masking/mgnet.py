#!/usr/bin/env python3
"""
MGNet region scorer

A small vision transformer (patch embedding, one pre-norm block) followed by
a scorer that takes the scaled dot products between the cls-token query and
the patch keys, and a linear head mapping those scores to one logit per
region of the 14x14 grid.
"""

from dataclasses import dataclass, fields
from typing import Dict, Mapping, Optional

import numpy as np
from scipy.special import erf, softmax

from src.primary.errors import ConfigurationError, ShapeMismatchError
from src.primary.masking.regions import RegionScores
from src.primary.tensor_engine import matmul

PREFIX = "mgnet"


@dataclass(frozen=True)
class MGNetConfig:
    image_size: int = 224
    patch_size: int = 16
    in_channels: int = 3
    embed_dim: int = 192
    num_heads: int = 3
    mlp_ratio: int = 4
    depth: int = 1
    layer_norm_eps: float = 1e-6

    def __post_init__(self):
        if self.image_size % self.patch_size:
            raise ConfigurationError(f"patch size {self.patch_size} does not divide image size {self.image_size}")
        if self.embed_dim % self.num_heads:
            raise ConfigurationError(f"{self.num_heads} heads do not divide embedding length {self.embed_dim}")
        if self.depth != 1:
            raise ConfigurationError("MGNet runs exactly one transformer block")

    @property
    def grid(self) -> int:
        return self.image_size // self.patch_size

    @property
    def num_patches(self) -> int:
        return self.grid * self.grid

    @property
    def patch_values(self) -> int:
        return self.in_channels * self.patch_size * self.patch_size

    @classmethod
    def from_settings(cls) -> "MGNetConfig":
        from src.primary import settings_manager

        data = settings_manager.load_settings("mgnet")
        known = {f.name for f in fields(cls)}
        return cls(**{key: value for key, value in data.items() if key in known})


@dataclass
class MGNetParams:
    """All MGNet tensors; row-vector convention, y = x @ W + b."""

    config: MGNetConfig
    patch_w: np.ndarray
    patch_b: np.ndarray
    cls_token: np.ndarray
    pos_embed: np.ndarray
    norm1_g: np.ndarray
    norm1_b: np.ndarray
    qkv_w: np.ndarray
    qkv_b: np.ndarray
    proj_w: np.ndarray
    proj_b: np.ndarray
    norm2_g: np.ndarray
    norm2_b: np.ndarray
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray
    norm_g: np.ndarray
    norm_b: np.ndarray
    scorer_q_w: np.ndarray
    scorer_q_b: np.ndarray
    scorer_k_w: np.ndarray
    scorer_k_b: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    def __post_init__(self):
        expected = expected_shapes(self.config)
        for name, shape in expected.items():
            value = np.asarray(getattr(self, name), dtype=np.float32)
            if value.shape != shape:
                raise ShapeMismatchError(f"MGNet {name} has shape {value.shape}, expected {shape}")
            setattr(self, name, value)

    def to_tensors(self) -> Dict[str, np.ndarray]:
        return {f"{PREFIX}.{name}": getattr(self, name) for name in expected_shapes(self.config)}

    def with_head(self, head_w: np.ndarray, head_b: np.ndarray) -> "MGNetParams":
        values = {name: getattr(self, name) for name in expected_shapes(self.config)}
        values.update(head_w=head_w, head_b=head_b)
        return MGNetParams(config=self.config, **values)


def expected_shapes(cfg: MGNetConfig) -> Dict[str, tuple]:
    dim = cfg.embed_dim
    hidden = dim * cfg.mlp_ratio
    n = cfg.num_patches
    return {
        "patch_w": (cfg.patch_values, dim), "patch_b": (dim,),
        "cls_token": (dim,), "pos_embed": (n + 1, dim),
        "norm1_g": (dim,), "norm1_b": (dim,),
        "qkv_w": (dim, 3 * dim), "qkv_b": (3 * dim,),
        "proj_w": (dim, dim), "proj_b": (dim,),
        "norm2_g": (dim,), "norm2_b": (dim,),
        "fc1_w": (dim, hidden), "fc1_b": (hidden,),
        "fc2_w": (hidden, dim), "fc2_b": (dim,),
        "norm_g": (dim,), "norm_b": (dim,),
        "scorer_q_w": (dim, dim), "scorer_q_b": (dim,),
        "scorer_k_w": (dim, dim), "scorer_k_b": (dim,),
        "head_w": (n, n), "head_b": (n,),
    }


def random_params(cfg: Optional[MGNetConfig] = None, seed: int = 0) -> MGNetParams:
    """Truncated-normal-like (std 0.02) init with unit LayerNorm gains, as ViTs start."""
    cfg = cfg or MGNetConfig()
    rng = np.random.default_rng(seed)
    values = {}
    for name, shape in expected_shapes(cfg).items():
        if name.endswith("_g"):
            values[name] = np.ones(shape, dtype=np.float32)
        elif name.endswith("_b"):
            values[name] = np.zeros(shape, dtype=np.float32)
        else:
            values[name] = np.clip(rng.normal(0.0, 0.02, size=shape), -0.04, 0.04).astype(np.float32)
    return MGNetParams(config=cfg, **values)


def params_from_tensors(weights: Mapping[str, np.ndarray], cfg: Optional[MGNetConfig] = None) -> MGNetParams:
    cfg = cfg or MGNetConfig()
    values = {}
    for name in expected_shapes(cfg):
        key = f"{PREFIX}.{name}"
        if key not in weights:
            raise ShapeMismatchError(f"weights have no tensor named {key!r}")
        values[name] = weights[key]
    return MGNetParams(config=cfg, **values)


def has_mgnet(weights: Mapping[str, np.ndarray]) -> bool:
    return any(key.startswith(f"{PREFIX}.") for key in weights)


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    return ((x - mean) / np.sqrt(var + eps) * gain + bias).astype(np.float32)


def gelu(x: np.ndarray) -> np.ndarray:
    return (0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))).astype(np.float32)


def _dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return matmul(x, w) + b


def patchify(frame: np.ndarray, patch_size: int) -> np.ndarray:
    """[C, H, W] -> [N, C*p*p], patches in row-major grid order, values in (C, y, x) order."""
    c, h, w = frame.shape
    rows, cols = h // patch_size, w // patch_size
    blocks = np.asarray(frame, dtype=np.float32).reshape(c, rows, patch_size, cols, patch_size)
    return blocks.transpose(1, 3, 0, 2, 4).reshape(rows * cols, c * patch_size * patch_size)


def _self_attention(x: np.ndarray, params: MGNetParams) -> np.ndarray:
    cfg = params.config
    dim = cfg.embed_dim
    head_dim = dim // cfg.num_heads
    qkv = _dense(x, params.qkv_w, params.qkv_b)
    q, k, v = qkv[:, :dim], qkv[:, dim:2 * dim], qkv[:, 2 * dim:]
    heads = []
    for h in range(cfg.num_heads):
        cols = slice(h * head_dim, (h + 1) * head_dim)
        scores = matmul(q[:, cols], k[:, cols].T) / np.float32(np.sqrt(head_dim))
        attn = softmax(scores, axis=-1).astype(np.float32)
        heads.append(matmul(attn, v[:, cols]))
    return _dense(np.concatenate(heads, axis=1), params.proj_w, params.proj_b)


def encode_tokens(frame224: np.ndarray, params: MGNetParams) -> np.ndarray:
    """Embedded, position-encoded tokens after the transformer block and final norm; cls first."""
    cfg = params.config
    expected = (cfg.in_channels, cfg.image_size, cfg.image_size)
    if tuple(frame224.shape) != expected:
        raise ShapeMismatchError(f"MGNet input shape {frame224.shape}, expected {expected}")
    patches = patchify(frame224, cfg.patch_size)
    tokens = _dense(patches, params.patch_w, params.patch_b)
    x = np.concatenate([params.cls_token[None, :], tokens], axis=0) + params.pos_embed

    x = x + _self_attention(layer_norm(x, params.norm1_g, params.norm1_b, cfg.layer_norm_eps), params)
    hidden = gelu(_dense(layer_norm(x, params.norm2_g, params.norm2_b, cfg.layer_norm_eps), params.fc1_w, params.fc1_b))
    x = x + _dense(hidden, params.fc2_w, params.fc2_b)
    return layer_norm(x, params.norm_g, params.norm_b, cfg.layer_norm_eps)


def cls_attention(q_class: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """q_class . K^T / sqrt(d) for every key row; no softmax."""
    if q_class.ndim != 1 or keys.ndim != 2 or keys.shape[1] != q_class.shape[0]:
        raise ShapeMismatchError(f"query {q_class.shape} and keys {keys.shape} do not align")
    d = q_class.shape[0]
    return (matmul(keys, q_class[:, None])[:, 0] / np.float32(np.sqrt(d))).astype(np.float32)


def mgnet_features(frame224: np.ndarray, params: MGNetParams) -> np.ndarray:
    """Cls-token attention scores over the patch tokens, the input of the region head."""
    x = encode_tokens(frame224, params)
    q = _dense(x[:1], params.scorer_q_w, params.scorer_q_b)[0]
    k = _dense(x[1:], params.scorer_k_w, params.scorer_k_b)
    return cls_attention(q, k)


def region_head(features: np.ndarray, params: MGNetParams) -> np.ndarray:
    return matmul(features.reshape(1, -1), params.head_w)[0] + params.head_b


def mgnet_forward(frame224: np.ndarray, params: MGNetParams) -> RegionScores:
    """Region logits on the grid x grid layout of the 224 canvas."""
    grid = params.config.grid
    logits = region_head(mgnet_features(frame224, params), params)
    return RegionScores(scores=logits.reshape(grid, grid))
