#!/usr/bin/env python3
"""
Dense multiply-accumulate counts per layer
"""

from typing import List, Tuple, Union

from src.primary.masking.mgnet import MGNetConfig
from src.primary.network.config import NetworkConfig
from src.primary.network.detector import layer_name
from src.primary.network.layers import dense_macs


def _mgnet_macs(cfg: MGNetConfig) -> List[Tuple[str, int]]:
    tokens = cfg.num_patches + 1
    dim = cfg.embed_dim
    hidden = dim * cfg.mlp_ratio
    patch_values = cfg.in_channels * cfg.patch_size * cfg.patch_size
    rows = [("patch_embed", cfg.num_patches * patch_values * dim)]
    for block in range(cfg.depth):
        rows += [
            (f"block{block}.qkv", tokens * dim * 3 * dim),
            # per head T*T*(dim/heads), summed over heads
            (f"block{block}.attn_scores", tokens * tokens * dim),
            (f"block{block}.attn_values", tokens * tokens * dim),
            (f"block{block}.proj", tokens * dim * dim),
            (f"block{block}.fc1", tokens * dim * hidden),
            (f"block{block}.fc2", tokens * hidden * dim),
        ]
    rows += [
        ("scorer.qk", 2 * tokens * dim * dim),
        ("scorer.scores", tokens * tokens * dim),
        ("head", cfg.num_patches * cfg.num_patches),
    ]
    return rows


def count_macs(net: Union[NetworkConfig, MGNetConfig]) -> List[Tuple[str, int]]:
    """(layer name, dense MACs) in layer order, for the detector or MGNet."""
    if isinstance(net, MGNetConfig):
        return _mgnet_macs(net)
    return [
        (layer_name(net, index), dense_macs(spec, out_shape))
        for index, (spec, (_, out_shape)) in enumerate(zip(net.layers, net.layer_shapes()))
    ]


def total_macs(net: Union[NetworkConfig, MGNetConfig]) -> int:
    return sum(macs for _, macs in count_macs(net))
