"""
Region masking: static masks from training heatmaps, dynamic masks from the
MGNet scorer, and their union applied to frames
"""

from src.primary.masking.regions import (
    Heatmap,
    RegionMask,
    RegionScores,
    aggregate_regions,
    apply_mask,
    build_heatmap,
    combine,
    dynamic_mask,
    keep_count,
    keep_rate_for_sparsity,
    region_labels,
    rescale_mask,
    static_topk,
)
from src.primary.masking.mgnet import (
    MGNetConfig,
    MGNetParams,
    cls_attention,
    mgnet_features,
    mgnet_forward,
    params_from_tensors,
    random_params,
)
from src.primary.masking.train import HeadTrainingResult, region_head_loss_and_grad, train_region_head

__all__ = [
    "Heatmap", "RegionMask", "RegionScores", "aggregate_regions", "apply_mask", "build_heatmap",
    "combine", "dynamic_mask", "keep_count", "keep_rate_for_sparsity", "region_labels",
    "rescale_mask", "static_topk",
    "MGNetConfig", "MGNetParams", "cls_attention", "mgnet_features", "mgnet_forward",
    "params_from_tensors", "random_params",
    "HeadTrainingResult", "region_head_loss_and_grad", "train_region_head",
]
