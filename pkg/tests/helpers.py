"""
Builders shared by the test modules
"""

import json

import numpy as np

from src.primary.pipeline.imageio import write_ppm


def toy_config_dict(input_size=448, width=4, theta=0.0, precision="int8"):
    """Four cheap stride-2 convs and a stride-2 1x1 head: grid input/32, one anchor, one class."""
    layers = [{"kind": "conv", "cin": 3, "cout": width, "k": 3, "stride": 2, "pad": 1, "theta": theta}]
    for _ in range(3):
        layers.append({"kind": "conv", "cin": width, "cout": width, "k": 3, "stride": 2, "pad": 1, "theta": theta})
    layers.append({"kind": "conv", "cin": width, "cout": 6, "k": 1, "stride": 2, "pad": 0, "act": "none",
                   "theta": theta})
    return {
        "input": input_size,
        "precision": precision,
        "layers": layers,
        "head": {"anchors": [[64, 64]], "classes": 1},
    }


def make_frame(seed, size=448):
    """Random uint8 [3, size, size] frame."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(3, size, size), dtype=np.uint8)


def write_dataset(root, sequences, boxes=None, split="val"):
    """
    Write frames and a manifest.

    sequences: {seq_id: [uint8 frame, ...]}; boxes: optional {seq_id: [boxes per frame]}
    Returns the manifest path.
    """
    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for seq_id, frames in sequences.items():
        for index, frame in enumerate(frames):
            name = f"{seq_id}_{index:03d}.ppm"
            write_ppm(root / name, frame)
            frame_boxes = boxes[seq_id][index] if boxes else []
            lines.append(json.dumps({
                "seq_id": seq_id,
                "frame_index": index,
                "image_path": name,
                "split": split,
                "boxes": frame_boxes,
            }))
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
