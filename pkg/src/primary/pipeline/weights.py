#!/usr/bin/env python3
"""
SDNNW1 weights container

Layout (little-endian): magic b"SDNNW1\\0", then per tensor
  u32 name length | UTF-8 name | u8 dtype (0=f32, 1=i8, 2=i32) |
  u32 ndim | u32 dim x ndim | raw payload
until end of file.
"""

import pathlib
import struct
from typing import Dict, Mapping

import numpy as np

from src.primary.errors import WeightsFormatError
from src.primary.utils.logger import get_logger

logger = get_logger("pipeline")

MAGIC = b"SDNNW1\0"
DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("i1"), 2: np.dtype("<i4")}
CODE_FOR_DTYPE = {np.dtype(np.float32): 0, np.dtype(np.int8): 1, np.dtype(np.int32): 2}


def encode_weights(tensors: Mapping[str, np.ndarray]) -> bytes:
    """Serialize tensors in name order."""
    chunks = [MAGIC]
    for name in sorted(tensors):
        array = np.asarray(tensors[name])
        code = CODE_FOR_DTYPE.get(np.dtype(array.dtype.type))
        if code is None:
            raise WeightsFormatError(f"tensor {name!r} has unsupported dtype {array.dtype}")
        encoded_name = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack("<BI", code, array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(np.ascontiguousarray(array, dtype=DTYPE_CODES[code]).tobytes())
    return b"".join(chunks)


def decode_weights(data: bytes, source: str = "<bytes>") -> Dict[str, np.ndarray]:
    if not data.startswith(MAGIC):
        raise WeightsFormatError(f"{source}: missing SDNNW1 magic")
    tensors: Dict[str, np.ndarray] = {}
    offset = len(MAGIC)

    def take(size: int, what: str) -> bytes:
        nonlocal offset
        if offset + size > len(data):
            raise WeightsFormatError(f"{source}: truncated while reading {what} at byte {offset}")
        chunk = data[offset:offset + size]
        offset += size
        return chunk

    while offset < len(data):
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        try:
            name = take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError as e:
            raise WeightsFormatError(f"{source}: tensor name is not UTF-8 at byte {offset}") from e
        code, ndim = struct.unpack("<BI", take(5, f"{name} header"))
        if code not in DTYPE_CODES:
            raise WeightsFormatError(f"{source}: tensor {name!r} has unknown dtype code {code}")
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim, f"{name} dims"))
        dtype = DTYPE_CODES[code]
        count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        payload = take(count * dtype.itemsize, f"{name} payload")
        if name in tensors:
            raise WeightsFormatError(f"{source}: duplicate tensor {name!r}")
        tensors[name] = np.frombuffer(payload, dtype=dtype).astype(dtype.type).reshape(shape)
    return tensors


def save_weights(path, tensors: Mapping[str, np.ndarray]) -> pathlib.Path:
    path = pathlib.Path(path)
    data = encode_weights(tensors)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_name(path.name + ".tmp")
    with open(temp_file, "wb") as f:
        f.write(data)
    temp_file.replace(path)
    logger.info(f"Wrote {len(tensors)} tensors to {path} ({len(data)} bytes)")
    return path


def load_weights(path) -> Dict[str, np.ndarray]:
    path = pathlib.Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise WeightsFormatError(f"cannot read weights {path}: {e}") from e
    tensors = decode_weights(data, source=str(path))
    logger.info(f"Loaded {len(tensors)} tensors from {path}")
    return tensors
