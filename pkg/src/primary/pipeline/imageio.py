#!/usr/bin/env python3
"""
Binary PPM (P6) / PGM (P5) reading and writing, maxval 255 only
"""

import pathlib

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.primary.errors import ImageFormatError

_MAGIC_CHANNELS = {b"P6": 3, b"P5": 1}


def _header(path: pathlib.Path):
    """(magic, width, height, maxval) from a netpbm header, comments skipped."""
    tokens = []
    with open(path, "rb") as f:
        data = f.read(512)
    i = 0
    while len(tokens) < 4 and i < len(data):
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif data[i:i + 1].isspace():
            i += 1
        else:
            start = i
            while i < len(data) and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
                i += 1
            tokens.append(data[start:i])
    if len(tokens) < 4:
        raise ImageFormatError(f"{path}: truncated netpbm header")
    try:
        return tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as e:
        raise ImageFormatError(f"{path}: malformed netpbm header") from e


def image_size(path):
    """(height, width) from the header alone."""
    path = pathlib.Path(path)
    try:
        magic, width, height, _ = _header(path)
    except OSError as e:
        raise ImageFormatError(f"cannot read image {path}: {e}") from e
    if magic not in _MAGIC_CHANNELS:
        raise ImageFormatError(f"{path}: expected binary P6 or P5, got {magic!r}")
    return height, width


def read_image(path) -> np.ndarray:
    """uint8 [C, H, W]: C = 3 for P6, 1 for P5."""
    path = pathlib.Path(path)
    try:
        magic, width, height, maxval = _header(path)
    except OSError as e:
        raise ImageFormatError(f"cannot read image {path}: {e}") from e
    if magic not in _MAGIC_CHANNELS:
        raise ImageFormatError(f"{path}: expected binary P6 or P5, got {magic!r}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: maxval must be 255, got {maxval}")
    try:
        with Image.open(path) as img:
            img.load()
            pixels = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise ImageFormatError(f"{path}: {e}") from e
    if pixels.ndim == 2:
        pixels = pixels[:, :, None]
    if pixels.shape != (height, width, _MAGIC_CHANNELS[magic]):
        raise ImageFormatError(f"{path}: decoded shape {pixels.shape} does not match header {width}x{height}")
    return np.ascontiguousarray(pixels.transpose(2, 0, 1))


def to_float(pixels: np.ndarray) -> np.ndarray:
    return (pixels.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def to_uint8(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(frame, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def read_ppm(path) -> np.ndarray:
    """float32 [3, H, W] frame scaled to [0, 1]."""
    pixels = read_image(path)
    if pixels.shape[0] != 3:
        raise ImageFormatError(f"{path}: expected a P6 colour image")
    return to_float(pixels)


def read_pgm(path) -> np.ndarray:
    """uint8 [H, W]."""
    pixels = read_image(path)
    if pixels.shape[0] != 1:
        raise ImageFormatError(f"{path}: expected a P5 greyscale image")
    return pixels[0]


def write_ppm(path, pixels: np.ndarray) -> None:
    """Write uint8 [3, H, W] as P6."""
    if pixels.dtype != np.uint8 or pixels.ndim != 3 or pixels.shape[0] != 3:
        raise ImageFormatError(f"P6 output needs uint8 [3,H,W], got {pixels.dtype} {pixels.shape}")
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(pixels.transpose(1, 2, 0))).save(path, format="PPM")


def write_pgm(path, pixels: np.ndarray) -> None:
    """Write uint8 [H, W] as P5."""
    if pixels.dtype != np.uint8 or pixels.ndim != 2:
        raise ImageFormatError(f"P5 output needs uint8 [H,W], got {pixels.dtype} {pixels.shape}")
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(pixels)).save(path, format="PPM")
