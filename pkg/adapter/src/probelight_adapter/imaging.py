"""PNG <-> float array helpers for the wire protocol.

Arrays are float32 in [0, 1].  Color images are (H, W, 3), single-channel
ones (mask, depth) are (H, W).  Encoding rounds to the nearest 8-bit level.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .errors import RequestError


def decode_rgb(png_bytes: bytes) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(png_bytes))
        img.load()
    except Exception as exc:
        raise RequestError(f"could not decode PNG: {exc}") from exc
    arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr


def decode_gray(png_bytes: bytes) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(png_bytes))
        img.load()
    except Exception as exc:
        raise RequestError(f"could not decode PNG: {exc}") from exc
    arr = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
    return arr


def encode_rgb(arr: np.ndarray) -> bytes:
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) array")
    quantized = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(quantized, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
