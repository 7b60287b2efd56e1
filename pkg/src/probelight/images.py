"""Raster image values, colorimetric tags, and PNG/PFM codecs.

LDR images follow the gamma-2.4 power-law convention used throughout the
pipeline (not the piecewise sRGB curve). PFM files are written with a
negative scale header (little-endian) and bottom-up row order.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ChannelMismatch, FormatError, IoError, SpaceMismatch

__all__ = [
    "ColorSpace",
    "RasterImage",
    "PixelMask",
    "load_image",
    "save_image",
    "encode_png",
    "decode_png",
    "encode_pfm",
    "decode_pfm",
]


class ColorSpace(Enum):
    LDR_SRGB = "ldr_srgb"          # display-referred, samples in [0, 1]
    LINEAR_HDR = "linear_hdr"      # scene-referred radiance, >= 0
    LINEAR_LUMINANCE = "linear_luminance"  # single-channel linear luminance


@dataclass(frozen=True)
class RasterImage:
    """Immutable float32 image of shape (height, width, channels)."""

    data: np.ndarray
    space: ColorSpace

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float32))
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ChannelMismatch(f"expected 1 or 3 channels, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image samples must be finite")
        if self.space is ColorSpace.LDR_SRGB:
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ValueError("LDR samples must lie in [0, 1]")
        elif arr.min() < 0.0:
            raise ValueError("linear samples must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class PixelMask:
    """Immutable float32 mask of shape (height, width), values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float32))
        if arr.ndim != 2:
            raise ChannelMismatch(f"mask must be 2-d, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("mask values must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


# ---------------------------------------------------------------------------
# PNG (8-bit, gamma-2.4 display referred)

_PIL_OK_MODES = {"L", "RGB"}
_PIL_CONVERT = {"RGBA": "RGB", "P": "RGB", "LA": "L", "1": "L"}


def decode_png(payload: bytes) -> RasterImage:
    """Decode 8-bit PNG bytes to an LDR image (sample -> value/255)."""
    try:
        pil = Image.open(io.BytesIO(payload))
        pil.load()
    except Exception as exc:
        raise FormatError(f"invalid PNG payload: {exc}") from exc
    if pil.mode in _PIL_CONVERT:
        pil = pil.convert(_PIL_CONVERT[pil.mode])
    if pil.mode not in _PIL_OK_MODES:
        raise FormatError(f"unsupported PNG mode {pil.mode!r} (8-bit L/RGB only)")
    arr = np.asarray(pil, dtype=np.float32) / np.float32(255.0)
    return RasterImage(arr, ColorSpace.LDR_SRGB)


def encode_png(img: RasterImage) -> bytes:
    """Encode an LDR image as 8-bit PNG (value -> round(v * 255))."""
    if img.space is not ColorSpace.LDR_SRGB:
        raise SpaceMismatch(f"PNG encodes LDR images only, got {img.space}")
    q = np.rint(img.data.astype(np.float64) * 255.0).astype(np.uint8)
    if img.channels == 1:
        pil = Image.fromarray(q[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(q, mode="RGB")
    out = io.BytesIO()
    pil.save(out, format="PNG")
    return out.getvalue()


# ---------------------------------------------------------------------------
# PFM (float32, "PF" color / "Pf" grayscale, negative scale = little-endian)


def decode_pfm(payload: bytes) -> RasterImage:
    stream = io.BytesIO(payload)

    def token() -> bytes:
        # whitespace-delimited header token, comments not part of the format
        out = b""
        while True:
            ch = stream.read(1)
            if ch == b"":
                raise FormatError("truncated PFM header")
            if ch.isspace():
                if out:
                    return out
                continue
            out += ch

    magic = token()
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise FormatError(f"not a PFM file (magic {magic!r})")
    try:
        width = int(token())
        height = int(token())
        scale = float(token())
    except ValueError as exc:
        raise FormatError(f"malformed PFM header: {exc}") from exc
    if width <= 0 or height <= 0 or scale == 0.0:
        raise FormatError("PFM header values out of range")
    count = width * height * channels
    raw = stream.read(4 * count)
    if len(raw) != 4 * count:
        raise FormatError("truncated PFM pixel data")
    endian = "<" if scale < 0.0 else ">"
    flat = np.frombuffer(raw, dtype=np.dtype(endian + "f4"), count=count)
    arr = flat.reshape(height, width, channels).astype(np.float32)
    arr = arr[::-1, :, :]  # rows are stored bottom-up
    if abs(scale) != 1.0:
        arr = arr * np.float32(abs(scale))
    space = ColorSpace.LINEAR_HDR if channels == 3 else ColorSpace.LINEAR_LUMINANCE
    try:
        return RasterImage(arr, space)
    except ValueError as exc:
        raise FormatError(f"PFM samples out of range: {exc}") from exc


def encode_pfm(img: RasterImage) -> bytes:
    if img.channels == 3:
        magic = b"PF"
    else:
        magic = b"Pf"
    header = b"%s\n%d %d\n%.1f\n" % (magic, img.width, img.height, -1.0)
    body = img.data[::-1, :, :].astype("<f4").tobytes()
    return header + body


# ---------------------------------------------------------------------------
# File IO


def load_image(path: str | Path) -> RasterImage:
    """Load a PNG (-> LDR) or PFM (-> linear HDR) image from disk."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in (".png", ".pfm"):
        raise FormatError(f"unsupported image extension {suffix!r}")
    try:
        payload = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return decode_png(payload) if suffix == ".png" else decode_pfm(payload)


def save_image(img: RasterImage, path: str | Path) -> None:
    """Save to PNG (LDR images only) or PFM, chosen by extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        payload = encode_png(img)
    elif suffix == ".pfm":
        payload = encode_pfm(img)
    else:
        raise FormatError(f"unsupported image extension {suffix!r}")
    try:
        path.write_bytes(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
