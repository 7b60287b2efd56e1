"""Luminance extraction, exposure-bracket merging, and tone mapping.

The merge follows the chrome-ball bracket recovery recipe: start from the
darkest exposure, walk toward EV0, and near saturation (luminance above 0.9
after exposure compensation) hand over to the luminance recovered from the
next-darker bracket. Chroma always comes from the EV0 image.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EvOrderError, LengthMismatch, SpaceMismatch
from .images import ColorSpace, RasterImage

__all__ = [
    "LUMA_COEFFS",
    "ToneMapParams",
    "luminance",
    "merge_brackets",
    "tonemap",
    "tonemap_scale",
    "apply_tonemap",
    "linearize",
]

# Rec.709-style luma weights used by the merging algorithm; they sum to 1.
LUMA_COEFFS = np.array([0.21267, 0.71516, 0.07217], dtype=np.float64)

SATURATION_KNEE = 0.9  # luminance where the saturation ramp starts
SATURATION_RAMP = 0.1  # ramp width; fully saturated at knee + ramp


@dataclass(frozen=True)
class ToneMapParams:
    gamma: float = 2.4
    percentile: float = 99.0
    target: float = 0.9


def _require_ldr_rgb(img: RasterImage, what: str) -> None:
    if img.space is not ColorSpace.LDR_SRGB:
        raise SpaceMismatch(f"{what} expects an LDR image, got {img.space}")
    if img.channels != 3:
        raise SpaceMismatch(f"{what} expects 3 channels, got {img.channels}")


def _lum64(img: RasterImage, ev: float, gamma: float) -> np.ndarray:
    lin = np.power(img.data.astype(np.float64), gamma)
    return lin @ LUMA_COEFFS * (2.0 ** (-ev))


def luminance(img: RasterImage, ev: float, gamma: float = 2.4) -> RasterImage:
    """Linear luminance of an LDR image shot at exposure `ev`.

    L = (I^gamma . coeffs) * 2^(-ev); dividing out the exposure puts all
    brackets of one scene on a common luminance scale.
    """
    _require_ldr_rgb(img, "luminance")
    lum = _lum64(img, ev, gamma)
    return RasterImage(lum.astype(np.float32), ColorSpace.LINEAR_LUMINANCE)


def merge_brackets(
    images: Sequence[RasterImage],
    evs: Sequence[float],
    gamma: float = 2.4,
) -> RasterImage:
    """Merge LDR exposure brackets (EVs strictly descending, evs[0] = 0) to HDR.

    Luminance is reconstructed bracket by bracket from darkest to brightest;
    the output is I0^gamma rescaled per pixel to that luminance, so chroma is
    EV0's. Pixels black at EV0 stay black (0/0 ratio defined as 0).
    """
    if len(images) == 0:
        raise LengthMismatch("need at least one bracket")
    if len(images) != len(evs):
        raise LengthMismatch(f"{len(images)} images vs {len(evs)} EVs")
    shape = images[0].data.shape
    for img in images:
        _require_ldr_rgb(img, "merge_brackets")
        if img.data.shape != shape:
            raise DimensionMismatch("brackets must share dimensions")
    evs = [float(e) for e in evs]
    if evs[0] != 0.0:
        raise EvOrderError(f"first EV must be 0, got {evs[0]}")
    if any(not np.isfinite(e) for e in evs):
        raise EvOrderError("EVs must be finite")
    if any(b >= a for a, b in zip(evs, evs[1:])):
        raise EvOrderError(f"EVs must be strictly descending, got {evs}")

    n = len(images)
    lum = lambda i: _lum64(images[i], evs[i], gamma)
    L = lum(n - 1)
    for i in range(n - 2, -1, -1):
        L_i = lum(i)
        exposed = (2.0 ** evs[i]) * L_i
        ramp = np.clip((exposed - SATURATION_KNEE) / SATURATION_RAMP, 0.0, 1.0)
        mask = ramp * (L > L_i)
        L = (1.0 - mask) * L_i + mask * L
    L0 = lum(0)
    ratio = np.divide(L, L0, out=np.zeros_like(L), where=L0 > 0.0)
    hdr = np.power(images[0].data.astype(np.float64), gamma) * ratio[:, :, None]
    return RasterImage(hdr.astype(np.float32), ColorSpace.LINEAR_HDR)


def tonemap_scale(hdr: RasterImage, params: ToneMapParams = ToneMapParams()) -> float:
    """Linear scale s mapping the given percentile of `hdr` to params.target.

    Returns 0.0 when the percentile is ~0 (image effectively black).
    """
    p = float(np.percentile(hdr.data.astype(np.float64), params.percentile))
    if p <= 1e-12:
        return 0.0
    return params.target**params.gamma / p


def apply_tonemap(hdr: RasterImage, scale: float, gamma: float = 2.4) -> RasterImage:
    """clip((scale * hdr)^(1/gamma), 0, 1) as a display-referred image."""
    if hdr.space is ColorSpace.LDR_SRGB:
        raise SpaceMismatch("tonemap input must be linear")
    ldr = np.clip(np.power(scale * hdr.data.astype(np.float64), 1.0 / gamma), 0.0, 1.0)
    return RasterImage(ldr.astype(np.float32), ColorSpace.LDR_SRGB)


def tonemap(hdr: RasterImage, params: ToneMapParams = ToneMapParams()) -> RasterImage:
    """Percentile tone map: params.percentile of the input maps to params.target."""
    return apply_tonemap(hdr, tonemap_scale(hdr, params), params.gamma)


def linearize(ldr: RasterImage, gamma: float = 2.4) -> RasterImage:
    """Undo the display power law: v -> v^gamma, tagged linear HDR."""
    if ldr.space is not ColorSpace.LDR_SRGB:
        raise SpaceMismatch(f"linearize expects an LDR image, got {ldr.space}")
    lin = np.power(ldr.data.astype(np.float64), gamma)
    return RasterImage(lin.astype(np.float32), ColorSpace.LINEAR_HDR)
