"""Stack reduction and mask compositing primitives."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ChannelMismatch, DimensionMismatch, EmptyStack, SpaceMismatch
from .geometry import BallSpec, _disk_grid
from .images import ColorSpace, PixelMask, RasterImage

__all__ = ["pixelwise_median", "composite", "ball_mask", "paint_depth_circle"]


def pixelwise_median(stack: Sequence[RasterImage]) -> RasterImage:
    """Per-pixel, per-channel median; even stacks average the middle two."""
    if len(stack) == 0:
        raise EmptyStack("median of an empty stack")
    first = stack[0]
    for img in stack[1:]:
        if img.data.shape != first.data.shape:
            raise DimensionMismatch("stack images must share dimensions")
        if img.space is not first.space:
            raise SpaceMismatch("stack images must share a colorspace")
    med = np.median(np.stack([img.data for img in stack], axis=0), axis=0)
    return RasterImage(med.astype(np.float32), first.space)


def composite(base: RasterImage, overlay: RasterImage, mask: PixelMask) -> RasterImage:
    """(1 - m) * base + m * overlay; mask broadcasts over channels."""
    if base.data.shape != overlay.data.shape:
        raise DimensionMismatch("base and overlay must share dimensions")
    if base.space is not overlay.space:
        raise SpaceMismatch("base and overlay must share a colorspace")
    if mask.data.shape != base.data.shape[:2]:
        raise DimensionMismatch("mask must match image dimensions")
    m = mask.data.astype(np.float64)[:, :, None]
    out = (1.0 - m) * base.data.astype(np.float64) + m * overlay.data.astype(np.float64)
    return RasterImage(out.astype(np.float32), base.space)


def ball_mask(spec: BallSpec) -> PixelMask:
    """Binary disk mask: 1 where the pixel center is within the radius."""
    _, _, inside = _disk_grid(spec)
    return PixelMask(inside.astype(np.float32))


def paint_depth_circle(depth: RasterImage, spec: BallSpec, white: bool = False) -> RasterImage:
    """Fill the ball disk of a depth map with its global maximum (nearest).

    With white=True the disk is painted 1.0 instead, for the constant maps
    used when no depth estimate exists.
    """
    if depth.channels != 1:
        raise ChannelMismatch(f"depth maps are single-channel, got {depth.channels}")
    if depth.data.shape[1::-1] != spec.image_size:
        raise DimensionMismatch("depth map does not match spec.image_size")
    fill = 1.0 if white else float(depth.data.max())
    _, _, inside = _disk_grid(spec)
    out = depth.data.copy()
    out[inside, :] = fill
    return RasterImage(out, depth.space)
