"""Deterministic synthetic inputs for demos, calibration, and tests."""

from __future__ import annotations

import numpy as np

from .geometry import EnvironmentMap, uv_to_dir
from .images import ColorSpace, RasterImage

__all__ = ["make_synthetic_env", "make_scene_image"]


def make_synthetic_env(
    height: int = 128,
    seed: int = 0,
    light_peak: float = 0.0,
    light_dir: tuple[float, float, float] = (0.4, 0.5, -0.768),
    light_sigma_deg: float = 6.0,
) -> EnvironmentMap:
    """Smooth, seam-continuous radiance field, optionally plus a white light.

    The base field mixes a few integer-frequency harmonics in (u, v) per
    channel (range roughly [0.05, 1]); light_peak > 0 adds a Gaussian blob of
    that peak radiance around light_dir. Deterministic in seed.
    """
    rng = np.random.default_rng(seed)
    w = 2 * height
    us = (np.arange(w) + 0.5) / w
    vs = (np.arange(height) + 0.5) / height
    u, v = np.meshgrid(us, vs, indexing="xy")
    base = np.zeros((height, w, 3))
    for c in range(3):
        acc = np.zeros_like(u)
        for _ in range(3):
            fu = rng.integers(1, 4)  # integer u-frequency keeps the seam continuous
            fv = rng.integers(0, 3)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            amp = rng.uniform(0.1, 0.35)
            acc += amp * (1.0 + np.cos(2.0 * np.pi * (fu * u + fv * v) + phase)) / 2.0
        base[:, :, c] = 0.05 + acc
    if light_peak > 0.0:
        d = np.asarray(light_dir, dtype=np.float64)
        d = d / np.linalg.norm(d)
        uv = np.stack([u, v], axis=-1)
        dirs = uv_to_dir(uv)
        cos = np.clip(dirs @ d, -1.0, 1.0)
        sigma = np.deg2rad(light_sigma_deg)
        blob = np.exp((cos - 1.0) / (sigma**2))
        base += light_peak * blob[:, :, None]
    return EnvironmentMap(RasterImage(base.astype(np.float32), ColorSpace.LINEAR_HDR))


def make_scene_image(width: int = 480, height: int = 320, seed: int = 0) -> RasterImage:
    """LDR test scene: smooth gradients with a few rectangles, deterministic."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, 1.0, width)
    ys = np.linspace(0.0, 1.0, height)
    x, y = np.meshgrid(xs, ys, indexing="xy")
    img = np.stack(
        [0.25 + 0.5 * x, 0.2 + 0.4 * y, 0.3 + 0.3 * (1.0 - x) * y], axis=-1
    )
    for _ in range(4):
        x0, y0 = rng.uniform(0.0, 0.8, size=2)
        dw, dh = rng.uniform(0.1, 0.2, size=2)
        color = rng.uniform(0.1, 0.9, size=3)
        sel_x = (x >= x0) & (x < x0 + dw)
        sel_y = (y >= y0) & (y < y0 + dh)
        img[sel_x & sel_y] = color
    return RasterImage(np.clip(img, 0.0, 1.0).astype(np.float32), ColorSpace.LDR_SRGB)
