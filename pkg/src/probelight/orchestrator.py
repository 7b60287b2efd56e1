"""End-to-end probe pipeline: iterative ball inpainting and HDR assembly.

One exposure bracket runs the iterative-inpainting loop: k rounds of N
backend calls whose ball crops are median-reduced and composited back, then a
single final call. The first round always uses denoising strength 1.0 (there
is no ball yet); later rounds and the final call use cfg.strength. Seeds are
fully deterministic: round i uses base_seed + (i-1)*N + j for j in 0..N-1,
the final call uses base_seed + k*N, and bracket e offsets everything by
e * 1_000_000.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import numpy as np
from PIL import Image

from .aggregation import ball_mask, composite, paint_depth_circle, pixelwise_median
from .backend import InpaintRequest, InpaintResponse
from .errors import ConfigError, RangeError
from .geometry import BallSpec, EnvironmentMap, ball_to_envmap
from .images import ColorSpace, PixelMask, RasterImage, decode_png, encode_png
from .radiometry import merge_brackets

__all__ = [
    "DEFAULT_PROMPT",
    "DEFAULT_NEGATIVE_PROMPT",
    "EV_SEED_STRIDE",
    "InpaintingBackend",
    "ProbeConfig",
    "prompt_weight",
    "prepare_input",
    "iterative_inpaint",
    "probe",
]

DEFAULT_PROMPT = "a perfect mirrored reflective chrome ball sphere"
DEFAULT_NEGATIVE_PROMPT = "matte, diffuse, flat, dull"
EV_SEED_STRIDE = 1_000_000


class InpaintingBackend(Protocol):
    def inpaint(self, req: InpaintRequest) -> InpaintResponse: ...


@dataclass(frozen=True)
class ProbeConfig:
    """Full pipeline configuration (paper defaults)."""

    n_balls: int = 30
    iterations: int = 2
    strength: float = 0.8
    ev_list: tuple[float, ...] = (0.0, -2.5, -5.0)
    ev_min: float = -5.0
    prompt: str = DEFAULT_PROMPT
    negative_prompt: str = DEFAULT_NEGATIVE_PROMPT
    steps: int = 30
    guidance: float = 5.0
    lora_scale: float = 0.75
    ball_spec: BallSpec = field(default_factory=BallSpec)
    base_seed: int = 0
    env_height: int = 128

    def __post_init__(self) -> None:
        if self.n_balls < 1:
            raise ConfigError("n_balls must be >= 1")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not (0.0 < self.strength <= 1.0):
            raise ConfigError(f"strength {self.strength} outside (0, 1]")
        if len(self.ev_list) == 0 or self.ev_list[0] != 0.0:
            raise ConfigError("ev_list must start at 0")
        if any(b >= a for a, b in zip(self.ev_list, self.ev_list[1:])):
            raise ConfigError(f"ev_list must be strictly descending, got {self.ev_list}")
        if self.ev_min >= 0.0 or self.ev_min > min(self.ev_list):
            raise ConfigError("ev_min must be negative and <= min(ev_list)")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be non-negative")
        if self.n_balls * self.iterations + 1 > EV_SEED_STRIDE:
            raise ConfigError("seed schedule would overflow the per-bracket stride")
        if self.env_height < 1:
            raise ConfigError("env_height must be positive")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")


def prompt_weight(ev: float, ev_min: float) -> float:
    """Prompt interpolation weight w = ev / ev_min, in [0, 1].

    w = 0 keeps the base prompt embedding, w = 1 is the fully darkened one.
    """
    if ev_min >= 0.0:
        raise RangeError(f"ev_min must be negative, got {ev_min}")
    if not (ev_min <= ev <= 0.0):
        raise RangeError(f"ev {ev} outside [{ev_min}, 0]")
    return ev / ev_min


def _resize_float(data: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear per-channel resize of (H, W, C) float data to (W, H)."""
    channels = [
        np.asarray(
            Image.fromarray(data[:, :, c].astype(np.float32), mode="F").resize(
                size, Image.BILINEAR
            )
        )
        for c in range(data.shape[2])
    ]
    return np.stack(channels, axis=-1)


def prepare_input(img: RasterImage, spec: BallSpec) -> RasterImage:
    """Aspect-preserving resize plus black letterbox onto the backend canvas."""
    cw, ch = spec.image_size
    if (img.width, img.height) == (cw, ch):
        return img
    scale = min(cw / img.width, ch / img.height)
    nw = max(1, round(img.width * scale))
    nh = max(1, round(img.height * scale))
    resized = np.clip(_resize_float(img.data, (nw, nh)), 0.0, None)
    if img.space is ColorSpace.LDR_SRGB:
        resized = np.clip(resized, 0.0, 1.0)
    canvas = np.zeros((ch, cw, img.channels), dtype=np.float32)
    x0 = (cw - nw) // 2
    y0 = (ch - nh) // 2
    canvas[y0 : y0 + nh, x0 : x0 + nw] = resized
    return RasterImage(canvas, img.space)


def _crop(img: RasterImage, box: tuple[int, int, int, int]) -> RasterImage:
    x0, y0, x1, y1 = box
    return RasterImage(img.data[y0:y1, x0:x1], img.space)


def _paste(base: RasterImage, patch: RasterImage, box: tuple[int, int, int, int],
           mask: PixelMask) -> RasterImage:
    x0, y0, x1, y1 = box
    blended = composite(_crop(base, box), patch, mask)
    out = base.data.copy()
    out[y0:y1, x0:x1] = blended.data
    return RasterImage(out, base.space)


def _gather(backend: InpaintingBackend, reqs: Sequence[InpaintRequest]) -> list[InpaintResponse]:
    """Issue requests with bounded concurrency; results in request order."""
    workers = max(1, int(getattr(backend, "max_in_flight", 4)))
    if workers == 1 or len(reqs) == 1:
        return [backend.inpaint(r) for r in reqs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(backend.inpaint, reqs))


def iterative_inpaint(
    input_img: RasterImage,
    depth: RasterImage,
    backend: InpaintingBackend,
    cfg: ProbeConfig,
    ev: float = 0.0,
) -> RasterImage:
    """Run one bracket's iterative inpainting; returns the final LDR ball crop.

    input_img and depth must already be prepared (canvas-sized, depth circle
    painted); see probe() for the end-to-end path.
    """
    spec = cfg.ball_spec
    if (input_img.width, input_img.height) != spec.image_size:
        raise ConfigError("input image does not match the backend canvas")
    if (depth.width, depth.height) != spec.image_size or depth.channels != 1:
        raise ConfigError("depth map must be single-channel at canvas size")
    if input_img.space is not ColorSpace.LDR_SRGB:
        raise ConfigError("backend input must be an LDR image")

    weight = prompt_weight(ev, cfg.ev_min)
    mask = ball_mask(spec)
    mask_png = encode_png(RasterImage(mask.data, ColorSpace.LDR_SRGB))
    depth_png = encode_png(depth)
    box = spec.crop_box()
    crop_mask = ball_mask(spec.crop_spec())

    def make_request(image_png: bytes, strength: float, seed: int) -> InpaintRequest:
        return InpaintRequest(
            image=image_png,
            mask=mask_png,
            depth=depth_png,
            prompt=cfg.prompt,
            negative_prompt=cfg.negative_prompt,
            embed_weight=weight,
            denoising_strength=strength,
            seed=seed,
            steps=cfg.steps,
            guidance=cfg.guidance,
            lora_scale=cfg.lora_scale,
        )

    current = input_img
    for i in range(1, cfg.iterations + 1):
        strength = 1.0 if i == 1 else cfg.strength
        image_png = encode_png(current)
        seeds = [cfg.base_seed + (i - 1) * cfg.n_balls + j for j in range(cfg.n_balls)]
        reqs = [make_request(image_png, strength, s) for s in seeds]
        responses = _gather(backend, reqs)
        crops = [_crop(decode_png(r.image), box) for r in responses]
        median = pixelwise_median(crops)
        current = _paste(current, median, box, crop_mask)

    final_seed = cfg.base_seed + cfg.iterations * cfg.n_balls
    final = backend.inpaint(make_request(encode_png(current), cfg.strength, final_seed))
    return _crop(decode_png(final.image), box)


def probe(
    input_img: RasterImage,
    backend: InpaintingBackend,
    cfg: ProbeConfig,
    depth: RasterImage | None = None,
) -> EnvironmentMap:
    """Estimate an HDR environment map from a single LDR scene image.

    Runs iterative inpainting once per EV in cfg.ev_list (bracket e offsets
    seeds by e * EV_SEED_STRIDE), merges the LDR ball crops into HDR, and
    unwraps the ball into an equirect map of height cfg.env_height.
    """
    spec = cfg.ball_spec
    prepared = prepare_input(input_img, spec)
    if depth is None:
        w, h = spec.image_size
        blank = RasterImage(np.zeros((h, w, 1), dtype=np.float32), ColorSpace.LDR_SRGB)
        painted = paint_depth_circle(blank, spec, white=True)
    else:
        painted = paint_depth_circle(prepare_input(depth, spec), spec)

    crops: list[RasterImage] = []
    for e, ev in enumerate(cfg.ev_list):
        sub = replace(cfg, base_seed=cfg.base_seed + e * EV_SEED_STRIDE)
        crops.append(iterative_inpaint(prepared, painted, backend, sub, ev))
    merged = merge_brackets(crops, cfg.ev_list)
    return ball_to_envmap(merged, spec.crop_spec(), cfg.env_height)
