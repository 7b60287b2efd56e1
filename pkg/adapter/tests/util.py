"""Request builders shared by the adapter tests."""

import io

import numpy as np
from PIL import Image

from probelight.backend import InpaintRequest


def png_rgb(arr: np.ndarray) -> bytes:
    data = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def png_gray(arr: np.ndarray) -> bytes:
    data = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_rgb_png(png: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(png)).convert("RGB")
    return np.asarray(img, dtype=np.float32) / 255.0


def scene_arrays(width: int = 24, height: int = 16, seed: int = 3):
    """Random scene, a rectangular hole mask, and a depth ramp."""
    rng = np.random.default_rng(seed)
    image = rng.uniform(size=(height, width, 3))
    mask = np.zeros((height, width))
    mask[4:12, 6:18] = 1.0
    depth = np.tile(np.linspace(0.0, 1.0, width), (height, 1))
    return image, mask, depth


def make_request(width: int = 24, height: int = 16, seed: int = 3, **overrides):
    image, mask, depth = scene_arrays(width, height, seed)
    fields = dict(
        image=png_rgb(image),
        mask=png_gray(mask),
        depth=png_gray(depth),
        prompt="a perfect mirrored reflective chrome ball sphere",
        negative_prompt="matte, diffuse, flat, dull",
        embed_weight=0.0,
        denoising_strength=1.0,
        seed=11,
        steps=4,
    )
    fields.update(overrides)
    return InpaintRequest(**fields)
