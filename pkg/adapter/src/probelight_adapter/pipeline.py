"""Inpainting pipelines behind the adapter server.

Two implementations share one calling convention:

  * StubPipeline — dependency-free, deterministic, fast.  It exercises every
    contract the server cares about (masked compositing, strength blending,
    exposure conditioning through prompt-embedding interpolation, depth
    awareness) without any model weights, so the whole wire protocol can be
    tested in CI.
  * DiffusersPipeline — the real SDXL + depth-ControlNet inpainting path.
    Heavy imports happen inside load(); if they fail the server must refuse
    to start rather than serve garbage.

generate() takes float32 arrays in [0, 1]: image (H, W, 3), mask and depth
(H, W).  It returns a float32 (H, W, 3) array where pixels with mask <= 0.5
are the input pixels untouched.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .config import AdapterConfig
from .embeddings import StubTextEncoder, dark_prompt, interpolate_embeddings
from .errors import ModelLoadError


def _digest_int(data: bytes) -> int:
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "big")


class StubPipeline:
    backend_id = "adapter-stub"

    def __init__(self, config: AdapterConfig | None = None) -> None:
        self.config = config or AdapterConfig()
        self.encoder = StubTextEncoder()
        self.ready = False

    def load(self) -> None:
        self.ready = True

    def generate(
        self,
        *,
        image: np.ndarray,
        mask: np.ndarray,
        depth: np.ndarray,
        prompt: str,
        negative_prompt: str,
        embed_weight: float,
        strength: float,
        seed: int,
        steps: int,
        guidance: float,
        lora_scale: float,
    ) -> np.ndarray:
        base = self.encoder.encode(prompt)
        dark = self.encoder.encode(dark_prompt(prompt))
        mixed = interpolate_embeddings(base, dark, embed_weight)

        rng = np.random.default_rng(
            [
                seed,
                _digest_int(mixed.tobytes()),
                _digest_int(negative_prompt.encode("utf-8")),
                int(round(guidance * 1000)),
                int(round(lora_scale * 1000)),
                steps,
            ]
        )

        h, w = image.shape[:2]
        yy, xx = np.meshgrid(
            np.linspace(0.0, 1.0, h), np.linspace(0.0, 1.0, w), indexing="ij"
        )
        synth = np.empty((h, w, 3), dtype=np.float64)
        for c in range(3):
            fx = rng.uniform(1.0, 4.0)
            fy = rng.uniform(1.0, 4.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            synth[:, :, c] = 0.5 + 0.25 * np.sin(
                2.0 * np.pi * (fx * xx + fy * yy) + phase
            )

        # Exposure conditioning dims the synthesized content; depth pushes
        # nearer (brighter-depth) regions up so the two hints are observable.
        brightness = 1.0 - 0.8 * embed_weight
        synth *= brightness * (0.6 + 0.4 * depth[:, :, None])

        edited = strength * synth + (1.0 - strength) * image.astype(np.float64)
        out = np.where(mask[:, :, None] > 0.5, edited, image.astype(np.float64))
        return np.clip(out, 0.0, 1.0).astype(np.float32)


class DiffusersPipeline:
    """SDXL inpainting with a depth ControlNet, conditioned the same way.

    Not exercised by the test suite: the model weights are multi-GB and the
    diffusers stack is an optional extra.  Kept import-light so merely
    constructing it never drags torch in.
    """

    backend_id = "adapter-diffusers"

    def __init__(self, config: AdapterConfig | None = None) -> None:
        self.config = config or AdapterConfig()
        self.ready = False
        self._pipe = None
        self._torch = None

    def load(self) -> None:
        try:
            import torch
            from diffusers import ControlNetModel, StableDiffusionXLControlNetInpaintPipeline
        except ImportError as exc:
            raise ModelLoadError(f"diffusion dependencies unavailable: {exc}") from exc

        cfg = self.config
        try:
            controlnet = ControlNetModel.from_pretrained(
                cfg.controlnet, torch_dtype=torch.float16
            )
            pipe = StableDiffusionXLControlNetInpaintPipeline.from_pretrained(
                cfg.model, controlnet=controlnet, torch_dtype=torch.float16
            )
            if cfg.lora_path is not None:
                pipe.load_lora_weights(cfg.lora_path)
            pipe.to(cfg.device)
        except Exception as exc:
            raise ModelLoadError(f"could not load {cfg.model}: {exc}") from exc

        self._torch = torch
        self._pipe = pipe
        self.ready = True

    def _prompt_embeddings(self, prompt: str, embed_weight: float):
        """Encode the prompt and its dark variant, then lerp the embeddings."""
        torch = self._torch
        pipe = self._pipe
        base, base_neg, base_pool, base_neg_pool = pipe.encode_prompt(
            prompt=prompt, device=pipe.device, num_images_per_prompt=1
        )
        dark, _, dark_pool, _ = pipe.encode_prompt(
            prompt=dark_prompt(prompt), device=pipe.device, num_images_per_prompt=1
        )
        w = float(embed_weight)
        mixed = torch.lerp(base, dark, w)
        mixed_pool = torch.lerp(base_pool, dark_pool, w)
        return mixed, base_neg, mixed_pool, base_neg_pool

    def generate(
        self,
        *,
        image: np.ndarray,
        mask: np.ndarray,
        depth: np.ndarray,
        prompt: str,
        negative_prompt: str,
        embed_weight: float,
        strength: float,
        seed: int,
        steps: int,
        guidance: float,
        lora_scale: float,
    ) -> np.ndarray:
        if not self.ready:
            raise ModelLoadError("pipeline not loaded")
        torch = self._torch
        pipe = self._pipe

        embeds, neg_embeds, pooled, neg_pooled = self._prompt_embeddings(
            prompt, embed_weight
        )
        generator = torch.Generator(device="cpu").manual_seed(seed % (1 << 63))
        from PIL import Image

        h, w = image.shape[:2]
        pil_image = Image.fromarray(np.rint(image * 255.0).astype(np.uint8))
        pil_mask = Image.fromarray(np.rint(mask * 255.0).astype(np.uint8))
        pil_depth = Image.fromarray(
            np.repeat(np.rint(depth * 255.0).astype(np.uint8)[:, :, None], 3, axis=2)
        )

        result = pipe(
            prompt_embeds=embeds,
            negative_prompt_embeds=neg_embeds,
            pooled_prompt_embeds=pooled,
            negative_pooled_prompt_embeds=neg_pooled,
            image=pil_image,
            mask_image=pil_mask,
            control_image=pil_depth,
            strength=strength,
            num_inference_steps=steps,
            guidance_scale=guidance,
            cross_attention_kwargs={"scale": lora_scale},
            generator=generator,
            height=h,
            width=w,
            output_type="np",
        )
        out = np.asarray(result.images[0], dtype=np.float32)
        # The diffusion pass regenerates the whole frame; honor the protocol's
        # untouched-outside-mask guarantee at the pixel level regardless.
        return np.where(mask[:, :, None] > 0.5, out, image).astype(np.float32)


def make_pipeline(kind: str, config: AdapterConfig | None = None):
    if kind == "stub":
        return StubPipeline(config)
    if kind == "diffusers":
        return DiffusersPipeline(config)
    raise ValueError(f"unknown pipeline kind: {kind!r}")
