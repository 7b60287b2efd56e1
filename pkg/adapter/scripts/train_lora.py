#!/usr/bin/env python3
"""Fine-tune LoRA weights for exposure-aware chrome-ball inpainting.

Consumes the layout written by make_training_set.py. Each optimization step
draws one (sample, ev) pair and conditions on the prompt embedding lerped
toward its darkened variant at weight ev/ev_min, the same interpolation the
adapter applies at serve time, so training and inference see identical
conditioning geometry.

Two choices worth calling out:

  * Timesteps are sampled only from the high-noise end of the schedule
    (--timestep-floor, default the top 50%). At probe time most requests
    continue from denoising_strength < 1, meaning the model is entered at a
    late timestep; spending training budget on near-clean steps it will
    rarely see buys nothing.
  * The loss is masked to the ball disk plus a small dilation. Outside the
    mask the server composites the input back verbatim, so gradients there
    are wasted.

Requires the `diffusion` extra (torch, diffusers, transformers, accelerate,
peft) and a large GPU at the default resolution. Deliberately not exercised
by the test suite.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path


def require_diffusion_stack():
    try:
        import torch  # noqa: F401
        from diffusers import AutoencoderKL, UNet2DConditionModel  # noqa: F401
        from peft import LoraConfig  # noqa: F401
    except ImportError as exc:
        print(
            f"error: diffusion extras not installed ({exc}); "
            'install with `pip install "probelight-adapter[diffusion]"`',
            file=sys.stderr,
        )
        raise SystemExit(1)


def load_index(root: Path) -> list[dict]:
    index = json.loads((root / "index.json").read_text())
    if not index:
        print(f"error: no samples in {root}", file=sys.stderr)
        raise SystemExit(1)
    return index


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("dataset", help="directory from make_training_set.py")
    parser.add_argument("--out", default="lora_weights")
    parser.add_argument("--model", default="stabilityai/stable-diffusion-xl-base-1.0")
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--rank", type=int, default=16)
    parser.add_argument("--lr", type=float, default=1e-4)
    parser.add_argument("--batch", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--timestep-floor",
        type=float,
        default=0.5,
        help="train only on timesteps above this fraction of the schedule",
    )
    parser.add_argument("--device", default="cuda")
    args = parser.parse_args(argv)

    require_diffusion_stack()
    import numpy as np
    import torch
    import torch.nn.functional as F
    from diffusers import DDPMScheduler, StableDiffusionXLInpaintPipeline
    from peft import LoraConfig
    from PIL import Image

    torch.manual_seed(args.seed)
    random.seed(args.seed)
    index = load_index(Path(args.dataset))
    root = Path(args.dataset)

    pipe = StableDiffusionXLInpaintPipeline.from_pretrained(
        args.model, torch_dtype=torch.float32
    ).to(args.device)
    scheduler = DDPMScheduler.from_config(pipe.scheduler.config)
    unet = pipe.unet
    unet.requires_grad_(False)
    unet.add_adapter(
        LoraConfig(
            r=args.rank,
            lora_alpha=args.rank,
            target_modules=["to_q", "to_k", "to_v", "to_out.0"],
        )
    )
    trainable = [p for p in unet.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(trainable, lr=args.lr)

    def load_rgb(path: Path) -> torch.Tensor:
        arr = np.asarray(Image.open(path).convert("RGB"), dtype=np.float32) / 255.0
        return torch.from_numpy(arr).permute(2, 0, 1) * 2.0 - 1.0

    def load_gray(path: Path) -> torch.Tensor:
        arr = np.asarray(Image.open(path).convert("L"), dtype=np.float32) / 255.0
        return torch.from_numpy(arr)[None]

    def encode_conditioning(prompt: str, weight: float):
        base, _, base_pool, _ = pipe.encode_prompt(prompt, device=args.device)
        dark, _, dark_pool, _ = pipe.encode_prompt(
            prompt + ", black dark", device=args.device
        )
        return (
            torch.lerp(base, dark, weight),
            torch.lerp(base_pool, dark_pool, weight),
        )

    t_floor = int(args.timestep_floor * scheduler.config.num_train_timesteps)
    for step in range(args.steps):
        meta = random.choice(index)
        ev_pos = random.randrange(len(meta["evs"]))
        ev = meta["evs"][ev_pos]
        weight = meta["embed_weights"][ev_pos]
        sdir = root / meta["dir"]

        target = load_rgb(sdir / meta["targets"][str(ev)]).to(args.device)[None]
        masked = load_rgb(sdir / meta["input"]).to(args.device)[None]
        mask = load_gray(sdir / meta["mask"]).to(args.device)[None]

        with torch.no_grad():
            latents = pipe.vae.encode(target).latent_dist.sample()
            latents = latents * pipe.vae.config.scaling_factor
            masked_latents = pipe.vae.encode(masked).latent_dist.sample()
            masked_latents = masked_latents * pipe.vae.config.scaling_factor
            embeds, pooled = encode_conditioning(meta["prompt"], weight)

        noise = torch.randn_like(latents)
        timestep = torch.randint(
            t_floor, scheduler.config.num_train_timesteps, (1,), device=args.device
        )
        noisy = scheduler.add_noise(latents, noise, timestep)
        latent_mask = F.interpolate(mask, size=latents.shape[-2:])

        model_input = torch.cat([noisy, latent_mask, masked_latents], dim=1)
        time_ids = torch.zeros((1, 6), device=args.device)
        pred = unet(
            model_input,
            timestep,
            encoder_hidden_states=embeds,
            added_cond_kwargs={"text_embeds": pooled, "time_ids": time_ids},
        ).sample

        loss_mask = torch.clamp(
            F.max_pool2d(latent_mask, 3, stride=1, padding=1), 0.0, 1.0
        )
        loss = (F.mse_loss(pred, noise, reduction="none") * loss_mask).mean()
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        if step % 50 == 0:
            print(f"step {step:5d}  ev {ev:+.1f}  loss {loss.item():.4f}", flush=True)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    unet.save_lora_adapter(out)
    print(f"saved LoRA weights to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
