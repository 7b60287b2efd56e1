#!/usr/bin/env python3
"""Build a small chrome-ball inpainting training set.

Every radiometric step runs through the `probelight` CLI, which is the
supported interface between the two packages: LDR brackets are merged into an
HDR panorama with `merge-hdr`, scene context comes from `crop-pano`, the
ground-truth ball from `render-sphere`, and all LDR outputs from `tonemap`.
This script only fabricates bracket PNGs, composites arrays, and writes
metadata.

Per sample the output directory contains:

  input.png        scene crop, ball region painted neutral gray
  mask.png         inpainting disk
  depth.png        painted depth in the probe's runtime convention
                   (1.0 on the ball disk, 0.0 elsewhere)
  target_ev*.png   scene with the true mirror ball, tonemapped per EV
  sample.json      prompt, EVs, and embedding interpolation weights

The exposure targets reuse one tonemapping anchor: `tonemap --target t`
applies scale s = t^gamma / P(percentile), so scaling the target by
2^(ev/gamma) is exactly an ev-stop exposure shift of the same image.

Real training runs swap the fabricated panoramas for an HDRI collection and
the painted depth for a monocular depth estimator; the layout stays the same.
"""

from __future__ import annotations

import argparse
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
from PIL import Image

GAMMA = 2.4
EV_MIN = -5.0
PROMPT = "a perfect mirrored reflective chrome ball sphere"
NEGATIVE_PROMPT = "matte, diffuse, flat, dull"

# Fabricated-bracket exposures; the darkest must leave the sun unclipped.
BRACKET_EVS = (0.0, -5.0)
SUN_PEAK = 28.0


def run_cli(*argv: str) -> None:
    subprocess.run(
        [sys.executable, "-m", "probelight", *argv],
        check=True,
        stdout=subprocess.DEVNULL,
    )


# ---------------------------------------------------------------------------
# PFM interchange (standard format: little-endian, rows bottom to top)


def read_pfm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    stream = io.BytesIO(data)
    magic = stream.readline().split()[0]
    if magic not in (b"PF", b"Pf"):
        raise ValueError(f"{path} is not a PFM file")
    width, height = (int(t) for t in stream.readline().split())
    scale = float(stream.readline())
    channels = 3 if magic == b"PF" else 1
    endian = "<" if scale < 0 else ">"
    raster = np.frombuffer(
        stream.read(width * height * channels * 4), dtype=f"{endian}f4"
    )
    return raster.reshape(height, width, channels)[::-1].astype(np.float32)


def write_pfm(path: Path, arr: np.ndarray) -> None:
    height, width, channels = arr.shape
    magic = b"PF" if channels == 3 else b"Pf"
    header = b"%s\n%d %d\n%.1f\n" % (magic, width, height, -1.0)
    path.write_bytes(header + arr[::-1].astype("<f4").tobytes())


# ---------------------------------------------------------------------------
# Panorama fabrication


def synth_radiance(height: int, rng: np.random.Generator) -> np.ndarray:
    """Equirect radiance field: graded sky, textured ground, one sun blob."""
    width = 2 * height
    v = (np.arange(height) + 0.5) / height
    u = (np.arange(width) + 0.5) / width
    vv, uu = np.meshgrid(v, u, indexing="ij")

    sky = np.empty((height, width, 3), dtype=np.float64)
    tint = rng.uniform(0.7, 1.0, size=3)
    sky[:] = (0.03 + 0.22 * (1.0 - vv))[:, :, None] * tint

    ground = vv > 0.55
    texture = 0.05 + 0.1 * rng.random((height, width, 1))
    sky = np.where(ground[:, :, None], texture * rng.uniform(0.5, 1.0, 3), sky)

    sun_u = rng.uniform(0.0, 1.0)
    sun_v = rng.uniform(0.15, 0.4)
    du = np.minimum(np.abs(uu - sun_u), 1.0 - np.abs(uu - sun_u))  # wrap
    dist2 = du**2 + (vv - sun_v) ** 2
    sun = SUN_PEAK * np.exp(-dist2 / (2 * 0.015**2))
    return (sky + sun[:, :, None] * np.array([1.0, 0.95, 0.85])).astype(np.float32)


def save_bracket(path: Path, radiance: np.ndarray, ev: float) -> None:
    ldr = np.clip((radiance * 2.0**ev) ** (1.0 / GAMMA), 0.0, 1.0)
    quantized = np.rint(ldr * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path, format="PNG")


# ---------------------------------------------------------------------------
# Sample assembly


def disk_mask(size: int) -> np.ndarray:
    c = size / 2.0
    x = np.arange(size) + 0.5
    a = (x - c) / c
    return (a[None, :] ** 2 + a[:, None] ** 2) <= 1.0


def ev_token(ev: float) -> str:
    return f"{ev:g}".replace("-", "m").replace(".", "p")


def build_sample(
    index: int, out_dir: Path, args, rng: np.random.Generator
) -> dict:
    work = out_dir / f"sample_{index:03d}"
    work.mkdir(parents=True, exist_ok=True)

    radiance = synth_radiance(args.pano_height, rng)
    for ev in BRACKET_EVS:
        save_bracket(work / f"bracket_{ev_token(ev)}.png", radiance, ev)
    run_cli(
        "merge-hdr",
        *(str(work / f"bracket_{ev_token(ev)}.png") for ev in BRACKET_EVS),
        "--evs",
        ",".join(str(ev) for ev in BRACKET_EVS),
        "--out",
        str(work / "pano.pfm"),
    )

    # Crop orientation is fixed to the ball render's view axis; scene variety
    # comes from the panorama itself.
    run_cli(
        "crop-pano",
        str(work / "pano.pfm"),
        "--vfov",
        str(rng.uniform(50.0, 70.0)),
        "--size",
        f"{args.crop_size}x{args.crop_size}",
        "--out",
        str(work / "crop.pfm"),
    )
    run_cli(
        "render-sphere",
        str(work / "pano.pfm"),
        "--material",
        "mirror",
        "--diameter",
        str(args.ball_diameter),
        "--out",
        str(work / "ball.pfm"),
    )

    crop = read_pfm(work / "crop.pfm")
    ball = read_pfm(work / "ball.pfm")
    d = args.ball_diameter
    top = (args.crop_size - d) // 2
    left = (args.crop_size - d) // 2
    disk = disk_mask(d)

    composite = crop.copy()
    patch = composite[top : top + d, left : left + d]
    patch[disk] = ball[disk]
    write_pfm(work / "composite.pfm", composite)

    evs = [float(t) for t in args.evs.split(",")]
    targets = {}
    for ev in evs:
        name = f"target_ev{ev_token(ev)}.png"
        run_cli(
            "tonemap",
            str(work / "composite.pfm"),
            "--target",
            str(0.9 * 2.0 ** (ev / GAMMA)),
            "--out",
            str(work / name),
        )
        targets[str(ev)] = name

    # The input frame is the EV0 view with the ball repainted neutral: the
    # content under the mask is discarded at full denoising strength anyway.
    run_cli("tonemap", str(work / "composite.pfm"), "--out", str(work / "input.png"))
    ev0 = Image.open(work / "input.png").convert("RGB")
    input_arr = np.asarray(ev0).copy()
    input_arr[top : top + d, left : left + d][disk] = 128
    Image.fromarray(input_arr, mode="RGB").save(work / "input.png")

    full_mask = np.zeros((args.crop_size, args.crop_size), dtype=np.uint8)
    full_mask[top : top + d, left : left + d][disk] = 255
    Image.fromarray(full_mask, mode="L").save(work / "mask.png")
    # Depth matches what the probe paints at inference time: 1.0 on the disk,
    # 0.0 background. Swap in a monocular estimator for real scenes.
    Image.fromarray(full_mask, mode="L").save(work / "depth.png")

    meta = {
        "prompt": PROMPT,
        "negative_prompt": NEGATIVE_PROMPT,
        "ev_min": EV_MIN,
        "evs": evs,
        "embed_weights": [ev / EV_MIN if ev else 0.0 for ev in evs],
        "input": "input.png",
        "mask": "mask.png",
        "depth": "depth.png",
        "targets": targets,
    }
    (work / "sample.json").write_text(json.dumps(meta, indent=2) + "\n")
    for scratch in ("crop.pfm", "ball.pfm"):
        (work / scratch).unlink()
    return {"dir": work.name, **meta}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="training_set")
    parser.add_argument("--samples", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--pano-height", type=int, default=128)
    parser.add_argument("--crop-size", type=int, default=256)
    parser.add_argument("--ball-diameter", type=int, default=128)
    parser.add_argument("--evs", default="0,-2.5,-5")
    args = parser.parse_args(argv)
    if args.ball_diameter >= args.crop_size:
        parser.error("--ball-diameter must be smaller than --crop-size")

    out_dir = Path(args.out)
    rng = np.random.default_rng(args.seed)
    samples = [build_sample(i, out_dir, args, rng) for i in range(args.samples)]
    (out_dir / "index.json").write_text(json.dumps(samples, indent=2) + "\n")
    print(f"wrote {len(samples)} samples to {out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
