"""Command-line front end.

Exit codes: 0 success, 1 runtime failure (IO, transport, backend), 2 usage
error. A flat key=value config file (--config) supplies defaults for any long
flag of the chosen subcommand; explicit flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .backend import Corruption, HttpBackend, MockConfig, run_mock_server
from .errors import ProbelightError
from .geometry import (
    BallSpec,
    CameraCrop,
    EnvironmentMap,
    Material,
    ball_to_envmap,
    crop_perspective,
    render_sphere,
)
from .images import ColorSpace, load_image, save_image
from .metrics import evaluate_sphere_array, evaluate_three_spheres
from .orchestrator import ProbeConfig, probe
from .radiometry import ToneMapParams, linearize, merge_brackets, tonemap

BACKEND_ENV_VAR = "PROBELIGHT_BACKEND"


def _ev_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad EV list {text!r}: {exc}") from exc


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size {text!r}, expected WxH") from exc


def _centered_ball(diameter: int, canvas: int) -> BallSpec:
    return BallSpec(
        center=(canvas / 2.0, canvas / 2.0),
        radius=diameter / 2.0,
        image_size=(canvas, canvas),
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probelight",
        description="HDR light estimation by chrome-ball inpainting",
    )
    parser.add_argument("--version", action="version", version=f"probelight {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, default=None,
                       help="flat key=value file with flag defaults")
        return p

    p = add("probe", "estimate an HDR env map from one image via a backend")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--depth", type=Path, default=None)
    p.add_argument("--backend", default=os.environ.get(BACKEND_ENV_VAR),
                   help=f"backend URL (default ${BACKEND_ENV_VAR})")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int, default=30, help="balls per iteration")
    p.add_argument("--k", type=int, default=2, help="iterations")
    p.add_argument("--strength", type=float, default=0.8)
    p.add_argument("--evs", type=_ev_list, default=(0.0, -2.5, -5.0))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ball-diameter", type=int, default=256)
    p.add_argument("--canvas", type=int, default=1024)
    p.add_argument("--env-height", type=int, default=128)
    p.add_argument("--ev-min", type=float, default=None,
                   help="EV of the dark prompt endpoint (default min(-5, evs))")

    p = add("merge-hdr", "merge LDR exposure brackets into an HDR image")
    p.add_argument("images", type=Path, nargs="+")
    p.add_argument("--evs", type=_ev_list, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("tonemap", "percentile tone map an HDR image to PNG")
    p.add_argument("image", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--gamma", type=float, default=2.4)
    p.add_argument("--percentile", type=float, default=99.0)
    p.add_argument("--target", type=float, default=0.9)

    p = add("unwrap", "unwrap a chrome-ball image into an equirect env map")
    p.add_argument("ball", type=Path)
    p.add_argument("--diameter", type=int, default=None,
                   help="ball diameter in px (default min(W, H))")
    p.add_argument("--height", type=int, default=128, help="output env height")
    p.add_argument("--out", type=Path, required=True)

    p = add("render-sphere", "render a probe sphere under an env map")
    p.add_argument("env", type=Path)
    p.add_argument("--material", choices=[m.value for m in Material], required=True)
    p.add_argument("--diameter", type=int, default=256)
    p.add_argument("--out", type=Path, required=True)

    p = add("crop-pano", "perspective crop out of an equirect env map")
    p.add_argument("env", type=Path)
    p.add_argument("--vfov", type=float, default=60.0)
    p.add_argument("--size", type=_size, default=(256, 192), help="WxH")
    p.add_argument("--azimuth", type=float, default=0.0)
    p.add_argument("--elevation", type=float, default=0.0)
    p.add_argument("--out", type=Path, required=True)

    p = add("evaluate", "compare predicted vs ground-truth env maps")
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--protocol", choices=["three-sphere", "array"], default="three-sphere")
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--cols", type=int, default=5)
    p.add_argument("--out", type=Path, default=None, help="write the JSON report here")

    p = add("mock-serve", "serve the deterministic mock backend over HTTP")
    p.add_argument("--env", type=Path, required=True, help="ground-truth env map (PFM)")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--corrupt-fraction", type=float, default=0.0)
    p.add_argument("--corruption", choices=[c.value for c in Corruption],
                   default=Corruption.CHECKERBOARD.value)
    p.add_argument("--ball-diameter", type=int, default=256)
    p.add_argument("--canvas", type=int, default=1024)
    p.add_argument("--ev-min", type=float, default=-5.0)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, args: argparse.Namespace,
                       argv: list[str]) -> None:
    """Overlay config-file values onto args for flags absent from argv."""
    sub_actions = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    subparser = sub_actions.choices[args.command]
    by_dest = {a.dest: a for a in subparser._actions}
    try:
        lines = args.config.read_text().splitlines()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            parser.error(f"config line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        action = by_dest.get(dest)
        if action is None or dest in ("config", "help"):
            parser.error(f"config line {lineno}: unknown key {key!r}")
        if any(opt in argv for opt in action.option_strings):
            continue  # explicit flag wins
        try:
            converted = action.type(value) if action.type else value
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(f"config line {lineno}: {exc}")
        if action.choices is not None and converted not in action.choices:
            parser.error(f"config line {lineno}: {converted!r} not in {action.choices}")
        setattr(args, dest, converted)


# ---------------------------------------------------------------------------
# handlers


def _cmd_probe(args: argparse.Namespace) -> int:
    if not args.backend:
        print(f"probe: no backend given (--backend or ${BACKEND_ENV_VAR})", file=sys.stderr)
        return 2
    evs = tuple(args.evs)
    ev_min = args.ev_min if args.ev_min is not None else min(-5.0, *evs)
    cfg = ProbeConfig(
        n_balls=args.n,
        iterations=args.k,
        strength=args.strength,
        ev_list=evs,
        ev_min=ev_min,
        ball_spec=_centered_ball(args.ball_diameter, args.canvas),
        base_seed=args.seed,
        env_height=args.env_height,
    )
    image = load_image(args.input)
    depth = load_image(args.depth) if args.depth else None
    env = probe(image, HttpBackend(args.backend), cfg, depth=depth)
    save_image(env.image, args.out)
    print(f"wrote {args.out} ({env.width}x{env.height})")
    return 0


def _cmd_merge_hdr(args: argparse.Namespace) -> int:
    images = [load_image(p) for p in args.images]
    hdr = merge_brackets(images, list(args.evs))
    save_image(hdr, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_tonemap(args: argparse.Namespace) -> int:
    hdr = load_image(args.image)
    params = ToneMapParams(gamma=args.gamma, percentile=args.percentile, target=args.target)
    save_image(tonemap(hdr, params), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_unwrap(args: argparse.Namespace) -> int:
    ball = load_image(args.ball)
    if ball.space is ColorSpace.LDR_SRGB:
        ball = linearize(ball)
    diameter = args.diameter or min(ball.width, ball.height)
    spec = BallSpec(
        center=(ball.width / 2.0, ball.height / 2.0),
        radius=diameter / 2.0,
        image_size=(ball.width, ball.height),
    )
    env = ball_to_envmap(ball, spec, args.height)
    save_image(env.image, args.out)
    print(f"wrote {args.out} ({env.width}x{env.height})")
    return 0


def _cmd_render_sphere(args: argparse.Namespace) -> int:
    env = EnvironmentMap(load_image(args.env))
    spec = _centered_ball(args.diameter, args.diameter)
    out = render_sphere(env, Material(args.material), spec)
    save_image(out, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_crop_pano(args: argparse.Namespace) -> int:
    env = EnvironmentMap(load_image(args.env))
    cam = CameraCrop(
        vfov_deg=args.vfov,
        azimuth_deg=args.azimuth,
        elevation_deg=args.elevation,
        out_size=args.size,
    )
    save_image(crop_perspective(env, cam), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    pred = EnvironmentMap(load_image(args.pred))
    gt = EnvironmentMap(load_image(args.gt))
    if args.protocol == "three-sphere":
        report = evaluate_three_spheres(pred, gt)
    else:
        report = evaluate_sphere_array(pred, gt, rows=args.rows, cols=args.cols)
    print(report.to_table())
    if args.out:
        args.out.write_text(report.to_json() + "\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_mock_serve(args: argparse.Namespace) -> int:
    env = EnvironmentMap(load_image(args.env))
    cfg = MockConfig(
        env_map=env,
        ball_spec=_centered_ball(args.ball_diameter, args.canvas),
        corrupt_fraction=args.corrupt_fraction,
        corruption=Corruption(args.corruption),
        ev_min=args.ev_min,
    )
    run_mock_server(cfg, args.port)
    return 0


_HANDLERS = {
    "probe": _cmd_probe,
    "merge-hdr": _cmd_merge_hdr,
    "tonemap": _cmd_tonemap,
    "unwrap": _cmd_unwrap,
    "render-sphere": _cmd_render_sphere,
    "crop-pano": _cmd_crop_pano,
    "evaluate": _cmd_evaluate,
    "mock-serve": _cmd_mock_serve,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        _apply_config_file(parser, args, argv)
    try:
        return _HANDLERS[args.command](args)
    except ProbelightError as exc:
        print(f"probelight {args.command}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"probelight {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
