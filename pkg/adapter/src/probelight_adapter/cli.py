from __future__ import annotations

import argparse
import socket
import sys

import uvicorn

from .config import AdapterConfig
from .errors import ModelLoadError
from .pipeline import make_pipeline
from .server import build_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probelight-adapter",
        description="Serve a diffusion inpainting backend over HTTP.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8411, help="0 picks a free port")
    parser.add_argument(
        "--pipeline",
        choices=("stub", "diffusers"),
        default="stub",
        help="stub is deterministic and weight-free; diffusers needs the "
        "optional diffusion extras installed",
    )
    parser.add_argument("--model", default=None, help="diffusers model identifier")
    parser.add_argument("--lora", default=None, help="path to LoRA weights")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    kwargs = {"device": args.device, "lora_path": args.lora}
    if args.model is not None:
        kwargs["model"] = args.model
    config = AdapterConfig(**kwargs)
    pipeline = make_pipeline(args.pipeline, config)

    # Refuse to serve before the model is usable: a half-up backend that
    # answers health checks but 500s every request is worse than no backend.
    try:
        pipeline.load()
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    app = build_app(pipeline)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((args.host, args.port))
    host, port = sock.getsockname()[:2]
    print(f"adapter listening on http://{host}:{port}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return 0


if __name__ == "__main__":
    sys.exit(main())
