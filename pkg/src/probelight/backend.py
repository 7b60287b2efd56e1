"""Inpainting backend wire protocol, deterministic mock, and HTTP transport.

Protocol (JSON over HTTP/1.1):
    POST /v1/inpaint   request/response bodies as documented on the dataclasses
    GET  /v1/health    -> {"status": "ok"}
Images travel as base64-encoded 8-bit PNGs; mask and depth are single-channel.
"""

from __future__ import annotations

import base64
import json
import struct
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

import numpy as np
import requests

from .errors import BackendError, ConfigError, ProbelightError, ProtocolError, TransportError
from .geometry import BallSpec, EnvironmentMap, envmap_to_ball
from .images import ColorSpace, RasterImage, decode_png, encode_png
from .radiometry import apply_tonemap

__all__ = [
    "InpaintRequest",
    "InpaintResponse",
    "Corruption",
    "MockConfig",
    "MockBackend",
    "HttpBackend",
    "send_inpaint",
    "check_health",
    "start_mock_server",
    "run_mock_server",
]

DEFAULT_STEPS = 30
DEFAULT_GUIDANCE = 5.0
DEFAULT_LORA_SCALE = 0.75
_MAX_SEED = 2**64


@dataclass(frozen=True)
class InpaintRequest:
    """One depth-conditioned ball-inpainting call.

    embed_weight is the prompt-interpolation weight ev/ev_min in [0, 1];
    denoising_strength in (0, 1] is the SDEdit start fraction (1.0 = from
    scratch). seed is an unsigned 64-bit value.
    """

    image: bytes
    mask: bytes
    depth: bytes
    prompt: str
    negative_prompt: str
    embed_weight: float
    denoising_strength: float
    seed: int
    steps: int = DEFAULT_STEPS
    guidance: float = DEFAULT_GUIDANCE
    lora_scale: float = DEFAULT_LORA_SCALE

    def __post_init__(self) -> None:
        if not (0.0 <= self.embed_weight <= 1.0):
            raise ValueError(f"embed_weight {self.embed_weight} outside [0, 1]")
        if not (0.0 < self.denoising_strength <= 1.0):
            raise ValueError(f"denoising_strength {self.denoising_strength} outside (0, 1]")
        if not (0 <= self.seed < _MAX_SEED):
            raise ValueError("seed must fit in unsigned 64 bits")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


@dataclass(frozen=True)
class InpaintResponse:
    image: bytes
    backend_id: str
    elapsed_ms: int


def _b64(raw: bytes) -> str:
    return base64.b64encode(raw).decode("ascii")


def request_to_json(req: InpaintRequest) -> dict[str, Any]:
    return {
        "image": _b64(req.image),
        "mask": _b64(req.mask),
        "depth": _b64(req.depth),
        "prompt": req.prompt,
        "negative_prompt": req.negative_prompt,
        "embed_weight": req.embed_weight,
        "denoising_strength": req.denoising_strength,
        "seed": req.seed,
        "steps": req.steps,
        "guidance": req.guidance,
        "lora_scale": req.lora_scale,
    }


def request_from_json(payload: dict[str, Any]) -> InpaintRequest:
    try:
        return InpaintRequest(
            image=base64.b64decode(payload["image"], validate=True),
            mask=base64.b64decode(payload["mask"], validate=True),
            depth=base64.b64decode(payload["depth"], validate=True),
            prompt=str(payload["prompt"]),
            negative_prompt=str(payload["negative_prompt"]),
            embed_weight=float(payload["embed_weight"]),
            denoising_strength=float(payload["denoising_strength"]),
            seed=int(payload["seed"]),
            steps=int(payload.get("steps", DEFAULT_STEPS)),
            guidance=float(payload.get("guidance", DEFAULT_GUIDANCE)),
            lora_scale=float(payload.get("lora_scale", DEFAULT_LORA_SCALE)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed inpaint request: {exc}") from exc


def png_size(payload: bytes) -> tuple[int, int]:
    """(width, height) from a PNG IHDR chunk without a full decode."""
    if len(payload) < 24 or payload[:8] != b"\x89PNG\r\n\x1a\n":
        raise ProtocolError("payload is not a PNG")
    w, h = struct.unpack(">II", payload[16:24])
    return int(w), int(h)


# ---------------------------------------------------------------------------
# deterministic mock


class Corruption(Enum):
    CHECKERBOARD = "checkerboard"
    FLAT_GRAY = "flat-gray"


_CHECKER_CELL = 16
_CHECKER_VALUES = (0.15, 0.85)
_FLAT_GRAY_VALUE = 0.5


@dataclass(frozen=True)
class MockConfig:
    """Ground-truth stand-in for a diffusion backend.

    A request seed is "corrupt" iff (seed mod 1000) / 1000 < corrupt_fraction,
    modeling bad noise draws; corrupt calls return the corruption pattern
    instead of the clean ball render.
    """

    env_map: EnvironmentMap
    ball_spec: BallSpec = field(default_factory=BallSpec)
    corrupt_fraction: float = 0.0
    corruption: Corruption = Corruption.CHECKERBOARD
    ev_min: float = -5.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.corrupt_fraction < 1.0):
            raise ConfigError("corrupt_fraction outside [0, 1)")
        if self.ev_min >= 0.0:
            raise ConfigError("ev_min must be negative")


def seed_is_corrupt(seed: int, corrupt_fraction: float) -> bool:
    return (seed % 1000) / 1000.0 < corrupt_fraction


class MockBackend:
    """In-process mock; deterministic function of (request, config)."""

    backend_id = "mock"
    max_in_flight = 4

    def __init__(self, cfg: MockConfig):
        self.cfg = cfg
        ball, mask = envmap_to_ball(cfg.env_map, cfg.ball_spec)
        self._ball0 = ball.data.astype(np.float64)
        self._inside = mask.data > 0.5
        disk = self._ball0[self._inside]
        # shared EV0 tone-map scale from disk pixels only (canvas is zero-padded)
        p = float(np.percentile(disk, 99.0))
        self._scale = 0.0 if p <= 1e-12 else 0.9**2.4 / p
        self._pattern = self._make_pattern()
        self._fresh_cache: dict[float, np.ndarray] = {}
        self._lock = threading.Lock()

    def _make_pattern(self) -> np.ndarray:
        w, h = self.cfg.ball_spec.image_size
        if self.cfg.corruption is Corruption.FLAT_GRAY:
            return np.full((h, w, 3), _FLAT_GRAY_VALUE, dtype=np.float64)
        ys, xs = np.mgrid[0:h, 0:w]
        parity = ((xs // _CHECKER_CELL) + (ys // _CHECKER_CELL)) % 2
        lo, hi = _CHECKER_VALUES
        return np.where(parity[:, :, None] == 0, lo, hi).astype(np.float64)

    def _fresh_ldr(self, ev: float) -> np.ndarray:
        with self._lock:
            cached = self._fresh_cache.get(ev)
        if cached is not None:
            return cached
        linear = RasterImage((self._ball0 * 2.0**ev).astype(np.float32), ColorSpace.LINEAR_HDR)
        fresh = apply_tonemap(linear, self._scale).data.astype(np.float64)
        with self._lock:
            self._fresh_cache[ev] = fresh
        return fresh

    def inpaint(self, req: InpaintRequest) -> InpaintResponse:
        started = time.monotonic()
        image = decode_png(req.image)
        mask_img = decode_png(req.mask)
        decode_png(req.depth)  # validated but unused by the mock
        w, h = self.cfg.ball_spec.image_size
        if (image.width, image.height) != (w, h):
            raise ProtocolError(
                f"request canvas {image.width}x{image.height} does not match mock {w}x{h}"
            )
        if (mask_img.width, mask_img.height) != (w, h):
            raise ProtocolError("mask dimensions do not match the request image")
        if image.channels != 3:
            raise ProtocolError("request image must be RGB")

        ev = req.embed_weight * self.cfg.ev_min
        fresh = self._fresh_ldr(ev)
        if seed_is_corrupt(req.seed, self.cfg.corrupt_fraction):
            fresh = self._pattern
        gamma_s = req.denoising_strength
        out = image.data.astype(np.float64).copy()
        out[self._inside] = (
            gamma_s * fresh[self._inside] + (1.0 - gamma_s) * out[self._inside]
        )
        payload = encode_png(RasterImage(np.clip(out, 0.0, 1.0).astype(np.float32), ColorSpace.LDR_SRGB))
        elapsed = int((time.monotonic() - started) * 1000)
        return InpaintResponse(image=payload, backend_id=self.backend_id, elapsed_ms=elapsed)


# ---------------------------------------------------------------------------
# HTTP transport


def send_inpaint(
    endpoint: str,
    req: InpaintRequest,
    timeout: float = 120.0,
    retries: int = 2,
    backoff: float = 0.25,
) -> InpaintResponse:
    """POST an inpaint request; retries only transport failures (idempotent)."""
    url = endpoint.rstrip("/") + "/v1/inpaint"
    body = json.dumps(request_to_json(req))
    last_exc: Exception | None = None
    for attempt in range(retries + 1):
        try:
            resp = requests.post(
                url, data=body, headers={"Content-Type": "application/json"}, timeout=timeout
            )
            break
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_exc = exc
            if attempt < retries:
                time.sleep(backoff * 2.0**attempt)
    else:
        raise TransportError(f"backend unreachable at {url}: {last_exc}")

    if resp.status_code != 200:
        try:
            message = resp.json().get("error", resp.text)
        except ValueError:
            message = resp.text
        raise BackendError(f"backend returned {resp.status_code}: {message}")
    try:
        payload = resp.json()
        out = InpaintResponse(
            image=base64.b64decode(payload["image"], validate=True),
            backend_id=str(payload["backend_id"]),
            elapsed_ms=int(payload["elapsed_ms"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed inpaint response: {exc}") from exc
    if png_size(out.image) != png_size(req.image):
        raise ProtocolError("response image dimensions do not match the request")
    return out


def check_health(endpoint: str, timeout: float = 5.0) -> bool:
    url = endpoint.rstrip("/") + "/v1/health"
    try:
        resp = requests.get(url, timeout=timeout)
    except (requests.ConnectionError, requests.Timeout) as exc:
        raise TransportError(f"backend unreachable at {url}: {exc}")
    return resp.status_code == 200 and resp.json().get("status") == "ok"


class HttpBackend:
    """Client-side view of a remote inpainting backend."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 120.0,
        retries: int = 2,
        backoff: float = 0.25,
        max_in_flight: int = 4,
    ):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.max_in_flight = max_in_flight

    def inpaint(self, req: InpaintRequest) -> InpaintResponse:
        return send_inpaint(
            self.endpoint, req, timeout=self.timeout, retries=self.retries, backoff=self.backoff
        )


# ---------------------------------------------------------------------------
# mock HTTP server


def _make_handler(backend: MockBackend):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _reply(self, status: int, payload: dict[str, Any]) -> None:
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:  # noqa: N802 (http.server API)
            if self.path == "/v1/health":
                self._reply(200, {"status": "ok"})
            else:
                self._reply(404, {"error": f"unknown path {self.path}"})

        def do_POST(self) -> None:  # noqa: N802
            if self.path != "/v1/inpaint":
                self._reply(404, {"error": f"unknown path {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length))
                req = request_from_json(payload)
                resp = backend.inpaint(req)
            except (ProtocolError, json.JSONDecodeError) as exc:
                self._reply(400, {"error": str(exc)})
                return
            except ProbelightError as exc:
                self._reply(500, {"error": str(exc)})
                return
            except Exception as exc:  # pragma: no cover - defensive
                self._reply(500, {"error": f"internal error: {exc}"})
                return
            self._reply(
                200,
                {
                    "image": _b64(resp.image),
                    "backend_id": resp.backend_id,
                    "elapsed_ms": resp.elapsed_ms,
                },
            )

        def log_message(self, fmt: str, *args: Any) -> None:  # silence per-request noise
            pass

    return Handler


def start_mock_server(
    cfg: MockConfig, port: int = 0, host: str = "127.0.0.1"
) -> tuple[ThreadingHTTPServer, threading.Thread, int]:
    """Start a mock server on a daemon thread; returns (server, thread, port)."""
    backend = MockBackend(cfg)
    server = ThreadingHTTPServer((host, port), _make_handler(backend))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread, server.server_address[1]


def run_mock_server(cfg: MockConfig, port: int, host: str = "127.0.0.1") -> None:
    """Blocking variant for the CLI; prints the bound port once ready."""
    backend = MockBackend(cfg)
    server = ThreadingHTTPServer((host, port), _make_handler(backend))
    print(f"mock backend listening on http://{host}:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
