"""HTTP server translating the inpainting wire protocol onto a pipeline.

Contract notes the clients rely on:

  * /v1/health always answers 200 with a JSON body; "status" is "ok" once
    the pipeline is loaded and "loading" before that.  Clients poll it, so
    it must never 500 or return non-JSON.
  * Every error body is {"error": <message>}: 400 for anything wrong with
    the request (including schema violations), 503 while the model is still
    loading, 500 when inference itself fails.
  * The response image has the same pixel dimensions as the request image.
  * Inference is serialized with a lock; one request runs at a time.
"""

from __future__ import annotations

import base64
import binascii
import threading
import time

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import RequestError
from .imaging import decode_gray, decode_rgb, encode_rgb


class InpaintBody(BaseModel):
    image: str
    mask: str
    depth: str
    prompt: str
    negative_prompt: str = ""
    embed_weight: float = Field(ge=0.0, le=1.0)
    denoising_strength: float = Field(gt=0.0, le=1.0)
    seed: int = Field(ge=0, lt=2**64)
    steps: int = Field(default=30, ge=1)
    guidance: float = 5.0
    lora_scale: float = 0.75


def _b64_png(field: str, value: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except binascii.Error as exc:
        raise RequestError(f"{field} is not valid base64: {exc}") from exc


def build_app(pipeline) -> FastAPI:
    app = FastAPI(title="probelight-adapter", docs_url=None, redoc_url=None)
    inference_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
        msg = first.get("msg", "invalid request")
        detail = f"{loc}: {msg}" if loc else msg
        return JSONResponse(status_code=400, content={"error": detail})

    @app.get("/v1/health")
    def health():
        return {"status": "ok" if pipeline.ready else "loading"}

    @app.post("/v1/inpaint")
    def inpaint(body: InpaintBody):
        if not pipeline.ready:
            return JSONResponse(
                status_code=503, content={"error": "model is still loading"}
            )
        started = time.perf_counter()
        try:
            image = decode_rgb(_b64_png("image", body.image))
            mask = decode_gray(_b64_png("mask", body.mask))
            depth = decode_gray(_b64_png("depth", body.depth))
            if mask.shape != image.shape[:2]:
                raise RequestError(
                    f"mask size {mask.shape[::-1]} does not match "
                    f"image size {image.shape[1::-1]}"
                )
            if depth.shape != image.shape[:2]:
                raise RequestError(
                    f"depth size {depth.shape[::-1]} does not match "
                    f"image size {image.shape[1::-1]}"
                )
            with inference_lock:
                result = pipeline.generate(
                    image=image,
                    mask=mask,
                    depth=depth,
                    prompt=body.prompt,
                    negative_prompt=body.negative_prompt,
                    embed_weight=body.embed_weight,
                    strength=body.denoising_strength,
                    seed=body.seed,
                    steps=body.steps,
                    guidance=body.guidance,
                    lora_scale=body.lora_scale,
                )
        except RequestError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except Exception as exc:
            return JSONResponse(
                status_code=500, content={"error": f"inference failed: {exc}"}
            )
        elapsed_ms = int((time.perf_counter() - started) * 1000.0)
        return {
            "image": base64.b64encode(encode_rgb(result)).decode("ascii"),
            "backend_id": pipeline.backend_id,
            "elapsed_ms": elapsed_ms,
        }

    return app
