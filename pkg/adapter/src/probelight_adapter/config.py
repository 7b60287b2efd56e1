from __future__ import annotations

from dataclasses import dataclass

from .errors import ModelLoadError


@dataclass(frozen=True)
class AdapterConfig:
    """Knobs for the real diffusion pipeline; the stub ignores most of them."""

    model: str = "stabilityai/stable-diffusion-xl-base-1.0"
    controlnet: str = "diffusers/controlnet-depth-sdxl-1.0"
    lora_path: str | None = None
    device: str = "cpu"
    steps: int = 30
    guidance: float = 5.0

    def __post_init__(self) -> None:
        if not self.model:
            raise ModelLoadError("model identifier must be non-empty")
        if self.steps < 1:
            raise ModelLoadError("steps must be >= 1")
