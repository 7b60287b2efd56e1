"""HTTP inpainting backend for chrome-ball light probes."""

from .config import AdapterConfig
from .embeddings import (
    DARK_SUFFIX,
    StubTextEncoder,
    dark_prompt,
    interpolate_embeddings,
)
from .errors import AdapterError, InferenceError, ModelLoadError, RequestError
from .pipeline import DiffusersPipeline, StubPipeline, make_pipeline
from .server import build_app

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "DARK_SUFFIX",
    "DiffusersPipeline",
    "InferenceError",
    "ModelLoadError",
    "RequestError",
    "StubPipeline",
    "StubTextEncoder",
    "build_app",
    "dark_prompt",
    "interpolate_embeddings",
    "make_pipeline",
]

__version__ = "0.1.0"
