"""Prompt-embedding interpolation for exposure-conditioned inpainting.

The exposure knob works in embedding space: encode the scene prompt twice,
once as given and once with a darkening suffix, then walk linearly between
the two vectors.  Weight 0 must reproduce the original embedding exactly so
an EV0 request is indistinguishable from one that never mentions exposure.
"""

from __future__ import annotations

import hashlib

import numpy as np

DARK_SUFFIX = ", black dark"


def dark_prompt(prompt: str) -> str:
    """Variant of `prompt` used as the low-exposure anchor."""
    return prompt + DARK_SUFFIX


def _token_vector(token: str, dim: int) -> np.ndarray:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(seed).standard_normal(dim)


class StubTextEncoder:
    """Deterministic stand-in for a text encoder.

    Each token maps to a fixed pseudo-random vector; the prompt embedding is
    a position-weighted mean so word order matters, like it would for a real
    encoder.  No learned weights anywhere, but the interpolation math that
    sits on top is identical to what the diffusion path uses.
    """

    def __init__(self, dim: int = 64) -> None:
        if dim < 1:
            raise ValueError("embedding dim must be >= 1")
        self.dim = dim

    def encode(self, prompt: str) -> np.ndarray:
        tokens = prompt.lower().split()
        if not tokens:
            return np.zeros(self.dim, dtype=np.float32)
        acc = np.zeros(self.dim, dtype=np.float64)
        total = 0.0
        for pos, token in enumerate(tokens):
            weight = 1.0 / (1.0 + 0.1 * pos)
            acc += weight * _token_vector(token, self.dim)
            total += weight
        return (acc / total).astype(np.float32)


def interpolate_embeddings(
    base: np.ndarray, dark: np.ndarray, weight: float
) -> np.ndarray:
    """base + weight * (dark - base), computed in float64.

    weight=0 returns `base` bit-exact; weight=1 returns `dark` bit-exact.
    """
    if base.shape != dark.shape:
        raise ValueError("embedding shapes must match")
    if not 0.0 <= weight <= 1.0:
        raise ValueError("interpolation weight must be in [0, 1]")
    if weight == 0.0:
        return base.astype(np.float32)
    if weight == 1.0:
        return dark.astype(np.float32)
    mixed = base.astype(np.float64) + weight * (
        dark.astype(np.float64) - base.astype(np.float64)
    )
    return mixed.astype(np.float32)
