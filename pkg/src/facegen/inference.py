"""Stacked inference: text -> embedding -> latent -> face, plus latent-noise variants.

The generator and embedder stay frozen; a loaded regression model supplies
the latent. Variant generation perturbs a base latent with seeded Gaussian
noise so a human can pick the closest face and iterate.
"""

from __future__ import annotations

import base64
import hashlib
from dataclasses import dataclass

import numpy as np

from .descriptor import match_score, parse_description
from .errors import InvalidRequestError
from .generator import FaceAttributes
from .pngcodec import encode_png
from .prng import SplitMix64
from .regressor import RegressorModel, forward
from .text_pipeline import embed_text
from .types import LATENT_DIM, FaceImage, as_latent

MAX_VARIANTS = 1024
MAX_SIGMA = 100.0
DEFAULT_SIGMA = 0.1
DEFAULT_VARIANTS = 6


def latent_id(z: np.ndarray) -> str:
    """Content hash of the latent's float32 LE bytes; stable across requests."""
    return hashlib.sha256(as_latent(z).astype("<f4").tobytes()).hexdigest()


@dataclass(frozen=True)
class VariantRequest:
    k: int = DEFAULT_VARIANTS
    sigma: float = DEFAULT_SIGMA
    noise_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= MAX_VARIANTS:
            raise InvalidRequestError(f"k must lie in [1, {MAX_VARIANTS}], got {self.k}")
        if not 0.0 <= self.sigma <= MAX_SIGMA:
            raise InvalidRequestError(f"sigma must lie in [0, {MAX_SIGMA}], got {self.sigma}")


@dataclass
class GenerationResult:
    latent: np.ndarray
    image: FaceImage
    attributes: FaceAttributes | None
    match: float | None
    latent_id: str

    def to_json_dict(self) -> dict:
        d = {
            "latent_id": self.latent_id,
            "latent": [float(v) for v in self.latent],
            "image_png_b64": base64.b64encode(encode_png(self.image)).decode("ascii"),
            "attributes": None,
            "match": self.match,
        }
        if self.attributes is not None:
            d["attributes"] = {
                name: {"level": self.attributes.levels[i], "label": label}
                for i, (name, label) in enumerate(self.attributes.named_levels().items())
            }
        return d


def result_for_latent(z: np.ndarray, generator, text: str | None = None) -> GenerationResult:
    z = as_latent(z)
    image = generator.generate(z)
    attrs = generator.attributes(z) if hasattr(generator, "attributes") else None
    match = None
    if text is not None and attrs is not None:
        constraints = parse_description(text)
        if len(constraints) > 0:
            match = match_score(constraints, attrs)
    return GenerationResult(
        latent=z, image=image, attributes=attrs, match=match, latent_id=latent_id(z)
    )


def generate_from_text(text: str, model: RegressorModel, embedder, generator) -> GenerationResult:
    """Run the frozen pipeline end to end for one description."""
    embedding = embed_text(text, embedder)
    z = forward(model, embedding)
    return result_for_latent(z, generator, text=text)


def make_variants(base, request: VariantRequest, generator) -> list[GenerationResult]:
    """k nearby latents: variant i adds sigma-scaled normals from the i-th
    512-draw block of the noise_seed stream, then renders each."""
    base = as_latent(base)
    noise = SplitMix64(request.noise_seed).normals(request.k * LATENT_DIM)
    noise = noise.reshape(request.k, LATENT_DIM)
    out = []
    for i in range(request.k):
        z = (base.astype(np.float64) + request.sigma * noise[i]).astype(np.float32)
        out.append(result_for_latent(z, generator))
    return out


def blend_latent(regressed: np.ndarray, selected: np.ndarray | None, alpha: float) -> np.ndarray:
    """Refinement rule: alpha * regressed + (1 - alpha) * previously selected.

    With no prior selection alpha is forced to 1 (pure regression output).
    """
    if selected is None:
        return as_latent(regressed)
    if not 0.0 <= alpha <= 1.0:
        raise InvalidRequestError(f"alpha must lie in [0, 1], got {alpha}")
    mixed = alpha * as_latent(regressed).astype(np.float64) + (1.0 - alpha) * as_latent(
        selected
    ).astype(np.float64)
    return as_latent(mixed.astype(np.float32))
