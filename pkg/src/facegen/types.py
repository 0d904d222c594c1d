"""Core value types: latents, embeddings, images, dataset records and splits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidLatentError, InvalidSplitError

LATENT_DIM = 512
LATENT_BYTES = LATENT_DIM * 4  # float32 storage

DATASET_FORMAT_VERSION = 1
MODEL_FORMAT_VERSION = 1


def as_latent(values) -> np.ndarray:
    """Validate and return a latent as a float32 vector of length 512."""
    z = np.asarray(values, dtype=np.float32).reshape(-1)
    if z.shape[0] != LATENT_DIM:
        raise InvalidLatentError(f"latent must have {LATENT_DIM} elements, got {z.shape[0]}")
    if not np.all(np.isfinite(z)):
        raise InvalidLatentError("latent contains non-finite values")
    return z


def as_embedding(values, dimension: int) -> np.ndarray:
    """Validate and return an embedding as a float32 vector of the given dimension."""
    v = np.asarray(values, dtype=np.float32).reshape(-1)
    if v.shape[0] != dimension:
        raise InvalidLatentError(f"embedding must have {dimension} elements, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise InvalidLatentError("embedding contains non-finite values")
    return v


@dataclass(frozen=True)
class FaceImage:
    """An 8-bit RGB image stored as a row-major byte buffer."""

    width: int
    height: int
    pixels: bytes

    CHANNELS = 3

    def __post_init__(self):
        expected = self.width * self.height * self.CHANNELS
        if len(self.pixels) != expected:
            raise ValueError(f"pixel buffer has {len(self.pixels)} bytes, expected {expected}")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "FaceImage":
        """Build from an (H, W, 3) uint8 array."""
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise ValueError("expected an (H, W, 3) uint8 array")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, self.CHANNELS
        )


@dataclass
class DatasetRecord:
    """One supervised training unit: a description paired with its latent."""

    id: int
    text: str
    latent: np.ndarray
    image_path: str | None = None

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("record id must be non-negative")
        if not self.text:
            raise ValueError("record description must be non-empty")
        self.latent = as_latent(self.latent)


@dataclass
class DatasetManifest:
    """Counts and seeds that pin down a persisted dataset."""

    format_version: int
    n: int
    latent_dim: int
    generator_name: str
    generator_seed: int
    descriptor_seed: int
    images_included: bool

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("manifest n must be >= 1")
        if self.latent_dim != LATENT_DIM:
            raise ValueError(f"latent_dim must be {LATENT_DIM}")

    def to_json_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "n": self.n,
            "latent_dim": self.latent_dim,
            "generator_name": self.generator_name,
            "generator_seed": self.generator_seed,
            "descriptor_seed": self.descriptor_seed,
            "images_included": self.images_included,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            format_version=d["format_version"],
            n=d["n"],
            latent_dim=d["latent_dim"],
            generator_name=d["generator_name"],
            generator_seed=d["generator_seed"],
            descriptor_seed=d["descriptor_seed"],
            images_included=d["images_included"],
        )


@dataclass
class TrainTestSplit:
    """Disjoint train/test id partition of a dataset."""

    train_ids: list[int]
    test_ids: list[int]
    seed: int = 0
    train_fraction: float = 0.75

    def __post_init__(self):
        train, test = set(self.train_ids), set(self.test_ids)
        if not self.train_ids or not self.test_ids:
            raise InvalidSplitError("both split sides must be non-empty")
        if train & test:
            raise InvalidSplitError("train and test ids overlap")

    def covers(self, ids) -> bool:
        return set(self.train_ids) | set(self.test_ids) == set(ids)

    def to_json_dict(self) -> dict:
        return {
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "seed": self.seed,
            "train_fraction": self.train_fraction,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TrainTestSplit":
        return cls(
            train_ids=list(d["train_ids"]),
            test_ids=list(d["test_ids"]),
            seed=d["seed"],
            train_fraction=d["train_fraction"],
        )


@dataclass(frozen=True)
class EmbedderInfo:
    """Identity of a sentence embedder: name, output dimension, determinism."""

    name: str
    dimension: int
    deterministic: bool = True

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("embedder dimension must be positive")
