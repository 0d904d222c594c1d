"""Bit-exact persistence: latent matrices and single-file model weights.

Latents: headerless little-endian float32, row-major N x 512; counts live in
the dataset manifest so the file stays mmap-friendly and trivially checkable.

Model file (`.fgm`): one UTF-8 JSON header line (architecture, embedder
dimension, training metadata, declared tensor shapes) terminated by a
newline, then every weight tensor as little-endian float32 in declared
order. Weights are stored at float32 regardless of in-memory precision;
persisted values are the round-trip ground truth.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import (
    CorruptDatasetError,
    CorruptModelError,
    FormatVersionError,
    InvalidLatentError,
    PersistenceError,
)
from .regressor import ArchitectureConfig, EpochStats, RegressorModel, tensor_specs
from .types import LATENT_BYTES, LATENT_DIM, MODEL_FORMAT_VERSION, as_latent


def write_latents(latents, path) -> int:
    """Write N latents as a headerless float32 LE matrix; returns bytes written."""
    if isinstance(latents, np.ndarray) and latents.ndim == 2:
        rows = latents
    else:
        rows = np.stack([as_latent(z) for z in latents])
    if rows.shape[1] != LATENT_DIM:
        raise InvalidLatentError(f"latent rows must have {LATENT_DIM} columns")
    if not np.all(np.isfinite(rows)):
        raise InvalidLatentError("latents contain non-finite values")
    data = np.ascontiguousarray(rows, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise PersistenceError(path, f"cannot write latents ({exc})") from exc
    return len(data)


def read_latents(path, expected_n: int) -> np.ndarray:
    """Read exactly expected_n latents; size and finiteness are validated."""
    try:
        size = os.path.getsize(path)
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise PersistenceError(path, f"cannot read latents ({exc})") from exc
    if size != expected_n * LATENT_BYTES:
        raise CorruptDatasetError(
            f"{path}: {size} bytes on disk, expected {expected_n * LATENT_BYTES} for {expected_n} latents"
        )
    rows = np.frombuffer(data, dtype="<f4").reshape(expected_n, LATENT_DIM)
    if not np.all(np.isfinite(rows)):
        raise InvalidLatentError(f"{path}: latent file contains non-finite values")
    return rows.copy()


def write_model(model: RegressorModel, path) -> int:
    """Persist a model: JSON header line + float32 tensors in declared order."""
    specs = tensor_specs(model.config)
    for (name, shape), w in zip(specs, model.weights):
        if tuple(w.shape) != shape:
            raise CorruptModelError(f"tensor {name} has shape {tuple(w.shape)}, declared {shape}")
        if not np.all(np.isfinite(w)):
            raise InvalidLatentError(f"tensor {name} contains non-finite values")
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "facegen-regressor",
        "config": model.config.to_json_dict(),
        "embedder_name": model.embedder_name,
        "embedder_dimension": model.config.input_dim,
        "init_seed": model.init_seed,
        "history": [h.to_json_dict() for h in model.history],
        "tensors": [{"name": name, "shape": list(shape)} for name, shape in specs],
        "dtype": "float32",
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n"
    payload = b"".join(np.ascontiguousarray(w, dtype="<f4").tobytes() for w in model.weights)
    try:
        with open(path, "wb") as fh:
            fh.write(header_bytes)
            fh.write(payload)
    except OSError as exc:
        raise PersistenceError(path, f"cannot write model ({exc})") from exc
    return len(header_bytes) + len(payload)


def read_model(path) -> RegressorModel:
    """Load a model; forward outputs are bit-identical to the saved model's."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise PersistenceError(path, f"cannot read model ({exc})") from exc
    newline = blob.find(b"\n")
    if newline < 0:
        raise CorruptModelError(f"{path}: no header line found")
    try:
        header = json.loads(blob[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"{path}: unreadable header ({exc})") from exc
    version = header.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise FormatVersionError(f"{path}: unknown model format_version {version!r}")

    config = ArchitectureConfig.from_json_dict(header["config"])
    specs = tensor_specs(config)
    declared = [(t["name"], tuple(t["shape"])) for t in header.get("tensors", [])]
    if declared != specs:
        raise CorruptModelError(f"{path}: header tensor list does not match the architecture")

    payload = blob[newline + 1 :]
    expected = sum(int(np.prod(shape)) for _, shape in specs) * 4
    if len(payload) != expected:
        raise CorruptModelError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    weights = []
    offset = 0
    for _, shape in specs:
        count = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset).reshape(shape)
        weights.append(arr.copy())
        offset += count * 4
    if any(not np.all(np.isfinite(w)) for w in weights):
        raise CorruptModelError(f"{path}: weights contain non-finite values")
    history = [
        EpochStats(epoch=h["epoch"], train_mse=h["train_mse"], test_mse=h.get("test_mse"))
        for h in header.get("history", [])
    ]
    return RegressorModel(
        config=config,
        weights=weights,
        init_seed=header.get("init_seed", 0),
        embedder_name=header.get("embedder_name", "hashed-bag-64"),
        history=history,
    )
