"""The only trainable component: embedding -> latent regression network.

Architecture per the generation pipeline's second stage: 1-D convolution
blocks (same padding, rectifier, width-2 max pool) followed by fully
connected layers, ending in a linear 512-wide output. Gradients are exact
analytic backprop through every layer; the optimizer is Adam with bias
correction. Everything is plain numpy with seeded deterministic
initialization, so identical seeds give bit-identical trained weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    EmptyBatchError,
    EmptySplitError,
    ShapeError,
    TrainingDivergedError,
)
from .prng import SplitMix64, mix64
from .types import LATENT_DIM, as_latent


@dataclass(frozen=True)
class ArchitectureConfig:
    """Network shape: conv blocks (out_channels, kernel), then fc widths.

    The default keeps the hidden fc layer wider than the desk-scale train
    set so the output layer can keep fitting per-sample targets throughout
    a 200-epoch run; a narrower hidden layer caps the reachable train loss.
    """

    input_dim: int
    conv_blocks: tuple[tuple[int, int], ...] = ((16, 5), (16, 5))
    fc_widths: tuple[int, ...] = (2048,)
    output_dim: int = LATENT_DIM

    def __post_init__(self):
        if self.output_dim != LATENT_DIM:
            raise ConfigurationError(f"output_dim must be {LATENT_DIM}")
        if self.input_dim < 8:
            raise ConfigurationError("input_dim must be >= 8")
        length = self.input_dim
        for channels, kernel in self.conv_blocks:
            if kernel % 2 != 1:
                raise ConfigurationError("conv kernel sizes must be odd for same padding")
            if channels < 1:
                raise ConfigurationError("conv out_channels must be >= 1")
            length //= 2
            if length < 1:
                raise ConfigurationError("too many pooling stages for input_dim")
        for width in self.fc_widths:
            if width < 1:
                raise ConfigurationError("fc widths must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "conv_blocks": [list(b) for b in self.conv_blocks],
            "fc_widths": list(self.fc_widths),
            "output_dim": self.output_dim,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ArchitectureConfig":
        return cls(
            input_dim=d["input_dim"],
            conv_blocks=tuple(tuple(b) for b in d["conv_blocks"]),
            fc_widths=tuple(d["fc_widths"]),
            output_dim=d["output_dim"],
        )


def tensor_specs(config: ArchitectureConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Name and shape of every weight tensor, in declared (serialization) order."""
    specs = []
    in_channels, length = 1, config.input_dim
    for i, (out_channels, kernel) in enumerate(config.conv_blocks):
        specs.append((f"conv{i}.kernel", (out_channels, in_channels, kernel)))
        specs.append((f"conv{i}.bias", (out_channels,)))
        in_channels, length = out_channels, length // 2
    fan_in = in_channels * length
    widths = list(config.fc_widths) + [config.output_dim]
    for j, width in enumerate(widths):
        specs.append((f"fc{j}.weight", (width, fan_in)))
        specs.append((f"fc{j}.bias", (width,)))
        fan_in = width
    return specs


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    test_mse: float | None = None

    def to_json_dict(self) -> dict:
        return {"epoch": self.epoch, "train_mse": self.train_mse, "test_mse": self.test_mse}


@dataclass
class RegressorModel:
    """Architecture, weight tensors and training history."""

    config: ArchitectureConfig
    weights: list[np.ndarray]
    init_seed: int
    embedder_name: str = "hashed-bag-64"
    history: list[EpochStats] = field(default_factory=list)

    @property
    def dtype(self):
        return self.weights[0].dtype

    def tensor_names(self) -> list[str]:
        return [name for name, _ in tensor_specs(self.config)]

    def astype(self, dtype) -> "RegressorModel":
        return RegressorModel(
            config=self.config,
            weights=[w.astype(dtype) for w in self.weights],
            init_seed=self.init_seed,
            embedder_name=self.embedder_name,
            history=list(self.history),
        )


def init(config: ArchitectureConfig, seed: int, dtype=np.float32) -> RegressorModel:
    """Seeded init: fan-scaled uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.

    Draw order is tensor-declaration order, row-major within each tensor;
    bias tensors consume no draws.
    """
    rng = SplitMix64(seed)
    weights = []
    for name, shape in tensor_specs(config):
        if name.endswith(".bias"):
            weights.append(np.zeros(shape, dtype=dtype))
            continue
        if len(shape) == 3:  # conv kernel: fans follow the conv arithmetic
            out_channels, in_channels, kernel = shape
            fan_in, fan_out = in_channels * kernel, out_channels * kernel
        else:
            fan_out, fan_in = shape
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        n = int(np.prod(shape))
        values = (2.0 * rng.uniforms(n) - 1.0) * bound
        weights.append(values.reshape(shape).astype(dtype))
    return RegressorModel(config=config, weights=weights, init_seed=seed)


def _check_input(model: RegressorModel, X: np.ndarray) -> np.ndarray:
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.config.input_dim:
        raise ShapeError(
            f"input has shape {X.shape}, expected (*, {model.config.input_dim})"
        )
    return np.ascontiguousarray(X, dtype=model.dtype)


def forward_batch(model: RegressorModel, X: np.ndarray, want_cache: bool = False):
    """Forward pass over a (B, input_dim) batch; optionally keep the caches
    backward() needs. Returns (out, cache)."""
    X = _check_input(model, X)
    n_conv = len(model.config.conv_blocks)
    cache = {"conv": [], "fc": []} if want_cache else None

    h = X[:, None, :]  # (B, 1, L)
    w = 0
    for i in range(n_conv):
        kernel_w, bias = model.weights[w], model.weights[w + 1]
        w += 2
        out_channels, in_channels, kernel = kernel_w.shape
        B, _, length = h.shape
        pad = kernel // 2
        hp = np.zeros((B, in_channels, length + 2 * pad), dtype=model.dtype)
        hp[:, :, pad : pad + length] = h
        idx = np.arange(length)[:, None] + np.arange(kernel)[None, :]
        patches = hp[:, :, idx]  # (B, C_in, L, K)
        patches = patches.transpose(0, 2, 1, 3).reshape(B, length, in_channels * kernel)
        # true convolution: the kernel is applied reversed over each window
        w2 = kernel_w[:, :, ::-1].reshape(out_channels, in_channels * kernel)
        pre = patches @ w2.T + bias  # (B, L, C_out)
        act = np.maximum(pre, 0).transpose(0, 2, 1)  # (B, C_out, L)
        pooled_len = length // 2
        pairs = act[:, :, : 2 * pooled_len].reshape(B, out_channels, pooled_len, 2)
        first_wins = pairs[..., 0] >= pairs[..., 1]  # ties route to index 0
        pooled = np.where(first_wins, pairs[..., 0], pairs[..., 1])
        if want_cache:
            cache["conv"].append((patches, pre, first_wins, length))
        h = pooled

    B = h.shape[0]
    flat = h.reshape(B, -1)
    n_fc = len(model.config.fc_widths) + 1
    for j in range(n_fc):
        weight, bias = model.weights[w], model.weights[w + 1]
        w += 2
        pre = flat @ weight.T + bias
        if want_cache:
            cache["fc"].append((flat, pre))
        flat = np.maximum(pre, 0) if j < n_fc - 1 else pre
    return flat, cache


def forward(model: RegressorModel, embedding) -> np.ndarray:
    """Map one embedding vector to a 512-dim latent."""
    out, _ = forward_batch(model, np.asarray(embedding))
    return as_latent(out[0])


def loss_mse(predictions, targets) -> float:
    """Mean over all samples and output elements of squared error (float64)."""
    predictions = np.atleast_2d(np.asarray(predictions))
    targets = np.atleast_2d(np.asarray(targets))
    if predictions.shape[0] == 0:
        raise EmptyBatchError("cannot compute loss of an empty batch")
    if predictions.shape != targets.shape:
        raise ShapeError(f"prediction shape {predictions.shape} != target shape {targets.shape}")
    diff = predictions.astype(np.float64) - targets.astype(np.float64)
    return float(np.mean(diff * diff))


def loss_and_gradients(model: RegressorModel, X: np.ndarray, Y: np.ndarray):
    """MSE loss plus exact analytic gradients for every weight tensor.

    Rectifier subgradient at 0 is 0; max-pool routes gradient to the first
    maximal element of each pair.
    """
    X = _check_input(model, X)
    Y = np.ascontiguousarray(np.atleast_2d(Y), dtype=model.dtype)
    if X.shape[0] == 0:
        raise EmptyBatchError("cannot compute gradients of an empty batch")
    if Y.shape != (X.shape[0], model.config.output_dim):
        raise ShapeError(f"target shape {Y.shape} does not match ({X.shape[0]}, {model.config.output_dim})")

    out, cache = forward_batch(model, X, want_cache=True)
    B = X.shape[0]
    diff64 = out.astype(np.float64) - Y.astype(np.float64)
    loss = float(np.mean(diff64 * diff64))
    d_out = ((2.0 / diff64.size) * diff64).astype(model.dtype)

    grads: list[np.ndarray | None] = [None] * len(model.weights)
    n_conv = len(model.config.conv_blocks)
    n_fc = len(model.config.fc_widths) + 1

    # Fully connected layers, last to first.
    d = d_out
    for j in range(n_fc - 1, -1, -1):
        w_idx = 2 * n_conv + 2 * j
        weight = model.weights[w_idx]
        flat_in, pre = cache["fc"][j]
        if j < n_fc - 1:
            d = d * (pre > 0)
        grads[w_idx] = d.T @ flat_in
        grads[w_idx + 1] = d.sum(axis=0)
        d = d @ weight

    # Reshape back into the last pooled feature map.
    out_channels = model.config.conv_blocks[-1][0] if n_conv else 1
    d = d.reshape(B, out_channels, -1)

    # Conv blocks, last to first.
    for i in range(n_conv - 1, -1, -1):
        w_idx = 2 * i
        kernel_w = model.weights[w_idx]
        out_channels, in_channels, kernel = kernel_w.shape
        patches, pre, first_wins, length = cache["conv"][i]
        pooled_len = length // 2

        d_pairs = np.zeros((B, out_channels, pooled_len, 2), dtype=model.dtype)
        d_pairs[..., 0] = np.where(first_wins, d, 0)
        d_pairs[..., 1] = np.where(first_wins, 0, d)
        d_act = np.zeros((B, out_channels, length), dtype=model.dtype)
        d_act[:, :, : 2 * pooled_len] = d_pairs.reshape(B, out_channels, 2 * pooled_len)

        d_pre = d_act.transpose(0, 2, 1) * (pre > 0)  # (B, L, C_out)
        w2 = kernel_w[:, :, ::-1].reshape(out_channels, in_channels * kernel)
        d_flat = d_pre.reshape(B * length, out_channels)
        g_flipped = (d_flat.T @ patches.reshape(B * length, -1)).reshape(kernel_w.shape)
        grads[w_idx] = np.ascontiguousarray(g_flipped[:, :, ::-1])
        grads[w_idx + 1] = d_pre.sum(axis=(0, 1))

        if i > 0:
            d_patches = (d_pre @ w2).reshape(B, length, in_channels, kernel)
            d_patches = d_patches.transpose(0, 2, 1, 3)  # (B, C_in, L, K)
            pad = kernel // 2
            d_hp = np.zeros((B, in_channels, length + 2 * pad), dtype=model.dtype)
            for k in range(kernel):
                d_hp[:, :, k : k + length] += d_patches[:, :, :, k]
            d = d_hp[:, :, pad : pad + length]

    return loss, grads


def backward(model: RegressorModel, X: np.ndarray, Y: np.ndarray) -> list[np.ndarray]:
    """Gradients of loss_mse over the batch with respect to every weight tensor."""
    _, grads = loss_and_gradients(model, X, Y)
    return grads


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    shuffle_seed: int = 0
    eval_every: int = 10

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError("adam betas must lie in [0, 1)")
        if self.eval_every < 1:
            raise ConfigurationError("eval_every must be >= 1")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    scratch: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, model: RegressorModel) -> "AdamState":
        return cls(
            m=[np.zeros_like(w) for w in model.weights],
            v=[np.zeros_like(w) for w in model.weights],
            scratch=[np.zeros_like(w) for w in model.weights],
        )


def adam_step(
    model: RegressorModel,
    grads: list[np.ndarray],
    state: AdamState,
    config: TrainConfig,
    context: str = "",
) -> None:
    """One in-place Adam update with bias correction:
    m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2;
    w <- w - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
    """
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    inv_bias1 = 1.0 / (1.0 - b1 ** state.t)
    inv_bias2 = 1.0 / (1.0 - b2 ** state.t)
    step_scale = config.learning_rate * inv_bias1
    for i, g in enumerate(grads):
        # one-pass divergence check: any inf/nan makes the f64 sum non-finite
        if not np.isfinite(g.sum(dtype=np.float64)):
            raise TrainingDivergedError(model.tensor_names()[i], context)
        m, v, s = state.m[i], state.v[i], state.scratch[i]
        np.multiply(m, b1, out=m)
        np.multiply(g, 1.0 - b1, out=s)
        np.add(m, s, out=m)
        np.multiply(v, b2, out=v)
        np.multiply(g, g, out=s)
        np.multiply(s, 1.0 - b2, out=s)
        np.add(v, s, out=v)
        np.multiply(v, inv_bias2, out=s)
        np.sqrt(s, out=s)
        np.add(s, config.epsilon, out=s)
        np.divide(m, s, out=s)
        np.multiply(s, step_scale, out=s)
        np.subtract(model.weights[i], s, out=model.weights[i])


def _epoch_shuffle_seed(shuffle_seed: int, epoch: int) -> int:
    # epoch index mixed into the seed; mix64 avoids low-entropy collisions
    return shuffle_seed ^ mix64(epoch)


def train(
    model: RegressorModel,
    records,
    split,
    embedder,
    config: TrainConfig,
    progress=None,
) -> RegressorModel:
    """Train in place over the split's train side; returns the same model.

    Embeddings are computed once up front (the encoder is frozen). Each epoch
    shuffles the train ids with a seed derived from (shuffle_seed, epoch),
    walks batches of batch_size (final partial batch kept), and applies one
    Adam step per batch. History records the running train MSE per epoch and
    the test MSE every eval_every epochs and on the final epoch.
    """
    from .text_pipeline import embed_text

    by_id = {r.id: r for r in records}
    train_ids = list(split.train_ids)
    test_ids = list(split.test_ids)
    if not train_ids:
        raise EmptySplitError("train side is empty")

    embeddings = {}
    for rid in train_ids + test_ids:
        embeddings[rid] = embed_text(by_id[rid].text, embedder)
    X_train = np.stack([embeddings[rid] for rid in train_ids]).astype(model.dtype)
    Y_train = np.stack([by_id[rid].latent for rid in train_ids]).astype(model.dtype)
    X_test = np.stack([embeddings[rid] for rid in test_ids]).astype(model.dtype) if test_ids else None
    Y_test = np.stack([by_id[rid].latent for rid in test_ids]).astype(model.dtype) if test_ids else None

    state = AdamState.zeros_like(model)
    n_train = len(train_ids)
    for epoch in range(1, config.epochs + 1):
        order = SplitMix64(_epoch_shuffle_seed(config.shuffle_seed, epoch)).shuffled(range(n_train))
        se_weighted = 0.0
        for start in range(0, n_train, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = loss_and_gradients(model, X_train[batch], Y_train[batch])
            adam_step(model, grads, state, config, context=f"epoch {epoch}, batch {start // config.batch_size}")
            se_weighted += loss * len(batch)
        train_mse = se_weighted / n_train
        test_mse = None
        if X_test is not None and (epoch % config.eval_every == 0 or epoch == config.epochs):
            test_mse = predict_mse(model, X_test, Y_test)
        model.history.append(EpochStats(epoch=epoch, train_mse=train_mse, test_mse=test_mse))
        if progress is not None:
            progress(model.history[-1])
    return model


def predict_batch(model: RegressorModel, X: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Forward over many rows in fixed-size chunks (identical math to forward)."""
    outs = []
    for start in range(0, X.shape[0], chunk):
        out, _ = forward_batch(model, X[start : start + chunk])
        outs.append(out)
    return np.concatenate(outs, axis=0)


def predict_mse(model: RegressorModel, X: np.ndarray, Y: np.ndarray) -> float:
    return loss_mse(predict_batch(model, X), Y)


@dataclass
class EvalReport:
    mse: float
    macro_accuracy: float
    per_channel: dict[str, float]
    n_records: int

    def to_json_dict(self) -> dict:
        return {
            "test_mse": self.mse,
            "macro_accuracy": self.macro_accuracy,
            "per_channel": dict(self.per_channel),
            "n_records": self.n_records,
        }


def evaluate(model: RegressorModel, records, ids, embedder, generator) -> EvalReport:
    """MSE against ground-truth latents plus attribute round-trip accuracy.

    For each record the description is parsed into constraints, the latent
    predicted from its embedding, decoded back to attributes, and scored per
    channel. Macro accuracy weights channels equally, counting only records
    that mention the channel.
    """
    from .descriptor import parse_description
    from .generator import CHANNEL_NAMES
    from .text_pipeline import embed_text

    ids = list(ids)
    if not ids:
        raise EmptySplitError("evaluation side is empty")
    by_id = {r.id: r for r in records}
    X = np.stack([embed_text(by_id[rid].text, embedder) for rid in ids]).astype(model.dtype)
    Y = np.stack([by_id[rid].latent for rid in ids])
    preds = predict_batch(model, X)
    mse = loss_mse(preds, Y)

    mentioned = np.zeros(len(CHANNEL_NAMES), dtype=np.int64)
    correct = np.zeros(len(CHANNEL_NAMES), dtype=np.int64)
    for row, rid in enumerate(ids):
        constraints = parse_description(by_id[rid].text)
        attrs = generator.attributes(as_latent(preds[row]))
        for channel_idx, level_idx in constraints.levels:
            mentioned[channel_idx] += 1
            if attrs.levels[channel_idx] == level_idx:
                correct[channel_idx] += 1
    per_channel = {
        name: float(correct[i] / mentioned[i])
        for i, name in enumerate(CHANNEL_NAMES)
        if mentioned[i] > 0
    }
    macro = float(np.mean(list(per_channel.values()))) if per_channel else 0.0
    return EvalReport(mse=mse, macro_accuracy=macro, per_channel=per_channel, n_records=len(ids))
