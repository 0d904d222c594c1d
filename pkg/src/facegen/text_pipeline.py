"""Description text normalization and sentence embedding.

`preprocess` lowercases, strips punctuation, removes a fixed stopword list
and applies a small rule-based lemmatizer, so the whole pipeline is
dependency-free and bit-reproducible. Embedding is pluggable: the default
`HashedBagEmbedder` is a deterministic bag-of-hashed-words encoder used by
every test; `ExternalCommandEmbedder` adapts a real pretrained sentence
encoder over a line protocol.
"""

from __future__ import annotations

import json
import subprocess
import threading
from functools import lru_cache
from importlib import resources as importlib_resources

import numpy as np

from .errors import BackendUnavailableError, EmptyDescriptionError
from .prng import SplitMix64, fnv1a64
from .types import EmbedderInfo

FALLBACK_DIMENSION = 64
EXTERNAL_DIMENSION = 768

_PUNCT_TABLE = {ord(c): " " for c in "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~“”‘’"}


def _load_resource_text(name: str) -> str:
    return importlib_resources.files("facegen.resources").joinpath(name).read_text("utf-8")


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    words = [w.strip() for w in _load_resource_text("stopwords.txt").splitlines()]
    return frozenset(w for w in words if w)


@lru_cache(maxsize=1)
def _lemma_rules() -> dict:
    rules = json.loads(_load_resource_text("lemma_rules.json"))
    rules["keep_s"] = frozenset(rules["keep_s"])
    rules["restore_e"] = frozenset(rules["restore_e"])
    rules["keep_double"] = frozenset(rules["keep_double"])
    return rules


def lemmatize(token: str) -> str:
    """Reduce an inflected token to its base form via suffix rules.

    Rule order: irregular table, ies->y, (ss|x|ch|sh|z)es->stem, plural s,
    ing->stem (undoubling consonants, restoring a dropped final e), ed->stem.
    """
    rules = _lemma_rules()
    if token in rules["irregular"]:
        return rules["irregular"][token]
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if len(token) > 4 and token[-2:] == "es" and token[-4:-2] in ("ss", "ch", "sh") or \
            len(token) > 3 and token[-2:] == "es" and token[-3] in "xz":
        return token[:-2]
    if (
        token.endswith("s")
        and not token.endswith("ss")
        and not token.endswith("us")
        and not token.endswith("is")
        and len(token) > 3
        and token not in rules["keep_s"]
    ):
        return token[:-1]
    for suffix in ("ing", "ed"):
        if token.endswith(suffix) and len(token) > len(suffix) + 2:
            stem = token[: -len(suffix)]
            if (
                len(stem) >= 3
                and stem[-1] == stem[-2]
                and stem[-1] not in "aeiou"
                and stem not in rules["keep_double"]
            ):
                return stem[:-1]
            if stem in rules["restore_e"]:
                return stem + "e"
            return stem
    return token


def preprocess(text: str) -> list[str]:
    """Normalize text into a stopword-free sequence of lemma tokens.

    Idempotent: feeding the joined output back through preprocess returns
    the same sequence.
    """
    lowered = text.lower().translate(_PUNCT_TABLE)
    stops = stopwords()
    return [lemmatize(tok) for tok in lowered.split() if tok not in stops]


class HashedBagEmbedder:
    """Deterministic fallback sentence embedder.

    Each distinct token is hashed (64-bit FNV-1a of its UTF-8 bytes) to seed
    a SplitMix64 stream that yields a 64-dim standard-normal token vector;
    the sentence vector is the sum over the token sequence (duplicates
    counted), normalized to unit L2 norm. Bag-of-words by construction:
    reordering tokens cannot change the output.
    """

    def __init__(self):
        self._token_cache: dict[str, np.ndarray] = {}

    @property
    def info(self) -> EmbedderInfo:
        return EmbedderInfo(name="hashed-bag-64", dimension=FALLBACK_DIMENSION, deterministic=True)

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            rng = SplitMix64(fnv1a64(token.encode("utf-8")))
            vec = rng.normals(FALLBACK_DIMENSION)
            self._token_cache[token] = vec
        return vec

    def embed(self, tokens: list[str]) -> np.ndarray:
        if not tokens:
            raise EmptyDescriptionError("cannot embed an empty token sequence")
        acc = np.zeros(FALLBACK_DIMENSION, dtype=np.float64)
        for token in tokens:
            acc += self._token_vector(token)
        norm = float(np.linalg.norm(acc))
        if norm == 0.0:
            raise EmptyDescriptionError("token vectors cancelled to the zero vector")
        return (acc / norm).astype(np.float32)


class ExternalCommandEmbedder:
    """Adapter for a pretrained sentence encoder running out of process.

    Protocol: one UTF-8 line of text on stdin yields one JSON array of 768
    numbers on stdout. How the external model pools token vectors into the
    sentence vector (CLS, mean, or a dedicated sentence head) is the
    command's configuration, not ours. Calls are serialized per subprocess.
    """

    def __init__(self, command: list[str], name: str = "external-768", dimension: int = EXTERNAL_DIMENSION):
        self._command = command
        self._name = name
        self._dimension = dimension
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    @property
    def info(self) -> EmbedderInfo:
        return EmbedderInfo(name=self._name, dimension=self._dimension, deterministic=False)

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self._command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                )
            except OSError as exc:
                raise BackendUnavailableError(f"cannot start embedder command: {exc}") from exc
        return self._proc

    def embed(self, tokens: list[str]) -> np.ndarray:
        if not tokens:
            raise EmptyDescriptionError("cannot embed an empty token sequence")
        line = " ".join(tokens)
        with self._lock:
            proc = self._ensure_proc()
            try:
                proc.stdin.write(line + "\n")
                proc.stdin.flush()
                reply = proc.stdout.readline()
            except (OSError, BrokenPipeError) as exc:
                raise BackendUnavailableError(f"embedder subprocess failed: {exc}") from exc
        if not reply:
            raise BackendUnavailableError("embedder subprocess closed its output")
        values = json.loads(reply)
        vec = np.asarray(values, dtype=np.float32)
        if vec.shape != (self._dimension,):
            raise BackendUnavailableError(
                f"embedder returned {vec.shape[0] if vec.ndim == 1 else vec.shape} values, expected {self._dimension}"
            )
        return vec


def embed_text(text: str, embedder) -> np.ndarray:
    """Full first stage of the pipeline: embed(preprocess(text))."""
    tokens = preprocess(text)
    if not tokens:
        raise EmptyDescriptionError(f"no tokens survive normalization of {text!r}")
    return embedder.embed(tokens)
