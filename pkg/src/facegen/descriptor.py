"""Textual face descriptions: template-based generation and lexicon parsing.

`describe` is the caption stand-in that turns attributes into a sentence;
`parse_description` inverts it through the shipped lexicon and is the
evaluation oracle. Generation and parsing share one vocabulary resource, and
every template is built so that parsing a generated sentence reproduces all
mentioned attributes exactly.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources as importlib_resources

from .errors import BackendUnavailableError, EmptyDescriptionError, UndefinedScoreError
from .generator import ATTRIBUTE_CHANNELS, CHANNEL_INDEX, FaceAttributes, level_index
from .prng import SplitMix64
from .text_pipeline import preprocess

N_TEMPLATES = 3

# Channels a description always names vs the ones mentioned by coin flip.
ALWAYS_MENTIONED = ("gender", "age", "hair_length", "hair_color", "eye_size", "expression")
OPTIONAL_CHANNELS = ("beard", "eyewear", "face_shape", "lips")


@lru_cache(maxsize=1)
def lexicon() -> dict:
    raw = importlib_resources.files("facegen.resources").joinpath("lexicon.json").read_text("utf-8")
    data = json.loads(raw)
    _validate_lexicon(data)
    return data


def _validate_lexicon(data: dict) -> None:
    """Startup assertions: phrases unique, normalized, targets in range."""
    seen = set()
    for entry in data["entries"]:
        phrase = entry["phrase"]
        if phrase in seen:
            raise ValueError(f"duplicate lexicon phrase {phrase!r}")
        seen.add(phrase)
        tokens = preprocess(phrase)
        if " ".join(tokens) != phrase:
            raise ValueError(f"lexicon phrase {phrase!r} is not normalization-stable")
        for channel, level in entry["targets"]:
            level_index(channel, level)  # raises if unknown


@lru_cache(maxsize=1)
def _phrase_table() -> dict[tuple[str, ...], tuple[tuple[int, int], ...]]:
    """Normalized phrase tuple -> ((channel_index, level_index), ...)."""
    table = {}
    for entry in lexicon()["entries"]:
        key = tuple(entry["phrase"].split())
        targets = tuple(
            (CHANNEL_INDEX[channel], level_index(channel, level))
            for channel, level in entry["targets"]
        )
        table[key] = targets
    return table


@lru_cache(maxsize=1)
def _max_phrase_len() -> int:
    return max(len(key) for key in _phrase_table())


@dataclass(frozen=True)
class AttributeConstraints:
    """Partial channel -> level map extracted from a description."""

    levels: tuple[tuple[int, int], ...]  # (channel_index, level_index) pairs

    def as_dict(self) -> dict[int, int]:
        return dict(self.levels)

    def named(self) -> dict[str, str]:
        return {
            ATTRIBUTE_CHANNELS[ci][0]: ATTRIBUTE_CHANNELS[ci][1][li]
            for ci, li in self.levels
        }

    def __len__(self) -> int:
        return len(self.levels)


def parse_description(text: str) -> AttributeConstraints:
    """Extract attribute constraints by longest-phrase-first lexicon matching.

    Unmatched tokens are ignored; a later mention of a channel overrides an
    earlier one.
    """
    if not text:
        raise EmptyDescriptionError("description text is empty")
    tokens = preprocess(text)
    if not tokens:
        raise EmptyDescriptionError(f"no tokens survive normalization of {text!r}")
    table = _phrase_table()
    found: dict[int, int] = {}
    i = 0
    while i < len(tokens):
        for length in range(min(_max_phrase_len(), len(tokens) - i), 0, -1):
            targets = table.get(tuple(tokens[i : i + length]))
            if targets is not None:
                for channel_idx, level_idx in targets:
                    found[channel_idx] = level_idx
                i += length
                break
        else:
            i += 1
    return AttributeConstraints(levels=tuple(sorted(found.items())))


def match_score(constraints: AttributeConstraints, attrs: FaceAttributes) -> float:
    """Fraction of constrained channels whose level matches the attributes."""
    if len(constraints) == 0:
        raise UndefinedScoreError("cannot score empty constraints")
    hits = sum(1 for ci, li in constraints.levels if attrs.levels[ci] == li)
    return hits / len(constraints)


def _article(word: str) -> str:
    return "an" if word[0] in "aeiou" else "a"


def describe(attrs: FaceAttributes, variation_seed: int) -> str:
    """Render attributes as a lowercase unpunctuated sentence.

    Seeded draws, in fixed order: template index, then one mention coin per
    optional channel (beard, eyewear, face_shape, lips). Optional channels
    whose level has no surface form (beard none, eyewear none) stay silent
    even on a heads coin; negations are out of vocabulary.
    """
    rng = SplitMix64(variation_seed)
    template = rng.next_below(N_TEMPLATES)
    coins = {name: rng.uniform() < 0.5 for name in OPTIONAL_CHANNELS}

    g = attrs.named_levels()
    canon = lexicon()["canonical"]
    ga = canon["gender_age"][f"{g['gender']}|{g['age']}"]
    pro, pos = ("she", "her") if g["gender"] == "female" else ("he", "his")
    hl = canon["hair_length"][g["hair_length"]]
    hc = canon["hair_color"][g["hair_color"]]
    es = canon["eye_size"][g["eye_size"]]
    fs = canon["face_shape"][g["face_shape"]]
    lp = canon["lips"][g["lips"]]
    ex_state = canon["expression_state"][g["expression"]]
    ex_look = canon["expression_look"][g["expression"]]

    say_beard = coins["beard"] and g["beard"] == "stubble"
    say_shades = coins["eyewear"] and g["eyewear"] == "dark_shades"
    say_face = coins["face_shape"]
    say_lips = coins["lips"]

    if template == 0:
        parts = [f"{_article(ga)} {ga} with {hl} {hc} hair and {es} eyes"]
        if say_beard:
            parts.append("and a stubble beard")
        if say_shades:
            parts.append("wearing dark shades")
        if say_face:
            parts.append(f"and {_article(fs)} {fs} face")
        if say_lips:
            parts.append(f"and {lp} lips")
        parts.append(f"and {pro} is {ex_state}")
    elif template == 1:
        parts = [f"the {ga} has {hl} {hc} hair and {pos} eyes are {es}"]
        if say_beard:
            parts.append(f"a stubble beard is growing on {pos} face")
        if say_shades:
            parts.append(f"{pro} is wearing dark shades")
        if say_face:
            parts.append(f"{pos} face is {fs}")
        if say_lips:
            parts.append(f"{pos} lips are {lp}")
        parts.append(f"and {pro} looks {ex_look}")
    else:
        parts = [f"{ex_state} {ga} with {hl} {hc} hair and {es} eyes"]
        if say_beard:
            parts.append("stubble beard")
        if say_shades:
            parts.append("dark shades")
        if say_face:
            parts.append(f"{fs} face")
        if say_lips:
            parts.append(f"{lp} lips")
    return " ".join(parts)


def chance_baseline(generator, n_trials: int = 10000, seed: int = 0) -> float:
    """Monte-Carlo chance floor for macro attribute accuracy.

    Random descriptions are scored against attributes of independent random
    latents and aggregated per channel exactly like evaluation does (channels
    weighted equally, counting only trials that mention the channel), so the
    number is directly comparable to a model's macro accuracy. Expected value
    is the mean of per-channel chance (1/levels), about 0.4417 here.
    """
    import numpy as np

    from .prng import SplitMix64
    from .types import LATENT_DIM

    rng = SplitMix64(seed)
    latents = rng.normals(2 * n_trials * LATENT_DIM).reshape(2 * n_trials, LATENT_DIM)
    mentioned = np.zeros(len(ATTRIBUTE_CHANNELS), dtype=np.int64)
    correct = np.zeros(len(ATTRIBUTE_CHANNELS), dtype=np.int64)
    for i in range(n_trials):
        described = generator.attributes(latents[2 * i].astype(np.float32))
        other = generator.attributes(latents[2 * i + 1].astype(np.float32))
        constraints = parse_description(describe(described, seed ^ (i + 1)))
        for channel_idx, level_idx in constraints.levels:
            mentioned[channel_idx] += 1
            if other.levels[channel_idx] == level_idx:
                correct[channel_idx] += 1
    rates = [correct[i] / mentioned[i] for i in range(len(ATTRIBUTE_CHANNELS)) if mentioned[i] > 0]
    return float(np.mean(rates))


class ExternalCommandCaptioner:
    """Adapter for a real image-captioning model run out of process.

    The command receives an image file path (`{image}` placeholder) and must
    print a UTF-8 caption on stdout. Never required by tests.
    """

    def __init__(self, command: list[str] | None):
        self._command = command

    def caption(self, image_path: str) -> str:
        if not self._command:
            raise BackendUnavailableError("no captioner command configured")
        cmd = [arg.format(image=image_path) for arg in self._command]
        try:
            result = subprocess.run(cmd, check=True, capture_output=True, text=True)
        except (OSError, subprocess.CalledProcessError) as exc:
            raise BackendUnavailableError(f"captioner failed: {exc}") from exc
        caption = result.stdout.strip()
        if not caption:
            raise BackendUnavailableError("captioner produced no output")
        return caption
