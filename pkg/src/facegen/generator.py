"""Frozen image generators: the deterministic toy backend plus an external adapter.

The toy backend decodes a 512-dim latent into 10 semantic face attributes by
projecting onto a fixed orthonormal basis and quantizing through the normal
CDF, then rasterizes a small geometric face from those attributes. It exists
so the whole training/evaluation loop has an exactly invertible ground truth;
rendering fidelity is deliberately not load-bearing.
"""

from __future__ import annotations

import math
import os
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import BackendUnavailableError
from .prng import SplitMix64
from .types import LATENT_DIM, FaceImage, as_latent

DEFAULT_PROJECTION_SEED = 0xFACE5EED

# Channel order and level order are fixed constants of the artifact.
ATTRIBUTE_CHANNELS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("gender", ("male", "female")),
    ("age", ("child", "young_adult", "old")),
    ("hair_length", ("short", "long")),
    ("hair_color", ("dark", "blonde", "grey", "white")),
    ("eye_size", ("small", "large")),
    ("expression", ("sad", "neutral", "smiling")),
    ("beard", ("none", "stubble")),
    ("eyewear", ("none", "dark_shades")),
    ("face_shape", ("oval", "round")),
    ("lips", ("thin", "full")),
)

CHANNEL_NAMES = tuple(name for name, _ in ATTRIBUTE_CHANNELS)
CHANNEL_INDEX = {name: i for i, (name, _) in enumerate(ATTRIBUTE_CHANNELS)}
LEVEL_COUNTS = tuple(len(levels) for _, levels in ATTRIBUTE_CHANNELS)
N_CHANNELS = len(ATTRIBUTE_CHANNELS)


def level_name(channel: str, level: int) -> str:
    return ATTRIBUTE_CHANNELS[CHANNEL_INDEX[channel]][1][level]


def level_index(channel: str, name: str) -> int:
    return ATTRIBUTE_CHANNELS[CHANNEL_INDEX[channel]][1].index(name)


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def discretize(raw: np.ndarray) -> tuple[int, ...]:
    """Map raw scores to level indices via CDF quantiles: min(L-1, floor(L*Phi(r)))."""
    levels = []
    for r, n_levels in zip(raw, LEVEL_COUNTS):
        levels.append(min(n_levels - 1, int(n_levels * normal_cdf(float(r)))))
    return tuple(levels)


@dataclass(frozen=True)
class FaceAttributes:
    """Raw projection scores plus their discretized levels, one per channel."""

    raw: tuple[float, ...]
    levels: tuple[int, ...]

    @classmethod
    def from_raw(cls, raw) -> "FaceAttributes":
        raw = tuple(float(r) for r in raw)
        if len(raw) != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} raw scores, got {len(raw)}")
        return cls(raw=raw, levels=discretize(np.asarray(raw)))

    @classmethod
    def from_levels(cls, levels) -> "FaceAttributes":
        """Build from level indices alone; raw scores are set to bin midpoints.

        Used for rendering faces for known attribute combinations in tests and
        tools; `from_raw(attrs.raw)` round-trips exactly because the midpoint
        quantile of each bin discretizes back to the same level.
        """
        levels = tuple(int(v) for v in levels)
        raw = []
        for lv, n_levels in zip(levels, LEVEL_COUNTS):
            if not 0 <= lv < n_levels:
                raise ValueError(f"level {lv} out of range for {n_levels}-level channel")
            p = (lv + 0.5) / n_levels
            raw.append(_normal_quantile(p))
        return cls(raw=tuple(raw), levels=levels)

    def level_of(self, channel: str) -> int:
        return self.levels[CHANNEL_INDEX[channel]]

    def named_levels(self) -> dict[str, str]:
        return {
            name: ATTRIBUTE_CHANNELS[i][1][self.levels[i]]
            for i, name in enumerate(CHANNEL_NAMES)
        }


def _normal_quantile(p: float) -> float:
    """Inverse normal CDF by bisection; only used off the hot path."""
    lo, hi = -10.0, 10.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ProjectionMatrix:
    """10 orthonormal rows in latent space, one per attribute channel."""

    rows: np.ndarray  # (10, 512) float64
    seed: int


def make_projection(seed: int = DEFAULT_PROJECTION_SEED) -> ProjectionMatrix:
    """Draw 10x512 normals from one SplitMix64 stream (row-major) and
    Gram-Schmidt-orthonormalize the rows in index order.

    A row that degenerates (norm < 1e-9 after orthogonalization) is redrawn
    from the same stream, so regeneration from the seed is exact.
    """
    rng = SplitMix64(seed)
    rows = np.zeros((N_CHANNELS, LATENT_DIM), dtype=np.float64)
    i = 0
    while i < N_CHANNELS:
        v = rng.normals(LATENT_DIM)
        for j in range(i):
            v -= np.dot(v, rows[j]) * rows[j]
        norm = float(np.linalg.norm(v))
        if norm < 1e-9:
            continue  # deterministic continuation: consume the next 512 draws
        rows[i] = v / norm
        i += 1
    return ProjectionMatrix(rows=rows, seed=seed)


def latent_to_attributes(z, proj: ProjectionMatrix) -> FaceAttributes:
    """Decode a latent into attributes: raw r_i = w_i . z, quantized through Phi."""
    z = as_latent(z)
    raw = proj.rows @ z.astype(np.float64)
    return FaceAttributes.from_raw(raw)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

IMAGE_SIZE = 64

# Every hair pixel, for any attribute combination, stays inside this box
# (row_min, row_max, col_min, col_max), inclusive. Pixel-diff tests for
# hair-color-only changes rely on it.
HAIR_BOX = (4, 56, 6, 58)

BACKGROUND = (211, 219, 229)
SKIN = (224, 186, 150)
IRIS = (70, 50, 40)
SHADES_COLOR = (12, 12, 12)
MOUTH_COLOR = (156, 62, 62)
STUBBLE_COLOR = (94, 74, 54)
WRINKLE_COLOR = (168, 132, 102)

HAIR_PALETTE = {
    "dark": (40, 30, 20),
    "blonde": (220, 190, 120),
    "grey": (140, 140, 140),
    "white": (235, 235, 235),
}


def _fill_ellipse(img, cx, cy, ax, ay, color):
    ys, xs = np.ogrid[:IMAGE_SIZE, :IMAGE_SIZE]
    mask = ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 <= 1.0
    img[mask] = color
    return mask


def _ellipse_mask(cx, cy, ax, ay):
    ys, xs = np.ogrid[:IMAGE_SIZE, :IMAGE_SIZE]
    return ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 <= 1.0


def _fill_rect(img, r0, r1, c0, c1, color):
    r0, r1 = max(r0, 0), min(r1, IMAGE_SIZE - 1)
    c0, c1 = max(c0, 0), min(c1, IMAGE_SIZE - 1)
    if r0 <= r1 and c0 <= c1:
        img[r0 : r1 + 1, c0 : c1 + 1] = color


def render_face(attrs: FaceAttributes) -> FaceImage:
    """Rasterize a 64x64 RGB face from attributes; same attrs, same pixels."""
    g = attrs.named_levels()
    img = np.empty((IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.uint8)
    img[:, :] = BACKGROUND

    cx, cy = 32, 34
    scale = 0.78 if g["age"] == "child" else 1.0
    if g["face_shape"] == "round":
        ax, ay = int(19 * scale), int(19 * scale)
    else:
        ax, ay = int(16 * scale), int(21 * scale)

    face_mask = _fill_ellipse(img, cx, cy, ax, ay, SKIN)

    # Hair: a cap over the top of the head, plus side panels whose length
    # depends on hair_length and whose outline depends on gender.
    hair_color = HAIR_PALETTE[g["hair_color"]]
    hairline = cy - int(9 * scale)
    cap_mask = _ellipse_mask(cx, cy - int(2 * scale), ax + 2, ay + 1)
    ys = np.arange(IMAGE_SIZE)[:, None]
    cap_mask &= ys <= hairline
    img[cap_mask] = hair_color

    if g["gender"] == "female":
        panel_bottom = cy + int((16 if g["hair_length"] == "long" else 4) * scale)
        panel_w = 3
    else:
        panel_bottom = cy + int((7 if g["hair_length"] == "long" else -4) * scale)
        panel_w = 2
    if panel_bottom > hairline:
        _fill_rect(img, hairline, panel_bottom, cx - ax - panel_w, cx - ax, hair_color)
        _fill_rect(img, hairline, panel_bottom, cx + ax, cx + ax + panel_w, hair_color)

    # Eyes sit above the vertical midline so expression diffs stay in the
    # bottom half of the frame.
    eye_y = cy - int(4 * scale)
    eye_dx = int(7 * scale)
    eye_r = 3 if g["eye_size"] == "large" else 2
    for ex in (cx - eye_dx, cx + eye_dx):
        _fill_ellipse(img, ex, eye_y, eye_r, eye_r, IRIS)

    if g["age"] == "old":
        wr_y = cy - int(13 * scale)
        wr_half = int(7 * scale)
        img[wr_y, cx - wr_half : cx + wr_half + 1] = WRINKLE_COLOR
        img[wr_y + 2, cx - wr_half : cx + wr_half + 1] = WRINKLE_COLOR
        for ex in (cx - eye_dx, cx + eye_dx):
            img[eye_y + eye_r + 2, ex - 2 : ex + 3] = WRINKLE_COLOR

    if g["eyewear"] == "dark_shades":
        lens_half = int(4 * scale)
        _fill_rect(img, eye_y - 2, eye_y + 2, cx - eye_dx - lens_half, cx - eye_dx + lens_half, SHADES_COLOR)
        _fill_rect(img, eye_y - 2, eye_y + 2, cx + eye_dx - lens_half, cx + eye_dx + lens_half, SHADES_COLOR)
        img[eye_y, cx - eye_dx : cx + eye_dx + 1] = SHADES_COLOR

    # Mouth: parabola opening by expression, thickness by lips.
    mouth_y = cy + int(10 * scale)
    half_w = int(6 * scale)
    curv = {"sad": -1, "neutral": 0, "smiling": 1}[g["expression"]]
    thickness = 3 if g["lips"] == "full" else 1
    amp = 5.0
    for dx in range(-half_w, half_w + 1):
        y = mouth_y + int(round(curv * (amp / 2.0 - amp * (dx / half_w) ** 2)))
        img[y : y + thickness, cx + dx] = MOUTH_COLOR

    if g["beard"] == "stubble":
        chin_mask = face_mask.copy()
        chin_mask &= ys >= mouth_y - int(2 * scale)
        rows, cols = np.nonzero(chin_mask)
        keep = (rows * 5 + cols * 3) % 4 == 0
        img[rows[keep], cols[keep]] = STUBBLE_COLOR
        # keep the mouth visible over the stubble field
        for dx in range(-half_w, half_w + 1):
            y = mouth_y + int(round(curv * (amp / 2.0 - amp * (dx / half_w) ** 2)))
            img[y : y + thickness, cx + dx] = MOUTH_COLOR

    return FaceImage.from_array(img)


# ---------------------------------------------------------------------------
# Generator interface
# ---------------------------------------------------------------------------


class ToyGenerator:
    """Deterministic stand-in generator: latent -> attributes -> rendered face."""

    def __init__(self, seed: int = DEFAULT_PROJECTION_SEED):
        self.projection = make_projection(seed)

    def name(self) -> str:
        return f"toy-v1-{self.projection.seed:x}"

    def latent_dim(self) -> int:
        return LATENT_DIM

    def attributes(self, z) -> FaceAttributes:
        return latent_to_attributes(z, self.projection)

    def generate(self, z) -> FaceImage:
        return render_face(self.attributes(z))


class ExternalCommandGenerator:
    """Adapter for an out-of-process pretrained generator.

    The command receives the latent written as a single-row latents.f32 file
    and must write a PNG; `{latents}` and `{png}` placeholders in the command
    are substituted with the temp file paths. Which latent space the external
    model expects (raw z or an intermediate space) is the command's own
    configuration concern. Disabled unless a command is supplied; no test
    requires it.
    """

    def __init__(self, command: list[str] | None, name: str = "external"):
        self._command = command
        self._name = name

    def name(self) -> str:
        return self._name

    def latent_dim(self) -> int:
        return LATENT_DIM

    def generate(self, z) -> FaceImage:
        if not self._command:
            raise BackendUnavailableError("no external generator command configured")
        z = as_latent(z)
        with tempfile.TemporaryDirectory(prefix="facegen-ext-") as tmp:
            latents_path = os.path.join(tmp, "latents.f32")
            png_path = os.path.join(tmp, "face.png")
            with open(latents_path, "wb") as fh:
                fh.write(z.astype("<f4").tobytes())
            cmd = [arg.format(latents=latents_path, png=png_path) for arg in self._command]
            try:
                subprocess.run(cmd, check=True, capture_output=True)
            except (OSError, subprocess.CalledProcessError) as exc:
                raise BackendUnavailableError(f"external generator failed: {exc}") from exc
            if not os.path.exists(png_path):
                raise BackendUnavailableError("external generator produced no image")
            from .pngcodec import decode_png

            with open(png_path, "rb") as fh:
                return decode_png(fh.read())
