"""Automatic dataset generation: sample latents, decode faces, caption, persist.

A build is fully determined by (n, latent_seed, descriptor_seed, generator):
latents come from one SplitMix64 stream drawn up front (record i owns normals
[i*512, (i+1)*512)), and record i's caption seed is descriptor_seed XOR i.
Artifacts on disk: manifest.json, latents.f32, descriptions.jsonl and an
optional images/ directory.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptor import describe, parse_description
from .errors import CorruptDatasetError, InvalidSplitError, PersistenceError
from .generator import CHANNEL_NAMES, ToyGenerator
from .pngcodec import encode_png
from .prng import SplitMix64
from .storage import read_latents, write_latents
from .types import (
    DATASET_FORMAT_VERSION,
    LATENT_DIM,
    DatasetManifest,
    DatasetRecord,
    TrainTestSplit,
)

DESK_DEFAULT_N = 2500
FULL_SCALE_N = 20000


@dataclass(frozen=True)
class BuildConfig:
    n: int = DESK_DEFAULT_N
    latent_seed: int = 42
    descriptor_seed: int = 7
    include_images: bool = False
    out_dir: str = "dataset"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2 so the dataset can be split")


def build(config: BuildConfig, generator=None) -> DatasetManifest:
    """Run the generation cycle and persist the dataset; returns the manifest."""
    generator = generator or ToyGenerator()
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PersistenceError(out, f"cannot create dataset directory ({exc})") from exc

    try:
        latents = (
            SplitMix64(config.latent_seed)
            .normals(config.n * LATENT_DIM)
            .reshape(config.n, LATENT_DIM)
            .astype(np.float32)
        )
        write_latents(latents, out / "latents.f32")

        images_dir = out / "images"
        if config.include_images:
            images_dir.mkdir(exist_ok=True)

        with open(out / "descriptions.jsonl", "w", encoding="utf-8") as fh:
            for i in range(config.n):
                attrs = generator.attributes(latents[i])
                text = describe(attrs, config.descriptor_seed ^ i)
                record = {
                    "id": i,
                    "text": text,
                    "attributes": {name: attrs.levels[j] for j, name in enumerate(CHANNEL_NAMES)},
                }
                fh.write(json.dumps(record, separators=(",", ":")) + "\n")
                if config.include_images:
                    image = generator.generate(latents[i])
                    (images_dir / f"{i}.png").write_bytes(encode_png(image))

        manifest = DatasetManifest(
            format_version=DATASET_FORMAT_VERSION,
            n=config.n,
            latent_dim=LATENT_DIM,
            generator_name=generator.name(),
            generator_seed=getattr(getattr(generator, "projection", None), "seed", 0),
            descriptor_seed=config.descriptor_seed,
            images_included=config.include_images,
        )
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest.to_json_dict(), fh, indent=2)
            fh.write("\n")
        return manifest
    except OSError as exc:
        _cleanup_partial(out)
        raise PersistenceError(out, f"dataset build failed ({exc})") from exc
    except Exception:
        _cleanup_partial(out)
        raise


def _cleanup_partial(out: Path) -> None:
    for name in ("latents.f32", "descriptions.jsonl", "manifest.json"):
        try:
            (out / name).unlink(missing_ok=True)
        except OSError:
            pass
    try:
        shutil.rmtree(out / "images", ignore_errors=True)
    except OSError:
        pass


def load(dataset_dir) -> tuple[DatasetManifest, list[DatasetRecord]]:
    """Load and cross-validate manifest, latents and descriptions."""
    root = Path(dataset_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise CorruptDatasetError(f"{manifest_path}: manifest is missing")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = DatasetManifest.from_json_dict(json.load(fh))

    latents = read_latents(root / "latents.f32", manifest.n)

    records = []
    with open(root / "descriptions.jsonl", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            if not line.strip():
                continue
            entry = json.loads(line)
            rid = entry["id"]
            if rid != line_no:
                raise CorruptDatasetError(
                    f"descriptions.jsonl: id {rid} at line {line_no + 1} breaks id ordering"
                )
            image_path = f"images/{rid}.png" if manifest.images_included else None
            records.append(
                DatasetRecord(id=rid, text=entry["text"], latent=latents[rid], image_path=image_path)
            )
    if len(records) != manifest.n:
        raise CorruptDatasetError(
            f"descriptions.jsonl has {len(records)} records, manifest says {manifest.n}"
        )
    return manifest, records


def split(manifest: DatasetManifest, train_fraction: float, seed: int, out_dir=None) -> TrainTestSplit:
    """Seeded shuffle-then-partition of record ids; persisted when out_dir given."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidSplitError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(round(manifest.n * train_fraction))
    if n_train < 1 or n_train >= manifest.n:
        raise InvalidSplitError(
            f"fraction {train_fraction} of {manifest.n} records leaves an empty side"
        )
    order = SplitMix64(seed).shuffled(range(manifest.n))
    result = TrainTestSplit(
        train_ids=sorted(order[:n_train]),
        test_ids=sorted(order[n_train:]),
        seed=seed,
        train_fraction=train_fraction,
    )
    if out_dir is not None:
        with open(Path(out_dir) / "split.json", "w", encoding="utf-8") as fh:
            json.dump(result.to_json_dict(), fh)
            fh.write("\n")
    return result


def load_split(dataset_dir) -> TrainTestSplit:
    path = Path(dataset_dir) / "split.json"
    if not path.exists():
        raise CorruptDatasetError(f"{path}: split file is missing")
    with open(path, encoding="utf-8") as fh:
        return TrainTestSplit.from_json_dict(json.load(fh))


def verify_consistency(records, generator) -> int:
    """Assert the dataset consistency triangle; returns the number checked.

    Every record's parsed description must agree with the attributes decoded
    from its latent on all mentioned channels.
    """
    from .descriptor import match_score

    for record in records:
        constraints = parse_description(record.text)
        attrs = generator.attributes(record.latent)
        if len(constraints) == 0 or match_score(constraints, attrs) != 1.0:
            raise CorruptDatasetError(
                f"record {record.id}: description disagrees with its latent"
            )
    return len(records)
