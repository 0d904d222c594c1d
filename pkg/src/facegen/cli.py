"""Command line interface.

    facegen dataset build --n 2500 --latent-seed 42 --descriptor-seed 7 --out data/
    facegen dataset split --dir data/ --train-fraction 0.75 --seed 2024
    facegen train --data data/ --epochs 200 --batch 32 --lr 1e-3 --seed 1001 \
                  --out model.fgm --history history.json
    facegen eval --data data/ --model model.fgm --report report.json
    facegen generate "an old man with short grey hair" --model model.fgm --out face.png
    facegen serve --model model.fgm --data data/ --port 8080 --sessions sessions/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset as dataset_mod
from .descriptor import chance_baseline
from .errors import FacegenError
from .generator import ToyGenerator
from .inference import generate_from_text
from .pngcodec import encode_png
from .regressor import ArchitectureConfig, TrainConfig, evaluate, init, train
from .sessions import SessionStore
from .server import FaceGenService, serve_forever
from .storage import read_model, write_model
from .text_pipeline import FALLBACK_DIMENSION, ExternalCommandEmbedder, HashedBagEmbedder


def _add_dataset_commands(subparsers) -> None:
    ds = subparsers.add_parser("dataset", help="build or split synthetic datasets")
    ds_sub = ds.add_subparsers(dest="dataset_command", required=True)

    build = ds_sub.add_parser("build", help="generate a (latent, face, description) dataset")
    build.add_argument("--n", type=int, default=dataset_mod.DESK_DEFAULT_N)
    build.add_argument("--latent-seed", type=int, default=42)
    build.add_argument("--descriptor-seed", type=int, default=7)
    build.add_argument("--images", action="store_true", help="also render one PNG per record")
    build.add_argument("--out", required=True)

    split = ds_sub.add_parser("split", help="write a train/test split for a dataset")
    split.add_argument("--dir", required=True)
    split.add_argument("--train-fraction", type=float, default=0.75)
    split.add_argument("--seed", type=int, default=0)


def _make_embedder(args):
    if getattr(args, "embedder_cmd", None):
        return ExternalCommandEmbedder(args.embedder_cmd.split())
    return HashedBagEmbedder()


def _cmd_dataset(args) -> int:
    if args.dataset_command == "build":
        config = dataset_mod.BuildConfig(
            n=args.n,
            latent_seed=args.latent_seed,
            descriptor_seed=args.descriptor_seed,
            include_images=args.images,
            out_dir=args.out,
        )
        manifest = dataset_mod.build(config)
        print(f"built {manifest.n} records in {args.out} (generator {manifest.generator_name})")
        return 0
    manifest, _ = dataset_mod.load(args.dir)
    result = dataset_mod.split(manifest, args.train_fraction, args.seed, out_dir=args.dir)
    print(f"split {manifest.n} records into {len(result.train_ids)} train / {len(result.test_ids)} test")
    return 0


def _cmd_train(args) -> int:
    manifest, records = dataset_mod.load(args.data)
    try:
        split = dataset_mod.load_split(args.data)
    except FacegenError:
        split = dataset_mod.split(manifest, 0.75, seed=args.seed, out_dir=args.data)
        print(f"no split.json found; wrote a default 75/25 split (seed {args.seed})")
    embedder = _make_embedder(args)
    model = init(ArchitectureConfig(input_dim=embedder.info.dimension), seed=args.seed)
    model.embedder_name = embedder.info.name
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        shuffle_seed=args.seed,
        eval_every=args.eval_every,
    )

    def progress(entry):
        line = f"epoch {entry.epoch}/{args.epochs}  train_mse {entry.train_mse:.4f}"
        if entry.test_mse is not None:
            line += f"  test_mse {entry.test_mse:.4f}"
        print(line, flush=True)

    train(model, records, split, embedder, config, progress=progress if not args.quiet else None)
    n_bytes = write_model(model, args.out)
    print(f"wrote {args.out} ({n_bytes} bytes)")
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            json.dump([h.to_json_dict() for h in model.history], fh)
            fh.write("\n")
        print(f"wrote {args.history}")
    return 0


def _cmd_eval(args) -> int:
    manifest, records = dataset_mod.load(args.data)
    split = dataset_mod.load_split(args.data)
    model = read_model(args.model)
    embedder = _make_embedder(args)
    generator = ToyGenerator(manifest.generator_seed)
    report = evaluate(model, records, split.test_ids, embedder, generator)
    payload = report.to_json_dict()
    payload["chance_baseline"] = chance_baseline(generator, n_trials=args.chance_trials, seed=0)
    del payload["n_records"]
    payload["per_channel"] = dict(sorted(payload["per_channel"].items()))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.report}")
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_generate(args) -> int:
    model = read_model(args.model)
    embedder = _make_embedder(args)
    generator = ToyGenerator(args.generator_seed)
    result = generate_from_text(args.text, model, embedder, generator)
    if args.out:
        Path(args.out).write_bytes(encode_png(result.image))
        print(f"wrote {args.out}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(result.to_json_dict(), fh)
            fh.write("\n")
        print(f"wrote {args.json}")
    if result.attributes is not None:
        print(json.dumps(result.attributes.named_levels()))
        if result.match is not None:
            print(f"match vs description: {result.match:.2f}")
    return 0


def _cmd_serve(args) -> int:
    model = read_model(args.model)
    embedder = _make_embedder(args)
    generator_seed = None
    if args.data:
        manifest, _ = dataset_mod.load(args.data)
        generator_seed = manifest.generator_seed
    generator = ToyGenerator(generator_seed) if generator_seed is not None else ToyGenerator()
    store = SessionStore(args.sessions) if args.sessions else None
    service = FaceGenService(model, embedder, generator, session_store=store)
    serve_forever(service, args.host, args.port, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="facegen", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _add_dataset_commands(sub)

    tr = sub.add_parser("train", help="train the embedding->latent regressor")
    tr.add_argument("--data", required=True)
    tr.add_argument("--epochs", type=int, default=200)
    tr.add_argument("--batch", type=int, default=32)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--seed", type=int, default=0, help="weight init and shuffle seed")
    tr.add_argument("--eval-every", type=int, default=10)
    tr.add_argument("--out", default="model.fgm")
    tr.add_argument("--history", default=None)
    tr.add_argument("--embedder-cmd", default=None, help="external sentence encoder command")
    tr.add_argument("--quiet", action="store_true")

    ev = sub.add_parser("eval", help="evaluate a model on a dataset's test split")
    ev.add_argument("--data", required=True)
    ev.add_argument("--model", required=True)
    ev.add_argument("--report", default=None)
    ev.add_argument("--chance-trials", type=int, default=10000)
    ev.add_argument("--embedder-cmd", default=None)

    gen = sub.add_parser("generate", help="generate one face from a description")
    gen.add_argument("text")
    gen.add_argument("--model", required=True)
    gen.add_argument("--out", default=None, help="write the face as PNG")
    gen.add_argument("--json", default=None, help="write the full result as JSON")
    gen.add_argument("--generator-seed", type=lambda v: int(v, 0), default=0xFACE5EED)
    gen.add_argument("--embedder-cmd", default=None)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--model", required=True)
    srv.add_argument("--data", default=None, help="dataset dir; fixes the generator seed")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8080)
    srv.add_argument("--sessions", default=None, help="directory for session event logs")
    srv.add_argument("--ui", default=None, help="static web UI directory")
    srv.add_argument("--embedder-cmd", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "dataset":
            return _cmd_dataset(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except FacegenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
