"""Command-line interface: ingestion, partitioning, training, export.

Subcommands::

    subgcl make-synthetic --kind cycles-vs-paths --out data/cvp
    subgcl partition --data data/cvp --algo louvain --out runs/parts
    subgcl train --data data/cvp --config run.toml --out runs/a
    subgcl export-importance --checkpoint runs/a/checkpoint.json \\
        --data data/cvp --out importance.json

Training configs are flat TOML files whose keys mirror ``TrainConfig``;
unknown keys are rejected by name.  Exit codes are a stable contract:
0 ok, 2 ingestion problem, 3 config problem, 4 divergence, 5 checkpoint /
dataset incompatibility.  Every command is deterministic given its config
and seed, and each run directory gets a ``manifest.json`` tying artifacts
to the config hash.

A relative ``--data`` path that does not exist locally is also tried
under ``$SUBGCL_DATA_ROOT``.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np
import toml

from .data import (
    dataset_manifest,
    load_tudataset,
    make_synthetic,
    save_tudataset,
)
from .errors import (
    ContractError,
    DimensionError,
    DivergenceError,
    IngestionError,
    ParameterError,
    StratificationError,
)
from .partition import partition_dataset, partition_stats, save_partitions
from .train import (
    TrainConfig,
    linear_probe_eval,
    load_checkpoint,
    save_checkpoint,
    train_semisupervised,
    train_unsupervised,
)

EXIT_OK = 0
EXIT_INGESTION = 2
EXIT_CONFIG = 3
EXIT_DIVERGENCE = 4
EXIT_COMPAT = 5

DATA_ROOT_ENV = "SUBGCL_DATA_ROOT"


class ConfigError(Exception):
    """A config file problem (unknown key, bad type, bad value)."""


@dataclasses.dataclass
class RunManifest:
    """What produced the artifacts in an output directory."""

    command: str
    config_path: str
    dataset_path: str
    output_dir: str
    seed: int
    config_hash: str

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def resolve_data_dir(path):
    """Resolve a dataset directory, falling back to $SUBGCL_DATA_ROOT."""
    if os.path.isdir(path):
        return path
    root = os.environ.get(DATA_ROOT_ENV)
    if root and not os.path.isabs(path):
        candidate = os.path.join(root, path)
        if os.path.isdir(candidate):
            return candidate
    raise IngestionError(f"dataset directory not found: {path}")


def load_config(path=None, seed=None):
    """Build a TrainConfig from a flat TOML file (all keys optional).

    Unknown keys and invalid values raise ConfigError naming the key; a
    ``seed`` argument overrides whatever the file says.
    """
    raw = {}
    if path is not None:
        try:
            raw = toml.load(path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        except toml.TomlDecodeError as exc:
            raise ConfigError(f"config {path} is not valid TOML: {exc}")
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r} in {path}")
    if seed is not None:
        raw["seed"] = seed
    try:
        return TrainConfig(**raw)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(f"bad config value: {exc}")


def print_defaults(stream=None):
    """Print every config key with its default as a TOML document."""
    stream = stream or sys.stdout
    for f in dataclasses.fields(TrainConfig):
        value = f.default
        if value is None:
            print(f"# {f.name} = <unset>", file=stream)
        elif isinstance(value, bool):
            print(f"{f.name} = {'true' if value else 'false'}", file=stream)
        elif isinstance(value, str):
            print(f'{f.name} = "{value}"', file=stream)
        else:
            print(f"{f.name} = {value}", file=stream)


def _load_dataset(path, features):
    return load_tudataset(resolve_data_dir(path), features=features)


def _write_manifest(args_command, config_path, data_path, out_dir, config):
    manifest = RunManifest(
        command=args_command,
        config_path="" if config_path is None else str(config_path),
        dataset_path="" if data_path is None else str(data_path),
        output_dir=str(out_dir),
        seed=config.seed,
        config_hash=config.content_hash(),
    )
    manifest.save(os.path.join(out_dir, "manifest.json"))
    return manifest


def cmd_make_synthetic(args):
    ds = make_synthetic(
        args.kind, n_graphs=args.n_graphs, n_nodes=args.n_nodes,
        seed=args.seed, features=args.features,
    )
    os.makedirs(args.out, exist_ok=True)
    save_tudataset(ds, args.out, name=args.name)
    with open(os.path.join(args.out, "dataset.json"), "w") as fh:
        json.dump(dataset_manifest(ds), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(ds.graphs)} graphs to {args.out}")
    return EXIT_OK


def cmd_partition(args):
    ds = _load_dataset(args.data, "auto")
    config = load_config(seed=args.seed)
    config = dataclasses.replace(
        config, partition_algo=args.algo, resolution=args.resolution
    )
    partitions = partition_dataset(
        ds, args.algo, seed=args.seed, resolution=args.resolution
    )
    stats = partition_stats(ds, partitions)
    stats["config_hash"] = config.content_hash()
    os.makedirs(args.out, exist_ok=True)
    save_partitions(
        os.path.join(args.out, "partitions.json"), partitions,
        algorithm=args.algo, seed=args.seed, resolution=args.resolution,
    )
    with open(os.path.join(args.out, "stats.json"), "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest("partition", None, args.data, args.out, config)
    print(
        f"{ds.name}: avg_nodes={stats['avg_nodes']:.2f} "
        f"avg_subgraphs={stats['avg_subgraphs']:.2f}"
    )
    return EXIT_OK


def _final_line_unsupervised(ds, model, report, config):
    labels = ds.labels()
    classes = np.unique(labels[labels >= 0])
    if np.all(labels >= 0) and classes.size >= 2:
        embs = model.embed_dataset(ds)
        try:
            probe = linear_probe_eval(
                embs, labels, folds=config.probe_folds, seed=config.seed
            )
        except StratificationError:
            probe = None
        if probe is not None:
            report.final["probe_mean"] = probe["mean_accuracy"]
            report.final["probe_std"] = probe["std_accuracy"]
            return (
                f"final: probe accuracy {probe['mean_accuracy']:.4f} "
                f"± {probe['std_accuracy']:.4f} over {probe['folds']} folds"
            )
    last = report.epoch_losses[-1]
    return f"final: epoch {last['epoch']} total loss {last['total']:.6f}"


def cmd_train(args):
    if args.data is None:
        raise IngestionError("--data is required unless --print-defaults is given")
    config = load_config(args.config, seed=args.seed)
    ds = _load_dataset(args.data, config.features)
    if args.dry_run:
        partitions = partition_dataset(
            ds, config.partition_algo, seed=config.seed,
            resolution=config.resolution,
        )
        stats = partition_stats(ds, partitions)
        print(
            f"dry run ok: {len(ds.graphs)} graphs, "
            f"avg_subgraphs={stats['avg_subgraphs']:.2f}, "
            f"config hash {config.content_hash()[:12]}"
        )
        return EXIT_OK
    if args.mode == "unsupervised":
        model, report = train_unsupervised(ds, config)
        line = _final_line_unsupervised(ds, model, report, config)
    else:
        model, report = train_semisupervised(ds, config, pretrain=not args.no_pretrain)
        line = f"final: test accuracy {report.final['test_accuracy']:.4f}"
    os.makedirs(args.out, exist_ok=True)
    report.save(os.path.join(args.out, "report.json"))
    save_checkpoint(os.path.join(args.out, "checkpoint.json"), model, report)
    _write_manifest("train", args.config, args.data, args.out, config)
    print(line)
    return EXIT_OK


def cmd_export_importance(args):
    model = load_checkpoint(args.checkpoint)
    config = model.config
    ds = _load_dataset(args.data, config.features)
    if ds.feature_dim != model.input_dim:
        raise DimensionError(
            f"checkpoint expects {model.input_dim}-dim node features, "
            f"dataset has {ds.feature_dim}"
        )
    partitions = partition_dataset(
        ds, config.partition_algo, seed=config.seed, resolution=config.resolution
    )
    records = []
    for i, (graph, part) in enumerate(zip(ds.graphs, partitions)):
        records.append(
            {
                "graph": i,
                "label": None if graph.label is None else int(graph.label),
                "subgraphs": model.gen1.importance_summary(graph, part),
            }
        )
    payload = {"config_hash": config.content_hash(), "graphs": records}
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote importance for {len(records)} graphs to {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="subgcl",
        description="Subgraph-level learnable augmentation for graph contrastive learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-synthetic", help="generate a synthetic benchmark corpus")
    p.add_argument("--kind", default="cycles-vs-paths",
                   choices=("cycles-vs-paths", "motif-vs-random"))
    p.add_argument("--n-graphs", type=int, default=100)
    p.add_argument("--n-nodes", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", default="degree", choices=("constant", "degree"))
    p.add_argument("--name", default=None, help="file prefix (default: kind)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_make_synthetic)

    p = sub.add_parser("partition", help="partition a corpus and report statistics")
    p.add_argument("--data", required=True, help="TU-style dataset directory")
    p.add_argument("--algo", default="louvain", choices=("louvain", "gn"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("train", help="run a training regime from a config file")
    p.add_argument("--data", default=None, help="TU-style dataset directory")
    p.add_argument("--config", default=None, help="flat TOML config file")
    p.add_argument("--mode", default="unsupervised",
                   choices=("unsupervised", "semisupervised"))
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--no-pretrain", action="store_true",
                   help="semisupervised only: skip contrastive pre-training")
    p.add_argument("--dry-run", action="store_true",
                   help="validate config and partitions, then stop")
    p.add_argument("--print-defaults", action="store_true",
                   help="print the default config as TOML and exit")
    p.add_argument("--out", default="run", help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export-importance",
                       help="export per-subgraph keep probabilities from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output JSON file")
    p.set_defaults(func=cmd_export_importance)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "print_defaults", False):
        print_defaults()
        return EXIT_OK
    try:
        return args.func(args)
    except (IngestionError, StratificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (DimensionError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPAT


if __name__ == "__main__":
    raise SystemExit(main())
