"""End-to-end tests for the command-line interface and its exit codes."""

import json
import os

import numpy as np
import pytest
import toml

from subgcl.cli import (
    EXIT_COMPAT,
    EXIT_CONFIG,
    EXIT_DIVERGENCE,
    EXIT_INGESTION,
    EXIT_OK,
    load_config,
    main,
)
from subgcl.partition import load_partitions
from subgcl.train import TrainConfig


def run_cli(*argv):
    return main(list(argv))


def make_corpus(tmp_path, name="corpus", n_graphs=8, kind="cycles-vs-paths",
                features="degree", n_nodes=8):
    out = tmp_path / name
    code = run_cli(
        "make-synthetic", "--kind", kind, "--n-graphs", str(n_graphs),
        "--n-nodes", str(n_nodes), "--seed", "0", "--features", features,
        "--out", str(out),
    )
    assert code == EXIT_OK
    return out


def write_config(tmp_path, **keys):
    base = dict(epochs=2, batch_size=4, hidden_dim=8, layers=2,
                projection_dim=8, finetune_epochs=2, label_fraction=0.5)
    base.update(keys)
    path = tmp_path / "run.toml"
    path.write_text(toml.dumps(base))
    return path


# --------------------------------------------------------------- generation


def test_make_synthetic_is_deterministic(tmp_path):
    a = make_corpus(tmp_path, name="a")
    b = make_corpus(tmp_path, name="b")
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    for fname in names:
        assert (a / fname).read_bytes() == (b / fname).read_bytes()
    manifest = json.loads((a / "dataset.json").read_text())
    assert manifest["num_graphs"] == 8


# --------------------------------------------------------------- partition


def test_partition_writes_stats_and_cache(tmp_path, capsys):
    data = make_corpus(tmp_path)
    out = tmp_path / "parts"
    code = run_cli("partition", "--data", str(data), "--algo", "louvain",
                   "--seed", "3", "--out", str(out))
    assert code == EXIT_OK
    stats = json.loads((out / "stats.json").read_text())
    assert stats["num_graphs"] == 8
    assert stats["avg_nodes"] == 8.0
    assert stats["avg_subgraphs"] >= 1.0
    parts, payload = load_partitions(out / "partitions.json")
    assert len(parts) == 8
    assert payload["seed"] == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == stats["config_hash"]
    assert "avg_nodes=" in capsys.readouterr().out


def test_partition_cache_is_byte_identical_across_reruns(tmp_path):
    data = make_corpus(tmp_path)
    blobs = []
    for name in ("p1", "p2"):
        out = tmp_path / name
        assert run_cli("partition", "--data", str(data), "--seed", "5",
                       "--out", str(out)) == EXIT_OK
        blobs.append((out / "partitions.json").read_bytes())
    assert blobs[0] == blobs[1]


def test_partition_missing_directory_exits_2(tmp_path, capsys):
    code = run_cli("partition", "--data", str(tmp_path / "nope"),
                   "--out", str(tmp_path / "o"))
    assert code == EXIT_INGESTION
    assert "not found" in capsys.readouterr().err


def test_data_root_env_fallback(tmp_path, monkeypatch):
    make_corpus(tmp_path, name="rooted")
    monkeypatch.setenv("SUBGCL_DATA_ROOT", str(tmp_path))
    monkeypatch.chdir(tmp_path / "..")
    out = tmp_path / "parts"
    assert run_cli("partition", "--data", "rooted", "--out", str(out)) == EXIT_OK


# ------------------------------------------------------------------- train


def test_train_unsupervised_writes_artifacts(tmp_path, capsys):
    data = make_corpus(tmp_path)
    cfg = write_config(tmp_path)
    out = tmp_path / "run"
    code = run_cli("train", "--data", str(data), "--config", str(cfg),
                   "--out", str(out))
    assert code == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert len(report["epoch_losses"]) == 2
    assert "content_hash" in report
    ckpt = json.loads((out / "checkpoint.json").read_text())
    assert ckpt["format"] == "subgcl-checkpoint-v1"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == report["config_hash"]
    assert manifest["command"] == "train"
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("final:")


def test_train_semisupervised_final_line(tmp_path, capsys):
    data = make_corpus(tmp_path, n_graphs=10)
    cfg = write_config(tmp_path)
    out = tmp_path / "run"
    code = run_cli("train", "--data", str(data), "--config", str(cfg),
                   "--mode", "semisupervised", "--out", str(out))
    assert code == EXIT_OK
    assert "test accuracy" in capsys.readouterr().out


def test_train_unknown_config_key_exits_3(tmp_path, capsys):
    data = make_corpus(tmp_path)
    bad = tmp_path / "bad.toml"
    bad.write_text("lrr = 0.1\n")
    code = run_cli("train", "--data", str(data), "--config", str(bad),
                   "--out", str(tmp_path / "o"))
    assert code == EXIT_CONFIG
    assert "lrr" in capsys.readouterr().err


def test_train_bad_config_value_exits_3(tmp_path, capsys):
    data = make_corpus(tmp_path)
    cfg = write_config(tmp_path, lr=-1.0)
    code = run_cli("train", "--data", str(data), "--config", str(cfg),
                   "--out", str(tmp_path / "o"))
    assert code == EXIT_CONFIG
    assert "lr" in capsys.readouterr().err


def test_train_dry_run_writes_nothing(tmp_path, capsys):
    data = make_corpus(tmp_path)
    cfg = write_config(tmp_path)
    out = tmp_path / "none"
    code = run_cli("train", "--data", str(data), "--config", str(cfg),
                   "--dry-run", "--out", str(out))
    assert code == EXIT_OK
    assert not out.exists()
    assert "dry run ok" in capsys.readouterr().out


def test_train_print_defaults_round_trips(tmp_path, capsys):
    assert run_cli("train", "--print-defaults") == EXIT_OK
    text = capsys.readouterr().out
    parsed = toml.loads(text)
    assert TrainConfig(**parsed).content_hash() == TrainConfig().content_hash()


def test_train_seed_override(tmp_path):
    data = make_corpus(tmp_path)
    cfg = write_config(tmp_path, seed=0)
    out_a, out_b = tmp_path / "ra", tmp_path / "rb"
    run_cli("train", "--data", str(data), "--config", str(cfg),
            "--seed", "7", "--out", str(out_a))
    run_cli("train", "--data", str(data), "--config", str(cfg),
            "--seed", "7", "--out", str(out_b))
    ra = json.loads((out_a / "report.json").read_text())
    rb = json.loads((out_b / "report.json").read_text())
    assert ra["config"]["seed"] == 7
    assert ra["content_hash"] == rb["content_hash"]


def test_train_divergence_exits_4(tmp_path, capsys):
    # hand-written two-triangle corpus whose attributes contain a NaN
    data = tmp_path / "nan"
    data.mkdir()
    (data / "t_A.txt").write_text(
        "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n"
        "4, 5\n5, 4\n5, 6\n6, 5\n4, 6\n6, 4\n"
    )
    (data / "t_graph_indicator.txt").write_text("1\n1\n1\n2\n2\n2\n")
    (data / "t_node_attributes.txt").write_text("1.0\nnan\n1.0\n1.0\n1.0\n1.0\n")
    # the first forward pass washes the NaN out at a relu, but the backward
    # pass resurrects it (grad of x*s wrt s is x), so the second epoch sees
    # poisoned parameters and trips the finite check
    cfg = write_config(tmp_path, epochs=2, batch_size=2)
    code = run_cli("train", "--data", str(data), "--config", str(cfg),
                   "--out", str(tmp_path / "o"))
    assert code == EXIT_DIVERGENCE
    assert "non-finite" in capsys.readouterr().err


# ------------------------------------------------------------------- export


def trained_run(tmp_path, data):
    cfg = write_config(tmp_path)
    out = tmp_path / "run"
    assert run_cli("train", "--data", str(data), "--config", str(cfg),
                   "--out", str(out)) == EXIT_OK
    return out


def test_export_importance_contract(tmp_path):
    data = make_corpus(tmp_path)
    run_dir = trained_run(tmp_path, data)
    out = tmp_path / "importance.json"
    code = run_cli("export-importance", "--checkpoint",
                   str(run_dir / "checkpoint.json"), "--data", str(data),
                   "--out", str(out))
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    assert len(payload["graphs"]) == 8
    for record in payload["graphs"]:
        for sub in record["subgraphs"]:
            assert 0.0 <= sub["keep_probability"] <= 1.0
            dist = np.asarray(sub["strategy_distribution"])
            assert dist.shape == (5,)
            assert abs(dist.sum() - 1.0) <= 1e-9
            assert np.all(dist >= 0.0)


def test_export_importance_dim_mismatch_exits_5(tmp_path, capsys):
    data = make_corpus(tmp_path)  # degree one-hot features, dim > 1
    run_dir = trained_run(tmp_path, data)
    narrow = make_corpus(tmp_path, name="narrow", features="constant")
    code = run_cli("export-importance", "--checkpoint",
                   str(run_dir / "checkpoint.json"), "--data", str(narrow),
                   "--out", str(tmp_path / "x.json"))
    assert code == EXIT_COMPAT
    assert "features" in capsys.readouterr().err


# ------------------------------------------------------------------- config


def test_load_config_defaults_when_no_file():
    assert load_config() == TrainConfig()


def test_load_config_seed_override(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("seed = 3\n")
    assert load_config(path, seed=9).seed == 9
    assert load_config(path).seed == 3
