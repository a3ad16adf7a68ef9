"""Command-line behavior: subcommands, outputs, exit codes, determinism."""

import logging
import os
import subprocess
import sys

import pytest

from actknow.cli import ABLATION_HEADER, SWEEP_HEADER, main
from actknow.config import ExperimentConfig
from actknow.pipeline import load_pipeline
from actknow.training import STATS_HEADER

GEN_FLAGS = ["--n-entities", "20", "--n-relations", "3", "--n-questions", "12",
             "--seed", "3", "--node-dim", "8"]

TINY_FLAGS = ["--text-dim", "8", "--node-dim", "8", "--kg-dim", "4", "--gcn-hidden", "8",
              "--gcn-layers", "2", "--master-epochs", "1", "--sub-epochs", "1",
              "--kg-epochs", "2", "--pretrain-epochs", "0", "--batch-size", "4",
              "--max-nodes", "10", "--retrieve-k", "3", "--weight-decay", "0.01",
              "--learning-rate", "0.01"]


def data_flags(task_dir, with_features=True):
    flags = [
        "--kg", f"{task_dir}/kg.tsv",
        "--corpus", f"{task_dir}/corpus.txt",
        "--train", f"{task_dir}/train.jsonl",
        "--dev", f"{task_dir}/dev.jsonl",
        "--test", f"{task_dir}/test.jsonl",
    ]
    if with_features:
        flags += ["--node-features", f"{task_dir}/node_features.txt"]
    return flags


@pytest.fixture(scope="module")
def task_dir(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("clitask"))
    assert main(["gen-synth", "--out-dir", out, *GEN_FLAGS]) == 0
    return out


@pytest.fixture(scope="module")
def trained_dir(task_dir, tmp_path_factory):
    out = str(tmp_path_factory.mktemp("trained"))
    rc = main(["train", *data_flags(task_dir), *TINY_FLAGS, "--seed", "0", "--out-dir", out])
    assert rc == 0
    return out


def test_gen_synth_writes_task_files(task_dir, capsys):
    for name in ("kg.tsv", "corpus.txt", "node_features.txt", "train.jsonl", "dev.jsonl", "test.jsonl"):
        assert os.path.exists(os.path.join(task_dir, name)), name


def test_gen_synth_is_deterministic(task_dir, tmp_path):
    again = str(tmp_path / "again")
    assert main(["gen-synth", "--out-dir", again, *GEN_FLAGS]) == 0
    for name in ("kg.tsv", "corpus.txt", "train.jsonl"):
        a = open(os.path.join(task_dir, name), "rb").read()
        b = open(os.path.join(again, name), "rb").read()
        assert a == b, name


def test_gen_synth_seed_from_environment(tmp_path, monkeypatch, capsys):
    flags = ["--n-entities", "20", "--n-relations", "3", "--n-questions", "12",
             "--node-dim", "8"]
    monkeypatch.setenv("ACTKNOW_SEED", "3")
    env_dir = str(tmp_path / "env")
    assert main(["gen-synth", "--out-dir", env_dir, *flags]) == 0
    explicit = str(tmp_path / "explicit")
    assert main(["gen-synth", "--out-dir", explicit, *GEN_FLAGS]) == 0
    a = open(os.path.join(env_dir, "kg.tsv"), "rb").read()
    b = open(os.path.join(explicit, "kg.tsv"), "rb").read()
    assert a == b


def test_train_writes_checkpoint_and_stats(trained_dir):
    assert os.path.exists(os.path.join(trained_dir, "checkpoint.txt"))
    stats = open(os.path.join(trained_dir, "stats.csv")).read().strip().split("\n")
    assert stats[0] == ",".join(STATS_HEADER)
    # one master epoch, train and dev rows
    assert len(stats) == 3
    assert stats[1].split(",")[1] == "train"
    assert stats[2].split(",")[1] == "dev"


def test_train_missing_kg_exits_one(tmp_path, capsys):
    rc = main(["train", "--train", "x.jsonl", "--out-dir", str(tmp_path)])
    captured = capsys.readouterr()
    assert rc == 1
    assert "--kg" in captured.err


def test_unknown_flag_exits_one(capsys):
    rc = main(["train", "--no-such-flag", "1"])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_bad_subcommand_exits_one(capsys):
    assert main(["fly"]) == 1


def test_eval_reports_accuracy(task_dir, trained_dir, tmp_path, capsys):
    out = str(tmp_path / "eval")
    rc = main([
        "eval", *data_flags(task_dir), *TINY_FLAGS, "--seed", "0",
        "--checkpoint", os.path.join(trained_dir, "checkpoint.txt"),
        "--split", "test", "--out-dir", out,
    ])
    captured = capsys.readouterr()
    assert rc == 0
    assert "test accuracy" in captured.out
    rows = open(os.path.join(out, "eval.jsonl")).read().strip().split("\n")
    test_rows = open(os.path.join(task_dir, "test.jsonl")).read().strip().split("\n")
    assert len(rows) == len(test_rows)


def test_eval_rejects_mismatched_checkpoint(task_dir, trained_dir, tmp_path, capsys):
    other = str(tmp_path / "other_task")
    assert main(["gen-synth", "--out-dir", other, "--n-entities", "23",
                 "--n-relations", "3", "--n-questions", "12", "--seed", "8",
                 "--node-dim", "8"]) == 0
    rc = main([
        "eval", *data_flags(other), *TINY_FLAGS, "--seed", "0",
        "--checkpoint", os.path.join(trained_dir, "checkpoint.txt"),
        "--out-dir", str(tmp_path / "evalx"),
    ])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_eval_missing_checkpoint_file_exits_two(task_dir, tmp_path, capsys):
    rc = main([
        "eval", *data_flags(task_dir), *TINY_FLAGS,
        "--checkpoint", str(tmp_path / "nope.txt"),
        "--out-dir", str(tmp_path / "out"),
    ])
    assert rc == 2
    assert "failure:" in capsys.readouterr().err


def test_sweep_fraction_csv(task_dir, tmp_path, capsys):
    out = str(tmp_path / "sweep")
    argv = [
        "sweep-fraction", *data_flags(task_dir), *TINY_FLAGS,
        "--fractions", "1.0", "--modes", "text-only", "--seeds", "0,1",
        "--out-dir", out,
    ]
    assert main(argv) == 0
    lines = open(os.path.join(out, "sweep.csv")).read().strip().split("\n")
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert len(lines) == 3
    for line in lines[1:]:
        fraction, mode, seed, acc = line.split(",")
        assert fraction == "1.0"
        assert mode == "text-only"
        assert 0.0 <= float(acc) <= 1.0


def test_sweep_rerun_is_byte_identical(task_dir, tmp_path):
    argv = lambda out: [
        "sweep-fraction", *data_flags(task_dir), *TINY_FLAGS,
        "--fractions", "0.5,1.0", "--modes", "base-know", "--seeds", "1",
        "--out-dir", out,
    ]
    a = str(tmp_path / "a")
    b = str(tmp_path / "b")
    assert main(argv(a)) == 0
    assert main(argv(b)) == 0
    assert open(f"{a}/sweep.csv", "rb").read() == open(f"{b}/sweep.csv", "rb").read()


def test_ablate_subgraph_csv(task_dir, tmp_path):
    out = str(tmp_path / "ablate")
    argv = [
        "ablate-subgraph", *data_flags(task_dir), *TINY_FLAGS,
        "--node-budgets", "3,6", "--out-dir", out,
    ]
    assert main(argv) == 0
    lines = open(os.path.join(out, "ablation.csv")).read().strip().split("\n")
    assert lines[0] == ",".join(ABLATION_HEADER)
    assert [line.split(",")[0] for line in lines[1:]] == ["3", "6"]


def test_ablate_rejects_zero_budget(task_dir, tmp_path, capsys):
    rc = main([
        "ablate-subgraph", *data_flags(task_dir), *TINY_FLAGS,
        "--node-budgets", "0", "--out-dir", str(tmp_path),
    ])
    assert rc == 1
    assert "node_budgets" in capsys.readouterr().err


def test_split_count_warning(task_dir, caplog):
    cfg = ExperimentConfig(
        kg=f"{task_dir}/kg.tsv",
        corpus=f"{task_dir}/corpus.txt",
        train=f"{task_dir}/train.jsonl",
        dev=f"{task_dir}/dev.jsonl",
        test=f"{task_dir}/test.jsonl",
        dataset_name="arc-challenge",
        node_dim=8,
    )
    with caplog.at_level(logging.WARNING):
        load_pipeline(cfg)
    assert any("do not match" in r.getMessage() for r in caplog.records)


def test_module_entry_point(task_dir, tmp_path):
    out = str(tmp_path / "module_gen")
    proc = subprocess.run(
        [sys.executable, "-m", "actknow", "gen-synth", "--out-dir", out, *GEN_FLAGS],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert os.path.exists(os.path.join(out, "kg.tsv"))
