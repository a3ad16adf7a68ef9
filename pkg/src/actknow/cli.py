"""Command-line entry points.

Subcommands: train, eval, sweep-fraction, ablate-subgraph, gen-synth.
Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys

from .checkpoint import load_checkpoint, save_checkpoint
from .config import _coerce, _LIST_FIELDS, ExperimentConfig, resolve_config, train_config
from .errors import ConfigError
from .pipeline import Pipeline, load_pipeline, prepare_split, run_training, training_config_for
from .synth import SyntheticSpec, generate
from .training import MODES, evaluate, model_from_state, write_stats_csv

log = logging.getLogger(__name__)

SWEEP_HEADER = ["fraction", "mode", "seed", "accuracy"]
ABLATION_HEADER = ["max_nodes", "accuracy"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; route through the normal
    # config-error path instead so bad usage exits 1
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(message)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value settings file")
    for f in dataclasses.fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name in _LIST_FIELDS:
            parser.add_argument(flag, dest=f.name, metavar="LIST", help="comma separated values")
        elif f.default is True or f.default is False:
            parser.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        elif isinstance(f.default, int) and not isinstance(f.default, bool):
            parser.add_argument(flag, dest=f.name, type=int)
        elif isinstance(f.default, float):
            parser.add_argument(flag, dest=f.name, type=float)
        else:
            parser.add_argument(flag, dest=f.name)


def _flag_values(args: argparse.Namespace) -> dict[str, object]:
    values: dict[str, object] = {}
    for f in dataclasses.fields(ExperimentConfig):
        raw = getattr(args, f.name, None)
        if raw is None:
            continue
        values[f.name] = _coerce(f.name, raw) if f.name in _LIST_FIELDS else raw
    return values


def _resolved(args: argparse.Namespace) -> ExperimentConfig:
    return resolve_config(_flag_values(args), args.config)


def _out_path(cfg: ExperimentConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="actknow", description="knowledge-infused multiple choice QA experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one model and save the best checkpoint")
    _add_config_flags(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved checkpoint on one split")
    _add_config_flags(p_eval)

    p_sweep = sub.add_parser("sweep-fraction", help="accuracy across training-set fractions, modes and seeds")
    _add_config_flags(p_sweep)

    p_ablate = sub.add_parser("ablate-subgraph", help="accuracy across subgraph node budgets")
    _add_config_flags(p_ablate)

    p_gen = sub.add_parser("gen-synth", help="generate and verify a synthetic task")
    p_gen.add_argument("--out-dir", required=True)
    p_gen.add_argument("--n-entities", type=int)
    p_gen.add_argument("--n-relations", type=int)
    p_gen.add_argument("--n-questions", type=int)
    p_gen.add_argument("--hop-depth", type=int)
    p_gen.add_argument("--distractors", type=int, dest="distractor_count")
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--noise-entities", type=int)
    p_gen.add_argument("--noise-edges", type=int)
    p_gen.add_argument("--premise-noise", type=int)
    p_gen.add_argument("--node-dim", type=int)
    p_gen.add_argument("--train-fraction", type=float)
    p_gen.add_argument("--dev-fraction", type=float)
    return parser


def cmd_train(args: argparse.Namespace) -> None:
    cfg = _resolved(args)
    cfg.require("kg", "corpus", "train")
    pipe = load_pipeline(cfg)
    tc = train_config(cfg)
    train_qs = prepare_split(pipe, "train", tc)
    dev_qs = prepare_split(pipe, "dev", tc) if "dev" in pipe.items else None

    model, result = run_training(pipe, tc, train_qs, dev_qs)

    ckpt_path = _out_path(cfg, "checkpoint.txt")
    save_checkpoint(ckpt_path, result.best_state)
    stats_path = _out_path(cfg, "stats.csv")
    write_stats_csv(stats_path, result.stats)
    select = "dev" if dev_qs else "train"
    print(f"best {select} accuracy {result.best_accuracy:.4f} at epoch {result.best_epoch}")

    if "test" in pipe.items:
        model.load_state_arrays(result.best_state)
        test_qs = prepare_split(pipe, "test", tc)
        acc, _ = evaluate(test_qs, model, tc)
        print(f"test accuracy {acc:.4f}")
    print(f"checkpoint {ckpt_path}")
    print(f"stats {stats_path}")


def cmd_eval(args: argparse.Namespace) -> None:
    cfg = _resolved(args)
    cfg.require("kg", "corpus", "checkpoint", cfg.split)
    pipe = load_pipeline(cfg)
    tc = train_config(cfg)
    model = model_from_state(load_checkpoint(cfg.checkpoint))
    if model.text.token_embedding.data.shape[0] != len(pipe.vocab.tokens):
        raise ConfigError(
            f"checkpoint vocabulary has {model.text.token_embedding.data.shape[0]} tokens "
            f"but the supplied corpus and questions build {len(pipe.vocab.tokens)}; "
            "evaluate with the files used for training"
        )
    if model.er.entity_table.data.shape[0] != pipe.graph.n_entities:
        raise ConfigError("checkpoint entity table does not match the supplied graph")

    questions = prepare_split(pipe, cfg.split, tc)
    acc, rows = evaluate(questions, model, tc, with_details=True)
    out_path = _out_path(cfg, "eval.jsonl")
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    print(f"{cfg.split} accuracy {acc:.4f} over {len(rows)} questions")
    print(f"details {out_path}")


def cmd_sweep_fraction(args: argparse.Namespace) -> None:
    cfg = _resolved(args)
    cfg.require("kg", "corpus", "train", "test")
    pipe = load_pipeline(cfg)
    base_tc = train_config(cfg)
    train_qs = prepare_split(pipe, "train", base_tc)
    dev_qs = prepare_split(pipe, "dev", base_tc) if "dev" in pipe.items else None
    test_qs = prepare_split(pipe, "test", base_tc)

    rows = []
    for fraction in cfg.fractions:
        for mode in cfg.modes:
            for seed in cfg.seeds:
                tc = training_config_for(cfg, mode=mode, seed=seed, data_fraction=fraction)
                model, result = run_training(pipe, tc, train_qs, dev_qs)
                model.load_state_arrays(result.best_state)
                acc, _ = evaluate(test_qs, model, tc)
                rows.append((fraction, mode, seed, acc))
                print(f"fraction {fraction} mode {mode} seed {seed}: accuracy {acc:.4f}")

    out_path = _out_path(cfg, "sweep.csv")
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for fraction, mode, seed, acc in rows:
            writer.writerow([repr(float(fraction)), mode, seed, repr(acc)])
    print(f"sweep {out_path}")


def cmd_ablate_subgraph(args: argparse.Namespace) -> None:
    cfg = _resolved(args)
    cfg.require("kg", "corpus", "train", "test")
    pipe = load_pipeline(cfg)

    rows = []
    for budget in cfg.node_budgets:
        tc = training_config_for(cfg, max_nodes=budget)
        train_qs = prepare_split(pipe, "train", tc)
        dev_qs = prepare_split(pipe, "dev", tc) if "dev" in pipe.items else None
        test_qs = prepare_split(pipe, "test", tc)
        model, result = run_training(pipe, tc, train_qs, dev_qs)
        model.load_state_arrays(result.best_state)
        acc, _ = evaluate(test_qs, model, tc)
        rows.append((budget, acc))
        print(f"max_nodes {budget}: accuracy {acc:.4f}")

    out_path = _out_path(cfg, "ablation.csv")
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ABLATION_HEADER)
        for budget, acc in rows:
            writer.writerow([budget, repr(acc)])
    print(f"ablation {out_path}")


def cmd_gen_synth(args: argparse.Namespace) -> None:
    values = {}
    for f in dataclasses.fields(SyntheticSpec):
        raw = getattr(args, f.name, None)
        if raw is not None:
            values[f.name] = raw
    if "seed" not in values:
        env_seed = os.environ.get("ACTKNOW_SEED")
        if env_seed is not None:
            try:
                values["seed"] = int(env_seed)
            except ValueError as exc:
                raise ConfigError(f"ACTKNOW_SEED must be an integer, got {env_seed!r}") from exc
    spec = SyntheticSpec(**values)
    report = generate(spec, args.out_dir)
    print(
        f"generated {report['questions']} questions over {report['chains']} chains "
        f"({report['entities']} entities, {report['sentences']} corpus sentences)"
    )
    print("splits " + " ".join(f"{k}={v}" for k, v in report["splits"].items()))
    print(
        f"verifier: {report['kg_answerable']}/{report['total']} answerable from the graph, "
        f"{report['lexically_answerable']} answerable from text overlap, "
        f"{report['bait_present']} with a lexical bait"
    )
    if report["failures"]:
        for line in report["failures"][:10]:
            print(f"verifier failure: {line}", file=sys.stderr)
        raise RuntimeError(f"verification failed for {len(report['failures'])} checks")
    print(f"files in {args.out_dir}")


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep-fraction": cmd_sweep_fraction,
    "ablate-subgraph": cmd_ablate_subgraph,
    "gen-synth": cmd_gen_synth,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        _COMMANDS[args.command](args)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the exit-code contract needs a catch-all
        log.exception("command failed")
        print(f"failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
