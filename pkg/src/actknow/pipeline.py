"""End-to-end assembly: load data, build shared structures, train, evaluate.

Shared by the command-line entry points and the experiment scripts so both
run the identical pipeline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import ExperimentConfig, train_config
from .encoders import Vocab, build_vocab
from .errors import ConfigError
from .kg import EmbeddingTable, KnowledgeGraph, load_triples, node_feature_table, train_kg_embeddings
from .nli import QAItem, load_qa_jsonl
from .retrieval import Corpus, InvertedIndex, build_index, load_corpus
from .training import (
    ModelParams,
    PreparedQuestion,
    TrainConfig,
    TrainResult,
    init_model,
    prepare_questions,
    sample_fraction,
    train_act_know,
    train_base_know,
)

log = logging.getLogger(__name__)

# published split sizes for the common science QA benchmarks; a mismatch in
# supplied data gets a warning, not an error
KNOWN_SPLIT_COUNTS = {
    "arc-easy": (2251, 570, 2376),
    "arc-challenge": (1119, 299, 1172),
    "openbookqa": (4957, 500, 500),
}


@dataclass
class Pipeline:
    graph: KnowledgeGraph
    corpus: Corpus
    index: InvertedIndex
    vocab: Vocab
    node_features: EmbeddingTable
    items: dict[str, list[QAItem]]


def load_pipeline(cfg: ExperimentConfig) -> Pipeline:
    """Load graph, corpus and question splits; build the retrieval index,
    vocabulary and node features shared by every run."""
    cfg.require("kg", "corpus")
    graph = load_triples(cfg.kg)
    corpus = load_corpus(cfg.corpus)
    index = build_index(corpus)

    items: dict[str, list[QAItem]] = {}
    for split in ("train", "dev", "test"):
        path = getattr(cfg, split)
        if path:
            items[split] = load_qa_jsonl(path)
    if cfg.dataset_name:
        _check_split_counts(cfg.dataset_name, items)

    texts = list(corpus.sentences)
    for split_items in items.values():
        for item in split_items:
            texts.append(item.stem)
            texts.extend(item.choices)
    vocab = build_vocab(texts)

    node_features = node_feature_table(graph, cfg.node_dim, cfg.seed, cfg.node_features)
    return Pipeline(
        graph=graph,
        corpus=corpus,
        index=index,
        vocab=vocab,
        node_features=node_features,
        items=items,
    )


def _check_split_counts(name: str, items: dict[str, list[QAItem]]) -> None:
    expected = KNOWN_SPLIT_COUNTS.get(name.lower())
    if expected is None:
        return
    actual = tuple(len(items.get(split, [])) for split in ("train", "dev", "test"))
    if actual != expected:
        log.warning(
            "dataset %s: split sizes %s do not match the published %s",
            name, actual, expected,
        )


def prepare_split(pipe: Pipeline, split: str, tc: TrainConfig) -> list[PreparedQuestion]:
    if split not in pipe.items:
        raise ConfigError(f"no {split} split was supplied")
    return prepare_questions(pipe.items[split], pipe.corpus, pipe.index, pipe.graph, pipe.vocab, tc)


def build_model(pipe: Pipeline, tc: TrainConfig) -> ModelParams:
    """Seeded model init on top of freshly trained graph embedding tables."""
    ent_table, rel_table = train_kg_embeddings(pipe.graph, tc.kg_dim, tc.kg_epochs, tc.seed)
    return init_model(len(pipe.vocab.tokens), ent_table, rel_table, pipe.node_features, tc)


def run_training(
    pipe: Pipeline,
    tc: TrainConfig,
    train_qs: list[PreparedQuestion],
    dev_qs: list[PreparedQuestion] | None,
) -> tuple[ModelParams, TrainResult]:
    if tc.data_fraction < 1.0:
        train_qs = sample_fraction(train_qs, tc.data_fraction, tc.seed)
        log.info("training on %d questions after fraction sampling", len(train_qs))
    model = build_model(pipe, tc)
    if tc.mode == "act-know":
        result = train_act_know(model, train_qs, dev_qs, tc)
    else:
        result = train_base_know(model, train_qs, dev_qs, tc)
    return model, result


def training_config_for(cfg: ExperimentConfig, **overrides) -> TrainConfig:
    tc = train_config(cfg)
    for name, value in overrides.items():
        setattr(tc, name, value)
    tc.validate()
    return tc
