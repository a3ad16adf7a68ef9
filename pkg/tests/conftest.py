import numpy as np
import pytest

from actknow.kg import EmbeddingTable, graph_from_triples
from actknow.scenarios import LOWDATA_SPEC, NOISY_SPEC, ensure_generated
from actknow.training import TrainConfig, init_model


@pytest.fixture(scope="session")
def lowdata_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("lowdata")
    ensure_generated(LOWDATA_SPEC, str(path))
    return str(path)


@pytest.fixture(scope="session")
def noisy_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("noisy")
    ensure_generated(NOISY_SPEC, str(path))
    return str(path)


@pytest.fixture
def chain_graph():
    """a - r1 -> b - r2 -> c plus a spur d, enough for path tests."""
    return graph_from_triples(
        [("a", "r1", "b"), ("b", "r2", "c"), ("b", "r1", "d")]
    )


def tiny_config(**overrides) -> TrainConfig:
    base = dict(
        mode="base-know",
        master_epochs=2,
        sub_epochs=1,
        learning_rate=1e-2,
        batch_size=4,
        seed=0,
        text_dim=8,
        node_dim=6,
        kg_dim=4,
        gcn_hidden=8,
        gcn_layers=2,
        pretrain_epochs=0,
        kg_epochs=0,
        weight_decay=0.0,
    )
    base.update(overrides)
    cfg = TrainConfig(**base)
    cfg.validate()
    return cfg


def tiny_model(graph, config: TrainConfig, vocab_size: int = 20):
    rng = np.random.default_rng(7)
    entities = EmbeddingTable(
        dim=config.kg_dim, vectors=rng.normal(0.0, 0.5, (graph.n_entities, config.kg_dim))
    )
    relations = EmbeddingTable(
        dim=config.kg_dim, vectors=rng.normal(0.0, 0.5, (graph.n_relations, config.kg_dim))
    )
    nodes = EmbeddingTable(
        dim=config.node_dim, vectors=rng.normal(0.0, 0.5, (graph.n_entities, config.node_dim))
    )
    return init_model(vocab_size, entities, relations, nodes, config)
