"""Knowledge-graph triple store and bilinear embedding training.

Triples load from tab-separated files (head, relation, tail per line).
Entity labels are normalized so free text can be matched against them:
lowercase, trimmed, underscores to spaces, runs of whitespace collapsed.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)

# neighbor direction flags
FORWARD = 0   # entity is the head of the stored triple
INVERSE = 1   # entity is the tail

_WS = re.compile(r"\s+")


def normalize_label(raw: str) -> str:
    return _WS.sub(" ", raw.strip().lower().replace("_", " "))


@dataclass(frozen=True)
class Triple:
    head: int
    relation: int
    tail: int


@dataclass
class KnowledgeGraph:
    entities: list[str]
    relations: list[str]
    triples: list[Triple]
    entity_ids: dict[str, int] = field(repr=False)
    relation_ids: dict[str, int] = field(repr=False)
    # per entity: sorted tuples (neighbor, relation, direction)
    adjacency: list[tuple[tuple[int, int, int], ...]] = field(repr=False)
    max_label_tokens: int = 1

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)


def _build_graph(entities, relations, entity_ids, relation_ids, triples) -> KnowledgeGraph:
    adj: list[list[tuple[int, int, int]]] = [[] for _ in entities]
    for t in triples:
        adj[t.head].append((t.tail, t.relation, FORWARD))
        adj[t.tail].append((t.head, t.relation, INVERSE))
    adjacency = [tuple(sorted(entries)) for entries in adj]
    max_tokens = max((label.count(" ") + 1 for label in entities), default=1)
    return KnowledgeGraph(
        entities=entities,
        relations=relations,
        triples=triples,
        entity_ids=entity_ids,
        relation_ids=relation_ids,
        adjacency=adjacency,
        max_label_tokens=max_tokens,
    )


def graph_from_triples(raw_triples: list[tuple[str, str, str]]) -> KnowledgeGraph:
    """Build a graph from (head, relation, tail) label strings."""
    entities: list[str] = []
    relations: list[str] = []
    entity_ids: dict[str, int] = {}
    relation_ids: dict[str, int] = {}
    triples: list[Triple] = []
    seen: set[tuple[int, int, int]] = set()
    skipped_self = 0

    def ent_id(label: str) -> int:
        if label not in entity_ids:
            entity_ids[label] = len(entities)
            entities.append(label)
        return entity_ids[label]

    def rel_id(label: str) -> int:
        if label not in relation_ids:
            relation_ids[label] = len(relations)
            relations.append(label)
        return relation_ids[label]

    for head_raw, rel_raw, tail_raw in raw_triples:
        head = normalize_label(head_raw)
        tail = normalize_label(tail_raw)
        rel = rel_raw.strip()
        if not head or not rel or not tail:
            raise ConfigError(f"triple has an empty field: {(head_raw, rel_raw, tail_raw)!r}")
        if head == tail:
            # the entity stays in the vocabulary, just without the loop edge
            ent_id(head)
            rel_id(rel)
            skipped_self += 1
            continue
        key = (ent_id(head), rel_id(rel), ent_id(tail))
        if key in seen:
            continue
        seen.add(key)
        triples.append(Triple(*key))

    if not triples:
        raise ConfigError("no usable triples")
    if skipped_self:
        log.info("skipped %d self-loop triples", skipped_self)
    return _build_graph(entities, relations, entity_ids, relation_ids, triples)


def load_triples(path: str) -> KnowledgeGraph:
    """Load a graph from a TSV file of head<TAB>relation<TAB>tail lines."""
    raw: list[tuple[str, str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ConfigError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            if any(not p.strip() for p in parts):
                raise ConfigError(f"{path}:{lineno}: empty field in triple")
            raw.append((parts[0], parts[1], parts[2]))
    if not raw:
        raise ConfigError(f"{path}: no triples found")
    graph = graph_from_triples(raw)
    log.info(
        "loaded %s: %d entities, %d relations, %d triples",
        path, graph.n_entities, graph.n_relations, len(graph.triples),
    )
    return graph


def neighbors(graph: KnowledgeGraph, entity: int) -> tuple[tuple[int, int, int], ...]:
    """All (neighbor, relation, direction) entries for an entity, both directions,
    sorted ascending. Isolated entities yield an empty tuple."""
    if not 0 <= entity < graph.n_entities:
        raise KeyError(f"entity id {entity} out of range")
    return graph.adjacency[entity]


# ---------------------------------------------------------------------------
# embeddings


@dataclass
class EmbeddingTable:
    dim: int
    vectors: np.ndarray  # (n_items, dim) float64


def triple_score(ent: np.ndarray, rel: np.ndarray, triple: Triple) -> float:
    """Bilinear-diagonal score: sum_k e_h[k] * r[k] * e_t[k]."""
    return float(np.sum(ent[triple.head] * rel[triple.relation] * ent[triple.tail]))


def train_kg_embeddings(
    graph: KnowledgeGraph,
    dim: int,
    epochs: int,
    seed: int,
    lr: float = 0.05,
    margin: float = 1.0,
) -> tuple[EmbeddingTable, EmbeddingTable]:
    """Train entity/relation tables with a margin loss against uniformly
    sampled corruptions. epochs=0 returns the seeded random init unchanged."""
    if dim < 2:
        raise ConfigError(f"embedding dim must be >= 2, got {dim}")
    if epochs < 0:
        raise ConfigError("epochs must be >= 0")
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(dim)
    ent = rng.normal(0.0, scale, size=(graph.n_entities, dim))
    rel = rng.normal(0.0, scale, size=(graph.n_relations, dim))

    n_ent = graph.n_entities
    for _ in range(epochs):
        order = rng.permutation(len(graph.triples))
        for idx in order:
            t = graph.triples[idx]
            corrupt_head = bool(rng.integers(0, 2))
            repl = int(rng.integers(0, n_ent))
            if corrupt_head and repl == t.head or not corrupt_head and repl == t.tail:
                repl = (repl + 1) % n_ent
            if corrupt_head:
                nh, nt = repl, t.tail
            else:
                nh, nt = t.head, repl

            r = rel[t.relation]
            pos = np.sum(ent[t.head] * r * ent[t.tail])
            neg = np.sum(ent[nh] * r * ent[nt])
            if margin - pos + neg <= 0:
                continue
            # ascend the positive score, descend the negative one
            gh = r * ent[t.tail]
            gt = r * ent[t.head]
            gr_pos = ent[t.head] * ent[t.tail]
            gnh = r * ent[nt]
            gnt = r * ent[nh]
            gr_neg = ent[nh] * ent[nt]
            ent[t.head] += lr * gh
            ent[t.tail] += lr * gt
            ent[nh] -= lr * gnh
            ent[nt] -= lr * gnt
            rel[t.relation] += lr * (gr_pos - gr_neg)

    if not (np.all(np.isfinite(ent)) and np.all(np.isfinite(rel))):
        raise FloatingPointError("embedding training produced non-finite values")
    return EmbeddingTable(dim, ent), EmbeddingTable(dim, rel)


# ---------------------------------------------------------------------------
# node features for the graph encoder


def random_node_features(graph: KnowledgeGraph, dim: int, seed: int) -> EmbeddingTable:
    """Seeded random per-entity feature table (pretrained-embedding stand-in)."""
    if dim < 1:
        raise ConfigError(f"node feature dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    return EmbeddingTable(dim, rng.normal(0.0, 1.0, size=(graph.n_entities, dim)))


def load_text_embeddings(path: str) -> tuple[dict[str, np.ndarray], int]:
    """Read a `token v1 v2 ... vd` text embedding file."""
    table: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise ConfigError(f"{path}:{lineno}: expected token followed by values")
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad embedding value") from exc
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ConfigError(f"{path}:{lineno}: dimension mismatch ({vec.size} vs {dim})")
            table[normalize_label(parts[0])] = vec
    if dim is None:
        raise ConfigError(f"{path}: empty embedding file")
    return table, dim


def node_feature_table(
    graph: KnowledgeGraph,
    dim: int,
    seed: int,
    embeddings_path: str | None = None,
) -> EmbeddingTable:
    """Per-entity feature table: seeded random rows, overridden per entity by
    a text embedding file when one is given (matched on normalized label)."""
    base = random_node_features(graph, dim, seed)
    if embeddings_path is None:
        return base
    table, file_dim = load_text_embeddings(embeddings_path)
    if file_dim != dim:
        raise ConfigError(
            f"{embeddings_path}: embedding dim {file_dim} does not match node dim {dim}"
        )
    hits = 0
    for label, idx in graph.entity_ids.items():
        vec = table.get(label)
        if vec is not None:
            base.vectors[idx] = vec
            hits += 1
    log.info("node features: %d/%d entities overridden from %s", hits, graph.n_entities, embeddings_path)
    return base
