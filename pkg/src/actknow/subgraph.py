"""Concept mention scanning and bounded question subgraphs.

Mentions are KG entity labels found in text by greedy longest-match-first
n-gram scanning. A subgraph starts from the mentioned entities (seeds),
adds the first depth-limited DFS path between each seed pair, then keeps
every KG edge among the included nodes. The symmetric adjacency is
degree-normalized for the graph encoder.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kg import FORWARD, KnowledgeGraph
from .retrieval import tokenize


@dataclass(frozen=True)
class ConceptMention:
    entity: int
    span: tuple[int, int]  # token offsets [start, end) in the tokenized text
    source: str            # "premise" or "hypothesis"


@dataclass
class Subgraph:
    nodes: list[int]                      # entity ids, seeds first
    edges: list[tuple[int, int, int]]     # (node_index, node_index, relation)
    adjacency: np.ndarray                 # C: symmetric 0/1, zero diagonal
    adjacency_self: np.ndarray            # C + I
    norm_adjacency: np.ndarray            # D^-1/2 (C+I) D^-1/2
    paths: list[list[int]] = field(default_factory=list)  # selected seed-to-seed paths

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def identify_concepts(text: str, graph: KnowledgeGraph, source: str = "premise") -> list[ConceptMention]:
    """Scan tokenized text for entity labels, longest n-grams first,
    non-overlapping, earliest occurrence wins within a length."""
    tokens = tokenize(text)
    if not tokens:
        return []
    used = [False] * len(tokens)
    found: list[ConceptMention] = []
    max_n = min(graph.max_label_tokens, len(tokens))
    for n in range(max_n, 0, -1):
        for start in range(0, len(tokens) - n + 1):
            if any(used[start : start + n]):
                continue
            candidate = " ".join(tokens[start : start + n])
            entity = graph.entity_ids.get(candidate)
            if entity is None:
                continue
            for i in range(start, start + n):
                used[i] = True
            found.append(ConceptMention(entity=entity, span=(start, start + n), source=source))
    found.sort(key=lambda m: m.span)
    return found


def _dfs_path(graph: KnowledgeGraph, src: int, dst: int, max_len: int) -> list[int] | None:
    """First simple path src->dst with at most max_len edges, visiting
    neighbors in ascending (entity, relation) order."""
    path = [src]
    on_path = {src}

    def explore(node: int, budget: int) -> bool:
        if budget == 0:
            return False
        for nb, _rel, _direction in graph.adjacency[node]:
            if nb in on_path:
                continue
            path.append(nb)
            if nb == dst:
                return True
            on_path.add(nb)
            if explore(nb, budget - 1):
                return True
            on_path.discard(nb)
            path.pop()
        return False

    if explore(src, max_len):
        return path
    return None


def connect_concepts(
    graph: KnowledgeGraph,
    seeds: list[int],
    max_path_len: int = 2,
    max_nodes: int = 50,
) -> Subgraph:
    """Build the subgraph for a set of seed entities.

    Seed pairs are processed in sorted order; a pair's path is added only if
    the node budget still fits, and construction stops once it does not.
    Seeds are always included, connected or not.
    """
    if max_path_len < 1:
        raise ConfigError(f"max_path_len must be >= 1, got {max_path_len}")
    seed_list = sorted(set(seeds))
    for s in seed_list:
        if not 0 <= s < graph.n_entities:
            raise KeyError(f"seed entity id {s} out of range")
    if max_nodes < len(seed_list):
        raise ConfigError(f"max_nodes={max_nodes} is below the {len(seed_list)} seeds")

    nodes: list[int] = list(seed_list)
    node_set = set(nodes)
    paths: list[list[int]] = []
    for a, b in itertools.combinations(seed_list, 2):
        if len(nodes) >= max_nodes:
            break
        path = _dfs_path(graph, a, b, max_path_len)
        if path is None:
            continue
        new = [p for p in path if p not in node_set]
        if len(nodes) + len(new) > max_nodes:
            break
        for p in new:
            nodes.append(p)
            node_set.add(p)
        paths.append(path)

    index = {e: i for i, e in enumerate(nodes)}
    n = len(nodes)
    adjacency = np.zeros((n, n))
    edges: list[tuple[int, int, int]] = []
    for e in nodes:
        i = index[e]
        for nb, rel, direction in graph.adjacency[e]:
            j = index.get(nb)
            if j is None:
                continue
            if direction == FORWARD:  # count each stored triple once, from its head
                edges.append((i, j, rel))
            adjacency[i, j] = 1.0
            adjacency[j, i] = 1.0

    adjacency_self = adjacency + np.eye(n)
    norm = normalize_adjacency(adjacency)
    return Subgraph(
        nodes=nodes,
        edges=edges,
        adjacency=adjacency,
        adjacency_self=adjacency_self,
        norm_adjacency=norm,
        paths=paths,
    )


def normalize_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization with self-loops:
    D^-1/2 (C + I) D^-1/2 where D = rowsum(C + I)."""
    c = np.asarray(adjacency, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {c.shape}")
    n = c.shape[0]
    if n == 0:
        raise ValueError("adjacency must be non-empty")
    if not np.array_equal(c, c.T):
        raise ValueError("adjacency must be symmetric")
    if not np.all((c == 0.0) | (c == 1.0)):
        raise ValueError("adjacency entries must be 0 or 1")
    if np.any(np.diag(c) != 0.0):
        raise ValueError("adjacency diagonal must be zero")
    with_self = c + np.eye(n)
    degrees = with_self.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(degrees)
    return with_self * np.outer(inv_sqrt, inv_sqrt)
