"""In-memory inverted index with BM25 ranking (k1=1.2, b=0.75).

The whole corpus is one sentence per line; scores use the always-positive
idf variant ln(1 + (N - df + 0.5) / (df + 0.5)), and duplicate query tokens
count once. Ties break by ascending sentence id.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import ConfigError

K1 = 1.2
B = 0.75

_TOKEN = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass
class Corpus:
    sentences: list[str]
    tokenized: list[list[str]]


def corpus_from_sentences(sentences: list[str]) -> Corpus:
    return Corpus(sentences=list(sentences), tokenized=[tokenize(s) for s in sentences])


def load_corpus(path: str) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        sentences = [line.rstrip("\n") for line in fh if line.strip()]
    if not sentences:
        raise ConfigError(f"{path}: empty corpus")
    return corpus_from_sentences(sentences)


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[int, int]]]  # token -> [(sentence_id, tf)], id-ascending
    doc_lengths: list[int]
    avg_doc_length: float
    doc_count: int


def build_index(corpus: Corpus) -> InvertedIndex:
    if not corpus.sentences:
        raise ConfigError("cannot index an empty corpus")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths = []
    for sid, tokens in enumerate(corpus.tokenized):
        doc_lengths.append(len(tokens))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for tok, tf in counts.items():
            postings.setdefault(tok, []).append((sid, tf))
    total = sum(doc_lengths)
    avg = total / len(doc_lengths) if doc_lengths else 0.0
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=avg,
        doc_count=len(doc_lengths),
    )


def bm25_idf(doc_count: int, df: int) -> float:
    return math.log(1.0 + (doc_count - df + 0.5) / (df + 0.5))


def bm25_term_weight(tf: int, doc_length: int, avg_doc_length: float) -> float:
    norm = K1 * (1.0 - B + B * doc_length / avg_doc_length)
    return tf * (K1 + 1.0) / (tf + norm)


def retrieve(index: InvertedIndex, query: str, k: int) -> list[tuple[int, float]]:
    """Top-k (sentence_id, score) for the query; only sentences sharing at
    least one query token are candidates."""
    if k < 1:
        raise ConfigError(f"retrieve: k must be >= 1, got {k}")
    scores: dict[int, float] = {}
    for tok in sorted(set(tokenize(query))):
        plist = index.postings.get(tok)
        if not plist:
            continue
        idf = bm25_idf(index.doc_count, len(plist))
        for sid, tf in plist:
            w = idf * bm25_term_weight(tf, index.doc_lengths[sid], index.avg_doc_length)
            scores[sid] = scores.get(sid, 0.0) + w
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]
