"""Turn multiple-choice questions into premise/hypothesis pairs.

The hypothesis swaps the first WH word of the stem for the candidate answer
and drops the trailing question mark. Premises come from BM25 retrieval
over the sentence corpus, top sentences joined by single spaces.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import ConfigError
from .retrieval import Corpus, InvertedIndex, retrieve

_WH = re.compile(r"\b(what|which|where|who|when|why|how)\b", re.IGNORECASE)


@dataclass
class QAItem:
    id: str
    stem: str
    choices: list[str]
    answer_index: int


@dataclass
class NLIPair:
    premise: str
    hypothesis: str
    choice_index: int


def _strip_trailing_question_mark(text: str) -> str:
    out = text.rstrip()
    if out.endswith("?"):
        out = out[:-1].rstrip()
    return out


def make_hypothesis(stem: str, choice: str) -> str:
    """Replace the first WH word with the choice; with no WH word, append the
    choice after the stem instead. The trailing '?' is dropped either way."""
    match = _WH.search(stem)
    if match:
        rewritten = stem[: match.start()] + choice + stem[match.end():]
        return _strip_trailing_question_mark(rewritten)
    return _strip_trailing_question_mark(stem) + " " + choice


def convert(item: QAItem, index: InvertedIndex, corpus: Corpus, k: int) -> list[NLIPair]:
    """One premise/hypothesis pair per answer choice, in choice order.

    The retrieval query is the stem plus the choice text; a query matching
    nothing yields an empty premise.
    """
    pairs = []
    for i, choice in enumerate(item.choices):
        hits = retrieve(index, item.stem + " " + choice, k)
        premise = " ".join(corpus.sentences[sid] for sid, _ in hits)
        pairs.append(NLIPair(premise=premise, hypothesis=make_hypothesis(item.stem, choice), choice_index=i))
    return pairs


# ---------------------------------------------------------------------------
# dataset files: JSON lines with id, question, choices, answer_index


def load_qa_jsonl(path: str) -> list[QAItem]:
    items: list[QAItem] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            try:
                item = QAItem(
                    id=str(obj["id"]),
                    stem=str(obj["question"]),
                    choices=[str(c) for c in obj["choices"]],
                    answer_index=int(obj["answer_index"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: missing or malformed field: {exc}") from exc
            if len(item.choices) < 2:
                raise ConfigError(f"{path}:{lineno}: need at least 2 choices")
            if not 0 <= item.answer_index < len(item.choices):
                raise ConfigError(f"{path}:{lineno}: answer_index {item.answer_index} out of range")
            items.append(item)
    if not items:
        raise ConfigError(f"{path}: no questions found")
    return items


def save_qa_jsonl(path: str, items: list[QAItem]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(
                json.dumps(
                    {
                        "id": item.id,
                        "question": item.stem,
                        "choices": item.choices,
                        "answer_index": item.answer_index,
                    }
                )
                + "\n"
            )
