"""Question scoring, entropy weighting, and the two training loops.

Both trainers share one loop skeleton of master epochs each containing
sub-epochs of Adam updates. The plain trainer applies fixed per-question
weights; the active trainer re-measures every training question's
prediction entropy at the start of each master epoch (parameters frozen,
eval-mode forward) and uses it to scale the graph and knowledge features
for, and only for, that epoch's updates. Entropy never carries gradient.
"""

from __future__ import annotations

import copy
import csv
import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoders import (
    ERAttentionParams,
    GCNParams,
    TextEncoderParams,
    Vocab,
    encode_pair_tokens,
    encode_text,
    er_attention,
    gcn_forward,
    graph_attention_pool,
    init_er_params,
    init_gcn_params,
    init_text_params,
)
from .errors import ConfigError
from .kg import EmbeddingTable, KnowledgeGraph
from .nli import QAItem, convert
from .optim import Adam
from .retrieval import Corpus, InvertedIndex
from .subgraph import Subgraph, connect_concepts, identify_concepts

log = logging.getLogger(__name__)

MODES = ("text-only", "base-know", "act-know")

STATS_HEADER = ["epoch", "split", "accuracy", "mean_entropy", "loss"]


@dataclass
class TrainConfig:
    mode: str = "base-know"
    master_epochs: int = 10
    sub_epochs: int = 3
    learning_rate: float = 1e-3
    batch_size: int = 8
    seed: int = 0
    data_fraction: float = 1.0
    gumbel_temperature: float = 1.0
    max_path_len: int = 2
    max_nodes: int = 50
    retrieve_k: int = 5
    use_gcn: bool = True
    use_er: bool = True
    pretrain_epochs: int = 2
    warmup_steps: int = 0
    text_dim: int = 64
    node_dim: int = 32
    kg_dim: int = 32
    gcn_hidden: int = 64
    gcn_layers: int = 2
    kg_epochs: int = 30
    entropy_split: str = "train"  # train | dev
    adam_beta1: float = 0.9
    adam_beta2: float = 0.98
    adam_eps: float = 1e-6
    weight_decay: float = 0.1

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("master_epochs", "sub_epochs", "batch_size", "max_path_len",
                     "max_nodes", "retrieve_k", "text_dim", "node_dim", "gcn_hidden",
                     "gcn_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.kg_dim < 2:
            raise ConfigError(f"kg_dim must be >= 2, got {self.kg_dim}")
        if self.pretrain_epochs < 0 or self.warmup_steps < 0 or self.kg_epochs < 0:
            raise ConfigError("pretrain_epochs, warmup_steps and kg_epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 < self.data_fraction <= 1:
            raise ConfigError(f"data_fraction must be in (0, 1], got {self.data_fraction}")
        if self.gumbel_temperature <= 0:
            raise ConfigError(f"gumbel_temperature must be positive, got {self.gumbel_temperature}")
        if self.entropy_split not in ("train", "dev"):
            raise ConfigError(f"entropy_split must be 'train' or 'dev', got {self.entropy_split!r}")


def config_field_names() -> list[str]:
    return [f.name for f in fields(TrainConfig)]


# ---------------------------------------------------------------------------
# model parameters


@dataclass
class ModelParams:
    text: TextEncoderParams
    gcn: GCNParams
    er: ERAttentionParams
    classifier: Tensor  # (4d,) over concat(text, graph, knowledge)

    @property
    def dim(self) -> int:
        return self.text.bias.data.shape[0]

    def trainable(self) -> list[Tensor]:
        return [
            self.text.token_embedding,
            self.text.projection,
            self.text.bias,
            *self.gcn.layers,
            self.er.entity_proj,
            self.er.relation_proj,
            self.classifier,
        ]

    def graph_trainable(self) -> list[Tensor]:
        return [*self.gcn.layers, self.er.entity_proj, self.er.relation_proj, self.classifier]

    def named(self) -> dict[str, Tensor]:
        out = {
            "text.token_embedding": self.text.token_embedding,
            "text.projection": self.text.projection,
            "text.bias": self.text.bias,
            "gcn.node_features": self.gcn.node_features,
            "er.entity_table": self.er.entity_table,
            "er.relation_table": self.er.relation_table,
            "er.entity_proj": self.er.entity_proj,
            "er.relation_proj": self.er.relation_proj,
            "classifier": self.classifier,
        }
        for i, layer in enumerate(self.gcn.layers):
            out[f"gcn.layer{i}"] = layer
        return out

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named().items()}

    def load_state_arrays(self, state: dict[str, np.ndarray]) -> None:
        named = self.named()
        if set(named) != set(state):
            missing = set(named) ^ set(state)
            raise ConfigError(f"checkpoint does not match model, differing tensors: {sorted(missing)}")
        for name, tensor in named.items():
            if tensor.data.shape != state[name].shape:
                raise ConfigError(
                    f"checkpoint tensor {name} has shape {state[name].shape}, expected {tensor.data.shape}"
                )
            tensor.data = state[name].copy()


def model_from_state(state: dict[str, np.ndarray]) -> ModelParams:
    """Rebuild a model straight from checkpoint arrays."""
    layer_names = sorted(
        (n for n in state if n.startswith("gcn.layer")), key=lambda n: int(n.removeprefix("gcn.layer"))
    )
    try:
        params = ModelParams(
            text=TextEncoderParams(
                token_embedding=Tensor(state["text.token_embedding"], requires_grad=True),
                projection=Tensor(state["text.projection"], requires_grad=True),
                bias=Tensor(state["text.bias"], requires_grad=True),
            ),
            gcn=GCNParams(
                layers=[Tensor(state[n], requires_grad=True) for n in layer_names],
                node_features=Tensor(state["gcn.node_features"]),
            ),
            er=ERAttentionParams(
                entity_table=Tensor(state["er.entity_table"]),
                relation_table=Tensor(state["er.relation_table"]),
                entity_proj=Tensor(state["er.entity_proj"], requires_grad=True),
                relation_proj=Tensor(state["er.relation_proj"], requires_grad=True),
            ),
            classifier=Tensor(state["classifier"], requires_grad=True),
        )
    except KeyError as exc:
        raise ConfigError(f"checkpoint is missing tensor {exc}") from exc
    if not params.gcn.layers:
        raise ConfigError("checkpoint has no gcn layers")
    return params


def _stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def init_model(
    vocab_size: int,
    entity_table: EmbeddingTable,
    relation_table: EmbeddingTable,
    node_features: EmbeddingTable,
    config: TrainConfig,
) -> ModelParams:
    rng = _stream(config.seed, 0)
    d = config.text_dim
    text = init_text_params(vocab_size, d, rng)
    dims = [config.node_dim] + [config.gcn_hidden] * (config.gcn_layers - 1) + [d]
    gcn = init_gcn_params(dims, node_features, rng)
    er = init_er_params(entity_table, relation_table, d, rng)
    classifier = Tensor(rng.normal(0.0, 0.1, size=(4 * d,)), requires_grad=True)
    return ModelParams(text=text, gcn=gcn, er=er, classifier=classifier)


# ---------------------------------------------------------------------------
# data preparation


@dataclass
class PreparedChoice:
    token_ids: np.ndarray
    subgraph: Subgraph | None
    premise: str
    hypothesis: str


@dataclass
class PreparedQuestion:
    qid: str
    answer_index: int
    choices: list[PreparedChoice]


def prepare_questions(
    items: list[QAItem],
    corpus: Corpus,
    index: InvertedIndex,
    graph: KnowledgeGraph,
    vocab: Vocab,
    config: TrainConfig,
) -> list[PreparedQuestion]:
    """Retrieve premises, build token sequences and subgraphs once per choice."""
    prepared = []
    for item in items:
        choices = []
        for pair in convert(item, index, corpus, config.retrieve_k):
            token_ids = encode_pair_tokens(vocab, pair.premise, pair.hypothesis)
            mentions = identify_concepts(pair.premise, graph, "premise")
            mentions += identify_concepts(pair.hypothesis, graph, "hypothesis")
            seeds = sorted({m.entity for m in mentions})
            if len(seeds) > config.max_nodes:
                seeds = seeds[: config.max_nodes]
            sub = None
            if seeds:
                sub = connect_concepts(graph, seeds, config.max_path_len, config.max_nodes)
            choices.append(
                PreparedChoice(
                    token_ids=token_ids,
                    subgraph=sub,
                    premise=pair.premise,
                    hypothesis=pair.hypothesis,
                )
            )
        prepared.append(PreparedQuestion(qid=item.id, answer_index=item.answer_index, choices=choices))
    return prepared


def sample_fraction(items: list, fraction: float, seed: int) -> list:
    """Seeded subsample of floor(fraction * n) questions, stratified by gold
    answer index with largest-remainder rounding."""
    if not 0 < fraction <= 1:
        raise ConfigError(f"data_fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return list(items)
    target = math.floor(fraction * len(items))
    groups: dict[int, list[int]] = {}
    for i, q in enumerate(items):
        groups.setdefault(q.answer_index, []).append(i)
    keys = sorted(groups)
    quotas = {k: math.floor(fraction * len(groups[k])) for k in keys}
    remainder = target - sum(quotas.values())
    by_frac = sorted(keys, key=lambda k: (-(fraction * len(groups[k]) % 1.0), k))
    for k in by_frac:
        if remainder <= 0:
            break
        if quotas[k] < len(groups[k]):
            quotas[k] += 1
            remainder -= 1
    rng = np.random.default_rng(np.random.SeedSequence([seed, 77]))
    chosen: list[int] = []
    for k in keys:
        perm = rng.permutation(len(groups[k]))
        chosen.extend(groups[k][i] for i in perm[: quotas[k]])
    chosen.sort()
    return [items[i] for i in chosen]


# ---------------------------------------------------------------------------
# forward scoring


def _zero_vec(n: int) -> Tensor:
    return Tensor(np.zeros(n))


def score_question(
    pq: PreparedQuestion,
    params: ModelParams,
    weights: tuple[float, float],
    config: TrainConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
    details: list | None = None,
) -> Tensor:
    """Logit vector over the question's choices.

    weights scales the graph and knowledge features (in that order) before
    the classifier dot product; (1, 1) is the plain model and (0, 0) reduces
    it to text-only.
    """
    graph_scale, knowledge_scale = weights
    d = params.dim
    parts = []
    for choice in pq.choices:
        text_vec = encode_text(choice.token_ids, params.text)
        choice_detail: dict = {}
        if config.use_gcn and choice.subgraph is not None and choice.subgraph.n_nodes > 0:
            node_outputs = gcn_forward(choice.subgraph, params.gcn)
            scores = ad.matmul(node_outputs, text_vec)
            attn = ad.row_softmax(scores)
            graph_vec = ad.matmul(attn, node_outputs)
            if details is not None:
                choice_detail["node_attention"] = {
                    int(e): float(w) for e, w in zip(choice.subgraph.nodes, attn.data)
                }
        else:
            graph_vec = _zero_vec(d)
        if config.use_er:
            knowledge_vec = er_attention(text_vec, params.er, config.gumbel_temperature, train, rng)
        else:
            knowledge_vec = _zero_vec(2 * d)
        feats = ad.concat(
            [text_vec, ad.scalar_mul(graph_vec, graph_scale), ad.scalar_mul(knowledge_vec, knowledge_scale)]
        )
        logit = ad.matmul(params.classifier, feats)
        parts.append(ad.reshape(logit, (1,)))
        if details is not None:
            details.append(choice_detail)
    return ad.concat(parts)


def question_entropy(logits: np.ndarray) -> float:
    """Shannon entropy (natural log) of softmax(logits)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("question_entropy: logits must be a non-empty 1-D vector")
    shifted = z - np.max(z)
    lse = np.log(np.sum(np.exp(shifted)))
    probs = np.exp(shifted - lse)
    return float(-np.sum(probs * (shifted - lse)))


# ---------------------------------------------------------------------------
# prediction and evaluation


def predict(
    pq: PreparedQuestion, params: ModelParams, config: TrainConfig, details: list | None = None
) -> tuple[int, np.ndarray, float]:
    """(chosen index, final logits, entropy). Ties resolve to the lowest index.

    The active mode runs two eval passes: an unweighted one to measure the
    question's entropy, then a pass with features scaled by that entropy.
    """
    if config.mode == "act-know":
        first = score_question(pq, params, (1.0, 1.0), config, train=False).data
        entropy = question_entropy(first)
        logits = score_question(pq, params, (entropy, entropy), config, train=False, details=details).data
    else:
        w = (0.0, 0.0) if config.mode == "text-only" else (1.0, 1.0)
        logits = score_question(pq, params, w, config, train=False, details=details).data
        entropy = question_entropy(logits)
    return int(np.argmax(logits)), logits, entropy


def evaluate(
    questions: list[PreparedQuestion],
    params: ModelParams,
    config: TrainConfig,
    with_details: bool = False,
) -> tuple[float, list[dict]]:
    """Accuracy plus one record per question."""
    if not questions:
        raise ConfigError("evaluate: empty question list")
    rows = []
    correct = 0
    for pq in questions:
        details: list | None = [] if with_details else None
        pred, logits, entropy = predict(pq, params, config, details=details)
        hit = pred == pq.answer_index
        correct += hit
        row = {
            "id": pq.qid,
            "predicted": pred,
            "gold": pq.answer_index,
            "correct": bool(hit),
            "entropy": entropy,
            "logits": [float(v) for v in logits],
        }
        if with_details:
            row["attention"] = details
        rows.append(row)
    return correct / len(questions), rows


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    params: ModelParams
    best_state: dict[str, np.ndarray]
    best_epoch: int
    best_accuracy: float
    stats: list[dict] = field(default_factory=list)
    entropy_history: list[dict[str, float]] = field(default_factory=list)


def _batch_loss(
    batch: list[PreparedQuestion],
    params: ModelParams,
    weights_by_qid: dict[str, tuple[float, float]],
    config: TrainConfig,
    rng: np.random.Generator,
) -> Tensor:
    losses = []
    for pq in batch:
        logits = score_question(pq, params, weights_by_qid[pq.qid], config, train=True, rng=rng)
        losses.append(ad.reshape(ad.cross_entropy(logits, pq.answer_index), (1,)))
    return ad.mean(ad.concat(losses))


def _eval_loss(
    questions: list[PreparedQuestion], params: ModelParams, config: TrainConfig
) -> float:
    """Mean cross-entropy of the predict-path logits, eval mode."""
    total = 0.0
    for pq in questions:
        _, logits, _ = predict(pq, params, config)
        z = logits - np.max(logits)
        lse = np.log(np.sum(np.exp(z)))
        total += lse - z[pq.answer_index]
    return float(total / len(questions))


def _measure_entropies(
    questions: list[PreparedQuestion], params: ModelParams, config: TrainConfig
) -> dict[str, float]:
    """Eval-mode unweighted forward per question; no gradients, no RNG use."""
    out = {}
    for pq in questions:
        logits = score_question(pq, params, (1.0, 1.0), config, train=False).data
        out[pq.qid] = question_entropy(logits)
    return out


def _train_loop(
    model: ModelParams,
    train_qs: list[PreparedQuestion],
    dev_qs: list[PreparedQuestion] | None,
    config: TrainConfig,
    active: bool,
    entropy_override: float | None = None,
) -> TrainResult:
    config.validate()
    if not train_qs:
        raise ConfigError("no training questions")

    shuffle_rng = _stream(config.seed, 1)
    gumbel_rng = _stream(config.seed, 2)

    opt = Adam(
        model.trainable(),
        lr=config.learning_rate,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        eps=config.adam_eps,
        weight_decay=config.weight_decay,
        warmup_steps=config.warmup_steps,
    )

    graph_active = config.mode != "text-only" and (config.use_gcn or config.use_er)
    if config.pretrain_epochs > 0 and graph_active:
        # graph-side warm start: text encoder frozen at its random init
        pre_opt = Adam(
            model.graph_trainable(),
            lr=config.learning_rate,
            beta1=config.adam_beta1,
            beta2=config.adam_beta2,
            eps=config.adam_eps,
            weight_decay=config.weight_decay,
        )
        ones = {pq.qid: (1.0, 1.0) for pq in train_qs}
        for _ in range(config.pretrain_epochs):
            _run_updates(train_qs, model, ones, config, pre_opt, shuffle_rng, gumbel_rng)

    result = TrainResult(params=model, best_state=model.state_arrays(), best_epoch=0, best_accuracy=-1.0)

    for master in range(1, config.master_epochs + 1):
        if active:
            if entropy_override is not None:
                weights = {pq.qid: (entropy_override, entropy_override) for pq in train_qs}
                measured = {pq.qid: entropy_override for pq in train_qs}
            elif config.entropy_split == "dev":
                if not dev_qs:
                    raise ConfigError("entropy_split=dev requires a dev set")
                dev_ent = _measure_entropies(dev_qs, model, config)
                shared = float(np.mean(list(dev_ent.values())))
                weights = {pq.qid: (shared, shared) for pq in train_qs}
                measured = {pq.qid: shared for pq in train_qs}
            else:
                measured = _measure_entropies(train_qs, model, config)
                weights = {qid: (e, e) for qid, e in measured.items()}
            result.entropy_history.append(measured)
        elif config.mode == "text-only":
            weights = {pq.qid: (0.0, 0.0) for pq in train_qs}
        else:
            weights = {pq.qid: (1.0, 1.0) for pq in train_qs}

        epoch_losses = []
        for _ in range(config.sub_epochs):
            sub_loss = _run_updates(train_qs, model, weights, config, opt, shuffle_rng, gumbel_rng)
            epoch_losses.append(sub_loss)

        train_acc, train_rows = evaluate(train_qs, model, config)
        mean_train_entropy = float(np.mean([r["entropy"] for r in train_rows]))
        result.stats.append(
            {
                "epoch": master,
                "split": "train",
                "accuracy": train_acc,
                "mean_entropy": mean_train_entropy,
                "loss": float(np.mean(epoch_losses)),
            }
        )
        select_acc = train_acc
        if dev_qs:
            dev_acc, dev_rows = evaluate(dev_qs, model, config)
            result.stats.append(
                {
                    "epoch": master,
                    "split": "dev",
                    "accuracy": dev_acc,
                    "mean_entropy": float(np.mean([r["entropy"] for r in dev_rows])),
                    "loss": _eval_loss(dev_qs, model, config),
                }
            )
            select_acc = dev_acc
        if select_acc > result.best_accuracy:
            result.best_accuracy = select_acc
            result.best_epoch = master
            result.best_state = model.state_arrays()

    return result


def _run_updates(
    train_qs: list[PreparedQuestion],
    model: ModelParams,
    weights: dict[str, tuple[float, float]],
    config: TrainConfig,
    opt: Adam,
    shuffle_rng: np.random.Generator,
    gumbel_rng: np.random.Generator,
) -> float:
    """One pass over the training questions in shuffled batches; returns the
    mean batch loss."""
    order = shuffle_rng.permutation(len(train_qs))
    losses = []
    for start in range(0, len(order), config.batch_size):
        batch = [train_qs[i] for i in order[start : start + config.batch_size]]
        loss = _batch_loss(batch, model, weights, config, gumbel_rng)
        value = loss.item()
        if not np.isfinite(value):
            raise FloatingPointError("training loss is not finite")
        opt.zero_grad()
        ad.backward(loss)
        opt.step()
        losses.append(value)
    return float(np.mean(losses))


def train_base_know(
    model: ModelParams,
    train_qs: list[PreparedQuestion],
    dev_qs: list[PreparedQuestion] | None,
    config: TrainConfig,
) -> TrainResult:
    """Fixed-weight training: every question contributes unscaled features."""
    if config.mode == "act-know":
        raise ConfigError("train_base_know cannot run with mode=act-know")
    return _train_loop(model, train_qs, dev_qs, config, active=False)


def train_act_know(
    model: ModelParams,
    train_qs: list[PreparedQuestion],
    dev_qs: list[PreparedQuestion] | None,
    config: TrainConfig,
    entropy_override: float | None = None,
) -> TrainResult:
    """Entropy-weighted training. entropy_override pins every question's
    weight to a constant, which reduces the loop to the fixed-weight one."""
    if config.mode != "act-know":
        raise ConfigError("train_act_know requires mode=act-know")
    return _train_loop(model, train_qs, dev_qs, config, active=True, entropy_override=entropy_override)


def write_stats_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATS_HEADER)
        for row in rows:
            writer.writerow([row["epoch"], row["split"], repr(float(row["accuracy"])),
                             repr(float(row["mean_entropy"])), repr(float(row["loss"]))])
