"""Reverse-mode automatic differentiation over dense float64 numpy arrays.

Tensors record the operations that produced them; backward() walks that
record in reverse topological order and accumulates gradients into leaf
tensors created with requires_grad=True. All math is double precision and
single-threaded, so identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

Array = np.ndarray


class Tensor:
    """A float64 array plus the bookkeeping needed for backpropagation."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_pullback", "_backward_done")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Array | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._pullback = None
        self._backward_done = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _result(data: Array, parents: tuple[Tensor, ...], pullback) -> Tensor:
    """Wrap an op result, keeping graph edges only when a parent needs grad."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._pullback = pullback
    return out


def _check_finite(data: Array, op: str) -> Array:
    if not np.all(np.isfinite(data)):
        raise FloatingPointError(f"{op} produced a non-finite value")
    return data


# ---------------------------------------------------------------------------
# primitives


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"add: shape mismatch {a.shape} vs {b.shape}")
    return _result(a.data + b.data, (a, b), lambda g: (g, g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"mul: shape mismatch {a.shape} vs {b.shape}")
    return _result(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def scalar_mul(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _result(a.data * c, (a,), lambda g: (g * c,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """numpy matmul semantics for the 1-D/2-D operand combinations."""
    if a.data.ndim == 0 or b.data.ndim == 0:
        raise ValueError("matmul: operands must be at least 1-D")
    try:
        data = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ValueError(f"matmul: incompatible shapes {a.shape} @ {b.shape}") from exc

    an, bn = a.data.ndim, b.data.ndim

    def pullback(g: Array):
        if an == 2 and bn == 2:
            return g @ b.data.T, a.data.T @ g
        if an == 2 and bn == 1:
            return np.outer(g, b.data), a.data.T @ g
        if an == 1 and bn == 2:
            return b.data @ g, np.outer(a.data, g)
        # 1-D @ 1-D -> scalar
        return g * b.data, g * a.data

    return _result(data, (a, b), pullback)


def concat(parts: list[Tensor]) -> Tensor:
    """Concatenate 1-D tensors along axis 0."""
    if not parts:
        raise ValueError("concat: need at least one tensor")
    for p in parts:
        if p.data.ndim != 1:
            raise ValueError("concat: all inputs must be 1-D")
    data = np.concatenate([p.data for p in parts])
    offsets = np.cumsum([0] + [p.data.shape[0] for p in parts])

    def pullback(g: Array):
        return tuple(g[offsets[i]:offsets[i + 1]] for i in range(len(parts)))

    return _result(data, tuple(parts), pullback)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = a.data.shape
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _result(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise ValueError("log: input must be strictly positive")
    return _result(np.log(a.data), (a,), lambda g: (g / a.data,))


def exp(a: Tensor) -> Tensor:
    data = _check_finite(np.exp(a.data), "exp")
    return _result(data, (a,), lambda g: (g * data,))


def mean(a: Tensor, axis: int | None = None) -> Tensor:
    if a.data.size == 0:
        raise ValueError("mean: empty input")
    if axis is None:
        n = a.data.size
        shape = a.data.shape
        return _result(np.mean(a.data), (a,), lambda g: (np.full(shape, g / n),))
    n = a.data.shape[axis]

    def pullback(g: Array):
        return (np.repeat(np.expand_dims(g / n, axis), n, axis=axis),)

    return _result(np.mean(a.data, axis=axis), (a,), pullback)


def gather(table: Tensor, ids: Array) -> Tensor:
    """Row lookup: out[i] = table[ids[i]]. Pullback scatter-adds."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("gather: ids must be a non-empty 1-D integer array")
    if ids.min() < 0 or ids.max() >= table.data.shape[0]:
        raise IndexError("gather: id out of range")
    shape = table.data.shape

    def pullback(g: Array):
        acc = np.zeros(shape)
        np.add.at(acc, ids, g)
        return (acc,)

    return _result(table.data[ids], (table,), pullback)


def row_softmax(a: Tensor) -> Tensor:
    """Numerically stable softmax over the last axis of a 1-D or 2-D tensor."""
    if a.data.ndim not in (1, 2):
        raise ValueError("row_softmax: input must be 1-D or 2-D")
    if a.data.shape[-1] == 0:
        raise ValueError("row_softmax: empty row")
    shifted = a.data - np.max(a.data, axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=-1, keepdims=True)

    def pullback(g: Array):
        dot = np.sum(g * out, axis=-1, keepdims=True)
        return (out * (g - dot),)

    return _result(out, (a,), pullback)


def cross_entropy(logits: Tensor, target: int) -> Tensor:
    """-log softmax(logits)[target] for a 1-D logit vector."""
    if logits.data.ndim != 1:
        raise ValueError("cross_entropy: logits must be 1-D")
    m = logits.data.shape[0]
    if not 0 <= target < m:
        raise IndexError(f"cross_entropy: target {target} out of range for {m} logits")
    zmax = np.max(logits.data)
    lse = zmax + np.log(np.sum(np.exp(logits.data - zmax)))
    probs = np.exp(logits.data - lse)

    def pullback(g: Array):
        grad = probs.copy()
        grad[target] -= 1.0
        return (grad * g,)

    return _result(np.asarray(lse - logits.data[target]), (logits,), pullback)


# ---------------------------------------------------------------------------
# gumbel softmax


def sample_gumbel(shape: tuple[int, ...], rng: np.random.Generator) -> Array:
    """Standard Gumbel noise: -log(-log(u)), u ~ U(0, 1), guarded away from 0/1."""
    u = rng.uniform(low=1e-12, high=1.0 - 1e-12, size=shape)
    return -np.log(-np.log(u))

def gumbel_softmax_with_noise(logits: Tensor, noise: Array, temperature: float) -> Tensor:
    """Differentiable part of the Gumbel softmax: softmax((logits + noise) / T)."""
    if temperature <= 0:
        raise ConfigError(f"gumbel temperature must be positive, got {temperature}")
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != logits.shape:
        raise ValueError("gumbel noise shape must match logits")
    return row_softmax(scalar_mul(add(logits, Tensor(noise)), 1.0 / temperature))


def gumbel_softmax(logits: Tensor, temperature: float, rng: np.random.Generator) -> Tensor:
    """Soft sample from a categorical defined by logits (reparameterized)."""
    if temperature <= 0:
        raise ConfigError(f"gumbel temperature must be positive, got {temperature}")
    return gumbel_softmax_with_noise(logits, sample_gumbel(logits.shape, rng), temperature)


# ---------------------------------------------------------------------------
# backward

def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into .grad for every requires_grad leaf.

    The loss must be scalar. A second call on the same graph root raises;
    build a fresh forward pass instead.
    """
    if loss.data.ndim != 0:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.shape}")
    if loss._backward_done:
        raise RuntimeError("backward already called on this graph; rebuild the forward pass")
    loss._backward_done = True
    if not loss.requires_grad:
        return

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))

    grads: dict[int, Array] = {id(loss): np.ones(())}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._pullback is None:
            node.grad = g if node.grad is None else node.grad + g
            continue
        parent_grads = node._pullback(g)
        for parent, pg in zip(node._parents, parent_grads):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
