"""Plain-text named-tensor checkpoints.

Format, one tensor after a count header:

    tensors <n>
    <name> <ndim> <dim0> <dim1> ...
    <row-major values separated by single spaces>

Values are written with repr(), which round-trips float64 exactly, so a
save/load cycle is lossless and rewriting unchanged tensors is
byte-identical.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

Array = np.ndarray


def save_checkpoint(path: str, named: dict[str, Array]) -> None:
    lines = [f"tensors {len(named)}"]
    for name in named:
        if " " in name or "\n" in name:
            raise ValueError(f"tensor name may not contain whitespace: {name!r}")
        arr = np.asarray(named[name], dtype=np.float64)
        dims = " ".join(str(d) for d in arr.shape)
        lines.append(f"{name} {arr.ndim} {dims}".rstrip())
        lines.append(" ".join(repr(float(v)) for v in arr.reshape(-1)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path: str) -> dict[str, Array]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("tensors "):
        raise ConfigError(f"{path}: not a checkpoint file (missing header)")
    try:
        count = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"{path}: bad checkpoint header: {lines[0]!r}") from exc

    named: dict[str, Array] = {}
    pos = 1
    for _ in range(count):
        if pos + 1 >= len(lines) + 1:
            raise ConfigError(f"{path}: truncated checkpoint")
        header = lines[pos].split()
        if len(header) < 2:
            raise ConfigError(f"{path}: bad tensor header at line {pos + 1}")
        name = header[0]
        try:
            ndim = int(header[1])
            shape = tuple(int(d) for d in header[2 : 2 + ndim])
        except ValueError as exc:
            raise ConfigError(f"{path}: bad tensor header at line {pos + 1}") from exc
        if len(shape) != ndim:
            raise ConfigError(f"{path}: bad tensor header at line {pos + 1}")
        if pos + 1 >= len(lines):
            raise ConfigError(f"{path}: missing values for tensor {name}")
        raw = lines[pos + 1].split()
        try:
            values = np.array([float(v) for v in raw], dtype=np.float64)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value in tensor {name}") from exc
        expected = int(np.prod(shape)) if shape else 1
        if values.size != expected:
            raise ConfigError(
                f"{path}: tensor {name} expected {expected} values, found {values.size}"
            )
        named[name] = values.reshape(shape)
        pos += 2
    return named
