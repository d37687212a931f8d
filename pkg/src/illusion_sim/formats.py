"""Problem file formats and the QUBO/max-cut to Ising mappings.

native::

    ising <n>
    h <i> <value>
    J <i> <j> <value>

Gset (max-cut, 1-indexed)::

    <n> <m>
    <i> <j> <w>        (m lines)

QUBO (upper triangular, 0-indexed)::

    qubo <n>
    Q <i> <j> <value>  (i <= j)

Blank lines and ``#`` comments are ignored everywhere. Every loader returns
a :class:`Problem`, which carries the affine map from Ising energy back to the
source objective (QUBO value, or cut weight for Gset).
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ContractViolation, ParseError
from .model import IsingModel

FORMATS = ("native", "gset", "qubo")


@dataclass(frozen=True)
class Problem:
    """An Ising model plus ``objective = offset + scale * energy``."""

    model: IsingModel
    offset: float = 0.0
    scale: float = 1.0
    kind: str = "ising"

    def objective(self, energy: float) -> float:
        return self.offset + self.scale * energy


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _int(tok, lineno, path, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {tok!r}", lineno, path) from None


def _float(tok, lineno, path):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", lineno, path) from None
    if not np.isfinite(v):
        raise ParseError(f"non-finite value {tok!r}", lineno, path)
    return v


def _header(it, keyword, path):
    try:
        lineno, toks = next(it)
    except StopIteration:
        raise ParseError("empty file", None, path) from None
    if keyword is not None:
        if len(toks) != 2 or toks[0] != keyword:
            raise ParseError(f"expected header '{keyword} <n>'", lineno, path)
        n = _int(toks[1], lineno, path, "spin count")
        if n < 1:
            raise ParseError("spin count must be positive", lineno, path)
        return lineno, n
    return lineno, toks


def _index(tok, n, lineno, path, base=0):
    i = _int(tok, lineno, path, "index") - base
    if not 0 <= i < n:
        raise ParseError(f"index {tok} out of range", lineno, path)
    return i


def parse_native(text: str, path=None) -> Problem:
    it = _lines(text)
    _, n = _header(it, "ising", path)
    h = np.zeros(n)
    seen_h = set()
    couplings = {}
    for lineno, toks in it:
        tag = toks[0]
        if tag == "h" and len(toks) == 3:
            i = _index(toks[1], n, lineno, path)
            if i in seen_h:
                raise ParseError(f"duplicate bias for spin {i}", lineno, path)
            seen_h.add(i)
            h[i] = _float(toks[2], lineno, path)
        elif tag == "J" and len(toks) == 4:
            i = _index(toks[1], n, lineno, path)
            j = _index(toks[2], n, lineno, path)
            if i == j:
                raise ParseError(f"self-coupling on spin {i}", lineno, path)
            key = (min(i, j), max(i, j))
            if key in couplings:
                raise ParseError(f"duplicate coupling {key}", lineno, path)
            couplings[key] = _float(toks[3], lineno, path)
        else:
            raise ParseError(f"malformed line: {' '.join(toks)!r}", lineno, path)
    return Problem(IsingModel(n, couplings, h))


def parse_gset(text: str, path=None) -> Problem:
    """Max-cut instance as an antiferromagnet ``J_ij = -w_ij``.

    ``cut(s) = W/2 - E(s)/2`` where ``W`` is the total edge weight.
    """
    it = _lines(text)
    lineno, toks = _header(it, None, path)
    if len(toks) != 2:
        raise ParseError("expected header '<n> <m>'", lineno, path)
    n = _int(toks[0], lineno, path, "node count")
    m = _int(toks[1], lineno, path, "edge count")
    if n < 1 or m < 0:
        raise ParseError("invalid header counts", lineno, path)
    couplings = {}
    for lineno, toks in it:
        if len(toks) != 3:
            raise ParseError(f"malformed edge line: {' '.join(toks)!r}", lineno, path)
        i = _index(toks[0], n, lineno, path, base=1)
        j = _index(toks[1], n, lineno, path, base=1)
        if i == j:
            raise ParseError(f"self-loop on node {i + 1}", lineno, path)
        key = (min(i, j), max(i, j))
        if key in couplings:
            raise ParseError(f"duplicate edge {key[0] + 1} {key[1] + 1}", lineno, path)
        couplings[key] = -_float(toks[2], lineno, path)
    if len(couplings) != m:
        raise ParseError(f"header promises {m} edges, found {len(couplings)}", None, path)
    total = -sum(couplings.values())
    return Problem(IsingModel(n, couplings), offset=total / 2, scale=-0.5, kind="maxcut")


def parse_qubo(text: str, path=None) -> Problem:
    it = _lines(text)
    _, n = _header(it, "qubo", path)
    q = {}
    for lineno, toks in it:
        if toks[0] != "Q" or len(toks) != 4:
            raise ParseError(f"malformed line: {' '.join(toks)!r}", lineno, path)
        i = _index(toks[1], n, lineno, path)
        j = _index(toks[2], n, lineno, path)
        if i > j:
            raise ParseError(f"entry ({i}, {j}) below the diagonal", lineno, path)
        if (i, j) in q:
            raise ParseError(f"duplicate entry ({i}, {j})", lineno, path)
        q[(i, j)] = _float(toks[3], lineno, path)
    model, offset = qubo_to_ising(q, n)
    return Problem(model, offset=offset, scale=1.0, kind="qubo")


_PARSERS = {"native": parse_native, "gset": parse_gset, "qubo": parse_qubo}


def load_problem(path, fmt: str = "native") -> Problem:
    if fmt not in _PARSERS:
        raise ContractViolation(f"unknown format {fmt!r}; choose from {FORMATS}")
    text = Path(path).read_text(encoding="utf-8")
    return _PARSERS[fmt](text, path=str(path))


def load_model(path, fmt: str = "native") -> IsingModel:
    return load_problem(path, fmt).model


def qubo_to_ising(q, n: int | None = None) -> tuple[IsingModel, float]:
    """Map ``f(x) = sum_{i<=j} Q_ij x_i x_j`` to Ising form with ``x = (1+s)/2``.

    Returns ``(model, offset)`` with ``f(x) = energy(model, s) + offset``:
    ``J_ij = -Q_ij/4``, ``h_i = -(Q_ii/2 + sum_{j != i} Q_ij/4)``,
    ``offset = sum_i Q_ii/2 + sum_{i<j} Q_ij/4``.
    """
    if isinstance(q, Mapping):
        if n is None:
            n = 1 + max(max(i, j) for i, j in q) if q else 0
        entries = {(int(i), int(j)): float(v) for (i, j), v in q.items()}
    else:
        mat = np.asarray(q, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ContractViolation("Q must be a square matrix")
        if np.any(np.tril(mat, -1) != 0):
            raise ContractViolation("Q must be upper triangular")
        n = mat.shape[0] if n is None else n
        iu, ju = np.nonzero(np.triu(mat))
        entries = {(int(i), int(j)): float(mat[i, j]) for i, j in zip(iu, ju)}
    if not all(np.isfinite(v) for v in entries.values()):
        raise ContractViolation("Q entries must be finite")

    h = np.zeros(n)
    couplings = {}
    offset = 0.0
    for (i, j), v in entries.items():
        if i > j:
            raise ContractViolation(f"entry ({i}, {j}) below the diagonal")
        if v == 0.0:
            continue
        if i == j:
            h[i] -= v / 2
            offset += v / 2
        else:
            couplings[(i, j)] = -v / 4
            h[i] -= v / 4
            h[j] -= v / 4
            offset += v / 4
    return IsingModel(n, couplings, h), offset


def format_native(model: IsingModel, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"ising {model.n}")
    for i, v in enumerate(model.biases):
        if v != 0.0:
            lines.append(f"h {i} {float(v)!r}")
    for (i, j), w in zip(model.edges, model.weights):
        lines.append(f"J {int(i)} {int(j)} {float(w)!r}")
    return "\n".join(lines) + "\n"


def atomic_write(path, data: str | bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model: IsingModel, path, comment: str | None = None) -> None:
    atomic_write(path, format_native(model, comment))
