"""Ising problem representation, energies and exact small-instance oracles.

Energy convention (fixed everywhere in the package)::

    E(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i

so a positive coupling favours alignment. Spin configurations are numpy
``int8`` vectors with entries in {-1, +1}. A configuration maps to an integer
index with bit ``i`` set iff ``s_i == +1``; histograms and exact
distributions are indexed the same way.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import CapacityError, ContractViolation

EXACT_MAX_SPINS = 24
_CHUNK_BITS = 18


class IsingModel:
    """Sparse pairwise Ising model with ``n`` spins.

    Couplings are stored once per unordered pair with ``i < j``; a symmetric
    CSR adjacency is derived for O(degree) local-field queries.

    Parameters
    ----------
    n:
        Number of spins.
    couplings:
        Mapping ``(i, j) -> J_ij`` or iterable of ``(i, j, J_ij)`` triples.
        Each unordered pair may appear at most once.
    biases:
        Length-``n`` vector of fields ``h_i``; zeros if omitted.
    """

    def __init__(self, n: int, couplings=None, biases=None):
        if int(n) != n or n < 1:
            raise ContractViolation(f"spin count must be a positive integer, got {n!r}")
        n = int(n)
        if couplings is None:
            items: Iterable = ()
        elif isinstance(couplings, Mapping):
            items = ((i, j, w) for (i, j), w in couplings.items())
        else:
            items = couplings

        pairs: dict[tuple[int, int], float] = {}
        for i, j, w in items:
            i, j = int(i), int(j)
            if i == j:
                raise ContractViolation(f"self-coupling on spin {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ContractViolation(f"coupling ({i}, {j}) out of range for n={n}")
            key = (i, j) if i < j else (j, i)
            if key in pairs:
                raise ContractViolation(f"duplicate coupling {key}")
            w = float(w)
            if not np.isfinite(w):
                raise ContractViolation(f"non-finite coupling {key}: {w}")
            pairs[key] = w

        if biases is None:
            h = np.zeros(n)
        else:
            h = np.array(biases, dtype=np.float64).reshape(-1)
            if h.shape != (n,):
                raise ContractViolation(f"bias vector has length {h.size}, expected {n}")
            if not np.all(np.isfinite(h)):
                raise ContractViolation("non-finite bias")

        keys = sorted(pairs)
        edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
        weights = np.array([pairs[k] for k in keys], dtype=np.float64)

        self.n = n
        self.edges = edges
        self.weights = weights
        self.biases = h
        self._build_adjacency()
        for arr in (self.edges, self.weights, self.biases, self.indptr, self.indices, self.data):
            arr.flags.writeable = False

    def _build_adjacency(self):
        n = self.n
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        vals = np.concatenate([self.weights, self.weights])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=self.indptr[1:])
        self.indices = cols.astype(np.int64)
        self.data = vals.astype(np.float64)

    @property
    def num_couplings(self) -> int:
        return len(self.weights)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(neighbor ids, coupling weights)`` of spin ``i``."""
        _check_index(self, i)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def coupling(self, i: int, j: int) -> float:
        """``J_ij`` for either argument order; 0.0 when the pair is uncoupled."""
        _check_index(self, i)
        _check_index(self, j)
        nbrs, w = self.neighbors(i)
        pos = np.searchsorted(nbrs, j)
        if pos < len(nbrs) and nbrs[pos] == j:
            return float(w[pos])
        return 0.0

    def coupling_dict(self) -> dict[tuple[int, int], float]:
        return {(int(i), int(j)): float(w) for (i, j), w in zip(self.edges, self.weights)}

    def to_dense(self) -> np.ndarray:
        mat = np.zeros((self.n, self.n))
        mat[self.edges[:, 0], self.edges[:, 1]] = self.weights
        mat[self.edges[:, 1], self.edges[:, 0]] = self.weights
        return mat

    def __eq__(self, other):
        if not isinstance(other, IsingModel):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.biases, other.biases)
        )

    __hash__ = None

    def __repr__(self):
        return f"IsingModel(n={self.n}, couplings={self.num_couplings})"


@dataclass(frozen=True)
class ExactDistribution:
    """Boltzmann probabilities over all ``2**n`` configurations."""

    beta: float
    probabilities: np.ndarray

    @property
    def n(self) -> int:
        return int(self.probabilities.size).bit_length() - 1


def _check_index(model: IsingModel, i) -> None:
    if not (0 <= int(i) < model.n) or int(i) != i:
        raise ContractViolation(f"spin index {i} out of range [0, {model.n})")


def as_spins(state, n: int | None = None) -> np.ndarray:
    """Validate a spin configuration and return it as an ``int8`` array."""
    s = np.asarray(state)
    if s.ndim != 1:
        raise ContractViolation("spin state must be one-dimensional")
    if n is not None and s.size != n:
        raise ContractViolation(f"state has length {s.size}, model has {n} spins")
    if not np.all((s == 1) | (s == -1)):
        raise ContractViolation("spin values must be exactly -1 or +1")
    return s.astype(np.int8, copy=False)


def state_to_index(state) -> int:
    s = as_spins(state)
    return int(sum(1 << i for i in np.flatnonzero(s > 0)))


def index_to_state(index: int, n: int) -> np.ndarray:
    bits = (int(index) >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def energy(model: IsingModel, state) -> float:
    s = as_spins(state, model.n).astype(np.float64)
    e = model.edges
    return float(-np.dot(model.weights, s[e[:, 0]] * s[e[:, 1]]) - np.dot(model.biases, s))


def local_field(model: IsingModel, state, i: int) -> float:
    """Field ``I_i = sum_j J_ij s_j + h_i`` acting on spin ``i``.

    Flipping spin ``i`` from +1 to -1 raises the energy by ``2 * I_i``.
    """
    s = as_spins(state, model.n)
    nbrs, w = model.neighbors(i)
    return float(np.dot(w, s[nbrs]) + model.biases[i])


def _check_exact_size(model: IsingModel) -> None:
    if model.n > EXACT_MAX_SPINS:
        raise CapacityError(
            f"exact enumeration is capped at {EXACT_MAX_SPINS} spins, model has {model.n}"
        )


def all_energies(model: IsingModel) -> np.ndarray:
    """Energies of all ``2**n`` configurations, indexed by state bit encoding."""
    _check_exact_size(model)
    n = model.n
    total = 1 << n
    out = np.empty(total)
    chunk = min(total, 1 << _CHUNK_BITS)
    shifts = np.arange(n, dtype=np.int64)[:, None]
    for start in range(0, total, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        spins = (((idx[None, :] >> shifts) & 1) * 2 - 1).astype(np.float64)
        e = -model.biases @ spins
        for (i, j), w in zip(model.edges, model.weights):
            e -= w * spins[i] * spins[j]
        out[start:start + chunk] = e
    return out


def exact_boltzmann(model: IsingModel, beta: float) -> ExactDistribution:
    if not (beta > 0 and np.isfinite(beta)):
        raise ContractViolation(f"beta must be positive and finite, got {beta}")
    energies = all_energies(model)
    logw = -beta * energies
    logw -= logw.max()
    p = np.exp(logw)
    p /= p.sum()
    return ExactDistribution(beta=float(beta), probabilities=p)


def ground_states(model: IsingModel, atol: float = 1e-9) -> tuple[float, list[np.ndarray]]:
    """Exhaustive minimum energy and every configuration reaching it.

    States within ``atol`` (scaled by the energy magnitude) of the minimum
    count as ties.
    """
    energies = all_energies(model)
    emin = float(energies.min())
    tol = atol * max(1.0, abs(emin))
    idx = np.flatnonzero(energies <= emin + tol)
    return emin, [index_to_state(k, model.n) for k in idx]


# -- instance generators -------------------------------------------------------

def random_model(
    n: int,
    density: float = 0.3,
    seed: int = 0,
    coupling_scale: float = 1.0,
    bias_scale: float = 0.0,
    positive: bool = False,
) -> IsingModel:
    """Erdos-Renyi coupling graph with Gaussian weights.

    Each of the ``n(n-1)/2`` pairs is coupled independently with probability
    ``density``; weights are ``N(0, coupling_scale**2)`` (absolute values when
    ``positive``), biases ``N(0, bias_scale**2)``.
    """
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < density
    w = rng.normal(0.0, coupling_scale, size=iu.size)
    if positive:
        w = np.abs(w)
    h = rng.normal(0.0, bias_scale, size=n) if bias_scale > 0 else np.zeros(n)
    return IsingModel(n, zip(iu[mask], ju[mask], w[mask]), h)


def grid_model(rows: int, cols: int, coupling: float = 1.0, periodic: bool = False) -> IsingModel:
    """Ferromagnetic (for ``coupling > 0``) 2D lattice, spin ``r * cols + c``."""
    couplings = {}
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols or (periodic and cols > 2):
                couplings[tuple(sorted((i, r * cols + (c + 1) % cols)))] = coupling
            if r + 1 < rows or (periodic and rows > 2):
                couplings[tuple(sorted((i, ((r + 1) % rows) * cols + c)))] = coupling
    return IsingModel(rows * cols, couplings)


def chain_model(n: int, coupling: float = 1.0, biases=None) -> IsingModel:
    return IsingModel(n, {(i, i + 1): coupling for i in range(n - 1)}, biases)


def calibration_model() -> IsingModel:
    """The fixed n=10 instance used to calibrate and freeze accuracy tolerances:
    sparse Gaussian couplings plus unit-scale Gaussian biases."""
    return random_model(10, 0.3, seed=0, bias_scale=1.0)
