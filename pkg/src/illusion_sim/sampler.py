"""Gibbs (heat-bath / p-bit) samplers over an IsingModel.

Two sweep kernels are provided. The sequential kernel updates spins
``0..n-1`` in order. The chromatic kernel groups spins by a proper graph
colouring (a checkerboard on 2D lattices) and updates one colour class at a
time; spins in a class share no coupling, so a class may be split across any
number of workers. Randomness comes from per-spin counted streams
(:mod:`illusion_sim.rng`), which makes both kernels bit-reproducible and
independent of worker count.
"""
from __future__ import annotations

import enum
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from ._parallel import worker_count
from .errors import ContractViolation
from .model import EXACT_MAX_SPINS, IsingModel, as_spins
from .rng import CounterRng, random_state


class Kernel(str, enum.Enum):
    SEQUENTIAL = "sequential"
    CHROMATIC = "chromatic"


# -- single updates ---------------------------------------------------------------

def _field(model: IsingModel, state, i: int) -> float:
    if not (0 <= i < model.n):
        raise ContractViolation(f"spin index {i} out of range [0, {model.n})")
    lo, hi = model.indptr[i], model.indptr[i + 1]
    return float(model.biases[i] + np.dot(model.data[lo:hi], state[model.indices[lo:hi]]))


def _check_update_args(beta, u):
    if not (beta > 0 and math.isfinite(beta)):
        raise ContractViolation(f"beta must be positive and finite, got {beta}")
    if not (0.0 <= u < 1.0):
        raise ContractViolation(f"uniform draw must lie in [0, 1), got {u}")


def gibbs_update(model: IsingModel, state, i: int, beta: float, u: float) -> int:
    """New value of spin ``i``: +1 iff ``u < 1 / (1 + exp(-2 beta I_i))``."""
    _check_update_args(beta, u)
    s = as_spins(state, model.n)
    return int(_kernels.heat_bath(_field(model, s, i), float(beta), float(u)))


def pbit_update(model: IsingModel, state, i: int, beta: float, u: float) -> int:
    """The same rule in p-bit form: ``sign(tanh(beta I_i) - (2u - 1))``."""
    _check_update_args(beta, u)
    s = as_spins(state, model.n)
    return 1 if math.tanh(beta * _field(model, s, i)) > 2.0 * u - 1.0 else -1


# -- colouring --------------------------------------------------------------------

@dataclass(frozen=True)
class Coloring:
    colors: np.ndarray
    num_colors: int

    def classes(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.colors == c) for c in range(self.num_colors)]

    def order(self) -> tuple[np.ndarray, np.ndarray]:
        """Spins grouped by ascending colour (ascending index inside a colour)
        and the ``phase_ptr`` offsets delimiting each colour class."""
        order = np.argsort(self.colors, kind="stable").astype(np.int64)
        counts = np.bincount(self.colors, minlength=self.num_colors)
        ptr = np.zeros(self.num_colors + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return order, ptr

    def is_proper(self, model: IsingModel) -> bool:
        if self.colors.shape != (model.n,):
            return False
        e = model.edges
        return not np.any(self.colors[e[:, 0]] == self.colors[e[:, 1]])


def greedy_coloring(model: IsingModel) -> Coloring:
    """Largest-degree-first greedy colouring (ties to the lowest index)."""
    deg = model.degrees
    visit = sorted(range(model.n), key=lambda i: (-deg[i], i))
    colors = np.full(model.n, -1, dtype=np.int64)
    for i in visit:
        lo, hi = model.indptr[i], model.indptr[i + 1]
        taken = {int(c) for c in colors[model.indices[lo:hi]] if c >= 0}
        c = 0
        while c in taken:
            c += 1
        colors[i] = c
    colors.flags.writeable = False
    return Coloring(colors=colors, num_colors=int(colors.max()) + 1 if model.n else 0)


# -- sweeps -----------------------------------------------------------------------

def _check_rng(rng: CounterRng, model: IsingModel):
    if rng.n != model.n:
        raise ContractViolation(f"rng covers {rng.n} streams, model has {model.n} spins")


def sequential_sweep(model: IsingModel, state: np.ndarray, beta: float, rng: CounterRng) -> np.ndarray:
    """One in-place sweep over spins ``0..n-1``; consumes ``n`` draws."""
    s = as_spins(state, model.n)
    if s is not state:
        raise ContractViolation("state must be an int8 array to be updated in place")
    _check_rng(rng, model)
    order = np.arange(model.n, dtype=np.int64)
    _kernels.update_range(order, 0, model.n, model.indptr, model.indices, model.data,
                          model.biases, s, float(beta), np.uint64(rng.seed), rng.counters)
    return s


def chromatic_sweep(
    model: IsingModel,
    state: np.ndarray,
    beta: float,
    coloring: Coloring,
    rng: CounterRng,
    workers: int | None = None,
) -> np.ndarray:
    """One in-place colour-parallel sweep.

    Each colour phase may be split over ``workers`` threads (default from
    ``ILLUSION_SIM_THREADS``); the result is bit-identical for any value.
    """
    s = as_spins(state, model.n)
    if s is not state:
        raise ContractViolation("state must be an int8 array to be updated in place")
    _check_rng(rng, model)
    if not coloring.is_proper(model):
        raise ContractViolation("coloring is not proper for this model")
    workers = worker_count() if workers is None else max(1, int(workers))
    order, ptr = coloring.order()
    args = (model.indptr, model.indices, model.data, model.biases, s, float(beta),
            np.uint64(rng.seed), rng.counters)
    if workers == 1:
        _kernels.update_range(order, 0, model.n, *args)
        return s
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for c in range(coloring.num_colors):
            bounds = np.linspace(ptr[c], ptr[c + 1], workers + 1).astype(np.int64)
            jobs = [pool.submit(_kernels.update_range, order, bounds[w], bounds[w + 1], *args)
                    for w in range(workers) if bounds[w + 1] > bounds[w]]
            for job in jobs:
                job.result()
    return s


# -- configured runs --------------------------------------------------------------

@dataclass(frozen=True)
class BetaSchedule:
    """Inverse temperature per sweep: constant, or a linear/geometric anneal."""

    kind: str = "constant"
    start: float = 1.0
    end: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "geometric"):
            raise ContractViolation(f"unknown beta schedule {self.kind!r}")

    @classmethod
    def constant(cls, beta: float) -> "BetaSchedule":
        return cls("constant", beta, beta)

    @classmethod
    def linear(cls, start: float, end: float) -> "BetaSchedule":
        return cls("linear", start, end)

    @classmethod
    def geometric(cls, start: float, end: float) -> "BetaSchedule":
        return cls("geometric", start, end)

    def values(self, sweeps: int) -> np.ndarray:
        end = self.start if self.end is None else self.end
        if self.kind == "constant":
            betas = np.full(sweeps, float(self.start))
        elif self.kind == "linear":
            betas = np.linspace(self.start, end, sweeps)
        else:
            if self.start <= 0 or end <= 0:
                raise ContractViolation("geometric schedule needs positive endpoints")
            betas = np.geomspace(self.start, end, sweeps)
        if not np.all(np.isfinite(betas) & (betas > 0)):
            raise ContractViolation("beta values must be positive and finite")
        return betas


@dataclass(frozen=True)
class SamplerConfig:
    kernel: Kernel = Kernel.SEQUENTIAL
    schedule: BetaSchedule = field(default_factory=lambda: BetaSchedule.constant(1.0))
    sweeps: int = 1000
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    initial_state: tuple | None = None
    record_states: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if self.sweeps < 1:
            raise ContractViolation("sweeps must be >= 1")
        if not (0 <= self.burn_in < self.sweeps):
            raise ContractViolation("burn-in must satisfy 0 <= burn_in < sweeps")
        if self.thinning < 1:
            raise ContractViolation("thinning must be >= 1")
        self.schedule.values(1)

    @classmethod
    def fixed(cls, beta: float, **kwargs) -> "SamplerConfig":
        return cls(schedule=BetaSchedule.constant(beta), **kwargs)

    @property
    def num_recorded(self) -> int:
        return (self.sweeps - self.burn_in + self.thinning - 1) // self.thinning


@dataclass
class SampleTrace:
    """Output of a sampling run.

    ``histogram`` counts recorded post-burn-in states by index (``n <= 24``);
    ``states`` holds the recorded configurations row by row when the config
    asked for them. ``energies`` has one entry per sweep, burn-in included.
    """

    n: int
    energies: np.ndarray
    final_state: np.ndarray
    histogram: np.ndarray | None
    states: np.ndarray | None
    rng_draws: int
    attempts: int
    accepted_flips: int
    num_recorded: int
    burn_in: int = 0
    thinning: int = 1

    def empirical(self) -> np.ndarray:
        if self.histogram is None:
            raise ContractViolation(f"no histogram recorded for n={self.n} > {EXACT_MAX_SPINS}")
        return self.histogram / self.histogram.sum()

    @property
    def best_energy(self) -> float:
        return float(self.energies.min())

    def to_bytes(self) -> bytes:
        parts = [
            np.array([self.n, self.rng_draws, self.attempts, self.accepted_flips,
                      self.num_recorded, self.burn_in, self.thinning], dtype=np.int64).tobytes(),
            self.energies.tobytes(),
            self.final_state.tobytes(),
        ]
        if self.histogram is not None:
            parts.append(self.histogram.tobytes())
        if self.states is not None:
            parts.append(self.states.tobytes())
        return b"".join(parts)

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def initial_state(model: IsingModel, config: SamplerConfig) -> np.ndarray:
    if config.initial_state is not None:
        return as_spins(np.array(config.initial_state), model.n).copy()
    return random_state(model.n, config.seed)


def _buffers(model: IsingModel, config: SamplerConfig):
    sweeps = config.sweeps
    use_hist = model.n <= EXACT_MAX_SPINS
    hist = np.zeros(1 << model.n if use_hist else 0, dtype=np.int64)
    m = config.num_recorded
    states = np.zeros((m, model.n) if config.record_states else (0, model.n), dtype=np.int8)
    energies = np.empty(sweeps)
    return hist, use_hist, states, energies


def _make_trace(model, config, state, hist, use_hist, states, energies, counters, flips):
    attempts = config.sweeps * model.n
    draws = int(counters.sum())
    if draws != attempts:
        raise AssertionError("rng accounting mismatch")
    return SampleTrace(
        n=model.n,
        energies=energies,
        final_state=state,
        histogram=hist if use_hist else None,
        states=states if config.record_states else None,
        rng_draws=draws,
        attempts=attempts,
        accepted_flips=int(flips),
        num_recorded=config.num_recorded,
        burn_in=config.burn_in,
        thinning=config.thinning,
    )


def run(model: IsingModel, config: SamplerConfig, coloring: Coloring | None = None) -> SampleTrace:
    """Run one chain; deterministic given ``(model, config)``."""
    betas = config.schedule.values(config.sweeps)
    state = initial_state(model, config)
    if config.kernel is Kernel.SEQUENTIAL:
        order = np.arange(model.n, dtype=np.int64)
    else:
        coloring = greedy_coloring(model) if coloring is None else coloring
        if not coloring.is_proper(model):
            raise ContractViolation("coloring is not proper for this model")
        order, _ = coloring.order()
    counters = np.zeros(model.n, dtype=np.uint64)
    hist, use_hist, states, energies = _buffers(model, config)
    flips = _kernels.run_chain(
        model.indptr, model.indices, model.data, model.biases, order, betas,
        np.uint64(config.seed % (1 << 64)), state, counters, config.burn_in, config.thinning,
        hist, use_hist, states, config.record_states, energies,
    )
    return _make_trace(model, config, state, hist, use_hist, states, energies, counters, flips)


def run_restarts(model: IsingModel, config: SamplerConfig, restarts: int,
                 workers: int | None = None) -> list[SampleTrace]:
    """Independent chains with seeds ``config.seed + r``, run on a thread pool."""
    configs = [replace(config, seed=config.seed + r) for r in range(restarts)]
    workers = worker_count() if workers is None else max(1, int(workers))
    if workers == 1:
        return [run(model, c) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: run(model, c), configs))
