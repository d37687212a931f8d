"""Multi-chip execution of a partitioned Ising sampler.

A partition is mapped onto capacity-limited virtual chips. Each chip keeps
read-only replicas ("ghosts") of the remote endpoints of its cut couplings
and refreshes them from boundary exchanges. The logical schedule works in
colour phases of the global chromatic order:

* exchanges happen after every phase when ``tau == 1`` and otherwise after
  every ``tau``-th sweep;
* in synchronous mode an exchange is visible at the very next phase
  (barrier); in asynchronous mode it becomes visible ``delay`` sweeps later.

Random draws are keyed by global spin id, so a synchronous run with
``tau == 1`` reproduces the single-chip chromatic reference bit for bit.

Time and energy are simple accounting proxies driven by ``ChipConfig``;
the defaults (1e10 updates/s, 10 W active) are model parameters.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import CapacityError, ContractViolation
from .model import IsingModel
from .partition import PartitionResult, cut_weight
from .rng import CounterRng
from .sampler import (
    Coloring,
    Kernel,
    SampleTrace,
    SamplerConfig,
    _buffers,
    _make_trace,
    greedy_coloring,
    initial_state,
    run,
)


class Mode(str, enum.Enum):
    SYNC = "sync"
    ASYNC = "async"


@dataclass(frozen=True)
class ChipConfig:
    capacity: int = 1 << 20
    update_rate: float = 1e10
    active_power: float = 10.0
    idle_power: float = 0.1
    wakeup_latency: float = 1e-6
    shutdown_latency: float = 1e-6

    def __post_init__(self):
        if self.capacity < 1:
            raise ContractViolation("chip capacity must be >= 1")
        for name in ("update_rate", "active_power", "idle_power", "wakeup_latency", "shutdown_latency"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ContractViolation(f"{name} must be finite and >= 0, got {v}")
        if self.update_rate <= 0:
            raise ContractViolation("update_rate must be positive")


@dataclass(frozen=True)
class InterconnectConfig:
    tau: int = 1
    delay: int = 0
    message_overhead: float = 0.0
    payload_bytes: int = 1

    def __post_init__(self):
        if int(self.tau) != self.tau or self.tau < 1:
            raise ContractViolation("exchange interval tau must be an integer >= 1")
        if int(self.delay) != self.delay or self.delay < 0:
            raise ContractViolation("delivery delay must be an integer >= 0")
        if not (math.isfinite(self.message_overhead) and self.message_overhead >= 0):
            raise ContractViolation("message_overhead must be finite and >= 0")
        if self.payload_bytes < 0:
            raise ContractViolation("payload_bytes must be >= 0")


@dataclass
class GhostTable:
    """Replicas of remote spins: ids (ascending), owning chip, value, and the
    sweep at which each replica was last refreshed (-1 = initial state)."""

    spin_ids: np.ndarray
    owners: np.ndarray
    values: np.ndarray
    last_refresh: np.ndarray

    def refresh(self, ids: np.ndarray, values: np.ndarray, sweep: int) -> None:
        pos = np.searchsorted(self.spin_ids, ids)
        self.values[pos] = values
        self.last_refresh[pos] = sweep


@dataclass
class Chip:
    chip_id: int
    spins: np.ndarray
    local_couplings: np.ndarray
    cut_couplings: np.ndarray
    ghosts: GhostTable


@dataclass
class IllusionSystem:
    model: IsingModel
    partition: PartitionResult
    chips: list[Chip]
    mode: Mode
    chip_config: ChipConfig
    interconnect: InterconnectConfig
    coloring: Coloring
    links: dict[tuple[int, int], np.ndarray]

    @property
    def k(self) -> int:
        return len(self.chips)

    @property
    def directed_pairs(self) -> int:
        return len(self.links)

    def phase_loads(self) -> np.ndarray:
        """Spins of each chip (rows) in each colour phase (columns)."""
        loads = np.zeros((self.k, self.coloring.num_colors), dtype=np.int64)
        np.add.at(loads, (self.partition.assignment, self.coloring.colors), 1)
        return loads

    def reset_ghosts(self, state: np.ndarray) -> None:
        for chip in self.chips:
            g = chip.ghosts
            g.values[:] = state[g.spin_ids]
            g.last_refresh[:] = -1


def build_system(
    model: IsingModel,
    partition: PartitionResult,
    chip_config: ChipConfig | None = None,
    interconnect: InterconnectConfig | None = None,
    mode: Mode | str = Mode.SYNC,
    initial: np.ndarray | None = None,
    coloring: Coloring | None = None,
) -> IllusionSystem:
    chip_config = chip_config or ChipConfig()
    interconnect = interconnect or InterconnectConfig()
    a = np.asarray(partition.assignment, dtype=np.int64)
    if a.shape != (model.n,) or np.any(a < 0) or np.any(a >= partition.k):
        raise ContractViolation("partition does not assign every spin to a part in [0, k)")
    sizes = np.bincount(a, minlength=partition.k)
    if not np.array_equal(sizes, partition.part_sizes) or not partition.is_feasible:
        raise ContractViolation("partition result is inconsistent or infeasible")
    for c, size in enumerate(sizes):
        if size > chip_config.capacity:
            raise CapacityError(f"chip {c} needs {size} p-bits but capacity is {chip_config.capacity}")

    coloring = greedy_coloring(model) if coloring is None else coloring
    if not coloring.is_proper(model):
        raise ContractViolation("coloring is not proper for this model")
    state = np.ones(model.n, dtype=np.int8) if initial is None else np.asarray(initial, np.int8)

    e, w = model.edges, model.weights
    ea, eb = a[e[:, 0]], a[e[:, 1]]
    chips = []
    links: dict[tuple[int, int], set] = {}
    for c in range(partition.k):
        inside = (ea == c) & (eb == c)
        local = np.column_stack([e[inside], w[inside]]) if inside.any() else np.zeros((0, 3))
        rows = []
        for (i, j), wij, ai, bj in zip(e, w, ea, eb):
            if ai == c and bj != c:
                rows.append((i, j, wij))
                links.setdefault((int(bj), c), set()).add(int(j))
            elif bj == c and ai != c:
                rows.append((j, i, wij))
                links.setdefault((int(ai), c), set()).add(int(i))
        cut = np.array(rows, dtype=np.float64).reshape(-1, 3)
        ghost_ids = np.unique(cut[:, 1].astype(np.int64))
        ghosts = GhostTable(
            spin_ids=ghost_ids,
            owners=a[ghost_ids],
            values=state[ghost_ids].copy(),
            last_refresh=np.full(ghost_ids.size, -1, dtype=np.int64),
        )
        chips.append(Chip(c, np.flatnonzero(a == c), local, cut, ghosts))
    link_arrays = {key: np.array(sorted(v), dtype=np.int64) for key, v in sorted(links.items())}
    return IllusionSystem(model, partition, chips, Mode(mode), chip_config, interconnect,
                          coloring, link_arrays)


# -- reports & accounting ---------------------------------------------------------

@dataclass(frozen=True)
class Accounting:
    wall_time: float
    energy: float
    flips_per_s: float
    rng_per_s: float


@dataclass
class RunReport:
    mode: str
    k: int
    tau: int
    delay: int
    trace: SampleTrace
    chip_updates: np.ndarray
    chip_draws: np.ndarray
    exchange_rounds: int
    messages: int
    boundary_bytes: int
    phase_loads: np.ndarray
    wall_time: float = 0.0
    energy: float = 0.0
    flips_per_s: float = 0.0
    rng_per_s: float = 0.0
    comparison: object = None
    sweeps: int = field(init=False)

    def __post_init__(self):
        self.sweeps = int(self.trace.energies.size)

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "k": self.k,
            "tau": self.tau,
            "delay": self.delay,
            "sweeps": self.sweeps,
            "n": self.trace.n,
            "rng_draws": self.trace.rng_draws,
            "attempts": self.trace.attempts,
            "accepted_flips": self.trace.accepted_flips,
            "num_recorded": self.trace.num_recorded,
            "best_energy": self.trace.best_energy,
            "final_energy": float(self.trace.energies[-1]),
            "final_state": self.trace.final_state.tolist(),
            "trace_sha256": self.trace.digest(),
            "chip_updates": self.chip_updates.tolist(),
            "chip_draws": self.chip_draws.tolist(),
            "exchange_rounds": self.exchange_rounds,
            "messages": self.messages,
            "boundary_bytes": self.boundary_bytes,
            "wall_time_s": self.wall_time,
            "energy_proxy_j": self.energy,
            "effective_flips_per_s": self.flips_per_s,
            "effective_rng_per_s": self.rng_per_s,
        }
        if self.comparison is not None:
            out["comparison"] = self.comparison.to_dict()
        return out


def account(report: RunReport, chip_config: ChipConfig | None = None,
            interconnect: InterconnectConfig | None = None) -> Accounting:
    """Simulated wall time, energy proxy and effective rates of a run.

    Wall time is the critical-path compute time plus one message overhead per
    exchange round. Synchronous runs align all chips at every exchange (the
    slowest chip sets the pace of each round); an asynchronous chip never
    waits. A chip that waits at a barrier sleeps and pays one
    shutdown/wakeup cycle at active power.
    """
    chip = chip_config or ChipConfig()
    ic = interconnect or InterconnectConfig(tau=report.tau, delay=report.delay)
    rate = chip.update_rate
    S = report.sweeps
    loads = report.phase_loads
    per_chip = loads.sum(axis=1)
    active = S * per_chip / rate
    events = 0

    if report.mode == Mode.SYNC.value and report.k > 1:
        if report.tau == 1:
            phase_max = loads.max(axis=0)
            compute = S * phase_max.sum() / rate
            events = S * int((loads < phase_max[None, :]).sum())
        else:
            full, rest = divmod(S, report.tau)
            seg = report.tau * per_chip / rate
            compute = full * seg.max() + rest * per_chip.max() / rate
            events = full * int((seg < seg.max()).sum())
    else:
        compute = active.max()
    wall = compute + report.exchange_rounds * ic.message_overhead

    idle = wall - active
    energy = float(np.sum(active * chip.active_power + idle * chip.idle_power))
    energy += events * (chip.wakeup_latency + chip.shutdown_latency) * chip.active_power
    flips = report.trace.attempts / wall if wall > 0 else math.inf
    draws = report.trace.rng_draws / wall if wall > 0 else math.inf
    return Accounting(float(wall), energy, float(flips), float(draws))


def _finish(report: RunReport, chip: ChipConfig, ic: InterconnectConfig) -> RunReport:
    acc = account(report, chip, ic)
    report.wall_time = acc.wall_time
    report.energy = acc.energy
    report.flips_per_s = acc.flips_per_s
    report.rng_per_s = acc.rng_per_s
    return report


# -- runs -------------------------------------------------------------------------

def single_chip_run(model: IsingModel, config: SamplerConfig,
                    chip_config: ChipConfig | None = None,
                    coloring: Coloring | None = None, mode: str = "single") -> RunReport:
    """One chip holding the whole graph, using ``config.kernel`` as given."""
    chip = chip_config or ChipConfig(capacity=max(model.n, 1))
    if model.n > chip.capacity:
        raise CapacityError(f"chip 0 needs {model.n} p-bits but capacity is {chip.capacity}")
    if config.kernel is Kernel.CHROMATIC:
        coloring = greedy_coloring(model) if coloring is None else coloring
        loads = np.bincount(coloring.colors, minlength=coloring.num_colors)[None, :]
    else:
        loads = np.ones((1, model.n))
    trace = run(model, config, coloring=coloring)
    per_chip = np.array([trace.attempts], dtype=np.int64)
    report = RunReport(
        mode=mode, k=1, tau=1, delay=0, trace=trace,
        chip_updates=per_chip, chip_draws=per_chip.copy(),
        exchange_rounds=0, messages=0, boundary_bytes=0, phase_loads=loads.astype(np.int64),
    )
    return _finish(report, chip, InterconnectConfig())


def ideal_reference_run(model: IsingModel, config: SamplerConfig,
                        chip_config: ChipConfig | None = None,
                        coloring: Coloring | None = None) -> RunReport:
    """Hypothetical single chip housing the whole graph: chromatic Gibbs with
    the same RNG keying as the chip network, zero messages."""
    return single_chip_run(model, replace(config, kernel=Kernel.CHROMATIC), chip_config,
                           coloring, mode="ideal")


def _network_run(system: IllusionSystem, config: SamplerConfig, engine: str) -> RunReport:
    model = system.model
    ic = system.interconnect
    betas = config.schedule.values(config.sweeps)
    state = initial_state(model, config)
    system.reset_ghosts(state)
    order, phase_ptr = system.coloring.order()
    num_phases = system.coloring.num_colors
    delay_phases = ic.delay * num_phases if system.mode is Mode.ASYNC else 0
    hist, use_hist, states, energies = _buffers(model, config)
    counters = np.zeros(model.n, dtype=np.uint64)
    seed = np.uint64(config.seed % (1 << 64))

    if engine == "numba":
        spacing = 1 if ic.tau == 1 else ic.tau * num_phases
        nbuf = delay_phases // spacing + 2
        flips, rounds = _kernels.run_network(
            model.indptr, model.indices, model.data, model.biases,
            np.asarray(system.partition.assignment, dtype=np.int64), order, phase_ptr,
            betas, seed, state, counters, config.burn_in, config.thinning,
            hist, use_hist, states, config.record_states, energies,
            ic.tau, delay_phases, np.zeros((nbuf, model.n), dtype=np.int8),
            np.zeros(nbuf, dtype=np.int64),
        )
    elif engine == "python":
        flips, rounds = _message_passing(system, config, betas, state, counters,
                                         hist, use_hist, states, energies, delay_phases)
    else:
        raise ContractViolation(f"unknown engine {engine!r}")

    trace = _make_trace(model, config, state, hist, use_hist, states, energies, counters, flips)
    a = np.asarray(system.partition.assignment)
    chip_draws = np.bincount(a, weights=counters.astype(np.float64), minlength=system.k).astype(np.int64)
    chip_updates = config.sweeps * np.bincount(a, minlength=system.k).astype(np.int64)
    payload = sum(ids.size for ids in system.links.values()) * ic.payload_bytes
    report = RunReport(
        mode=system.mode.value, k=system.k, tau=ic.tau, delay=ic.delay if system.mode is Mode.ASYNC else 0,
        trace=trace, chip_updates=chip_updates, chip_draws=chip_draws,
        exchange_rounds=int(rounds), messages=int(rounds) * system.directed_pairs,
        boundary_bytes=int(rounds) * payload, phase_loads=system.phase_loads(),
    )
    return _finish(report, system.chip_config, ic)


def _message_passing(system, config, betas, state, counters, hist, use_hist, states,
                     energies, delay_phases):
    """Readable chip-by-chip engine using the ghost tables and explicit
    messages; used to cross-check the compiled kernel."""
    model = system.model
    rng = CounterRng(config.seed, model.n, counters)
    colors = system.coloring.colors
    num_phases = system.coloring.num_colors
    tau = system.interconnect.tau
    local = [state[ch.spins].copy() for ch in system.chips]
    where = {}
    for ch in system.chips:
        for pos, i in enumerate(ch.spins):
            where[int(i)] = (ch.chip_id, pos)

    def read(c, j):
        owner, pos = where[j]
        if owner == c:
            return local[c][pos]
        g = system.chips[c].ghosts
        return g.values[np.searchsorted(g.spin_ids, j)]

    in_flight = []
    clock = 0
    flips = 0
    rounds = 0
    rec = 0
    for t, beta in enumerate(betas):
        for p in range(num_phases):
            still = []
            for due, src, dst, ids, vals, sent in in_flight:
                if due <= clock:
                    system.chips[dst].ghosts.refresh(ids, vals, sent)
                else:
                    still.append((due, src, dst, ids, vals, sent))
            in_flight = still
            for ch in system.chips:
                c = ch.chip_id
                for pos, i in enumerate(ch.spins):
                    if colors[i] != p:
                        continue
                    nbrs, w = model.neighbors(i)
                    field = model.biases[i]
                    for j, wij in zip(nbrs, w):
                        field += wij * read(c, int(j))
                    u = rng.draw(int(i))
                    new = _kernels.heat_bath(field, beta, u)
                    if new != local[c][pos]:
                        flips += 1
                        local[c][pos] = new
            if tau == 1 or (p == num_phases - 1 and (t + 1) % tau == 0):
                rounds += 1
                for (src, dst), ids in system.links.items():
                    vals = np.array([read(src, int(j)) for j in ids], dtype=np.int8)
                    in_flight.append((clock + 1 + delay_phases, src, dst, ids, vals, t))
            clock += 1
        for ch in system.chips:
            state[ch.spins] = local[ch.chip_id]
        energies[t] = _kernels.csr_energy(model.indptr, model.indices, model.data, model.biases, state)
        if t >= config.burn_in and (t - config.burn_in) % config.thinning == 0:
            if use_hist:
                hist[_kernels.state_index(state)] += 1
            if config.record_states:
                states[rec] = state
            rec += 1
    return flips, rounds


def sync_run(system: IllusionSystem, config: SamplerConfig, engine: str = "numba") -> RunReport:
    if system.mode is not Mode.SYNC:
        raise ContractViolation("sync_run needs a system built in synchronous mode")
    return _network_run(system, config, engine)


def async_run(system: IllusionSystem, config: SamplerConfig, engine: str = "numba") -> RunReport:
    if system.mode is not Mode.ASYNC:
        raise ContractViolation("async_run needs a system built in asynchronous mode")
    return _network_run(system, config, engine)


def run_system(system: IllusionSystem, config: SamplerConfig, engine: str = "numba") -> RunReport:
    runner = sync_run if system.mode is Mode.SYNC else async_run
    return runner(system, config, engine)


def expected_messages(system: IllusionSystem, sweeps: int) -> int:
    """Closed-form message count: exchange rounds times directed chip pairs
    sharing at least one cut coupling."""
    tau = system.interconnect.tau
    rounds = sweeps * system.coloring.num_colors if tau == 1 else sweeps // tau
    return rounds * system.directed_pairs


def boundary_weight(system: IllusionSystem) -> float:
    return cut_weight(system.model, system.partition.assignment)
