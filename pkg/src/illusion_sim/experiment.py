"""Experiment orchestration and result files.

``run_experiment`` runs the ideal single-chip reference plus a grid of
partitioned runs and writes three files into the output directory:

``report.json``
    full run reports with their comparison blocks (``schema_version`` 1)
``metrics.csv``
    one row per run
``sweep_energy.csv``
    energy per sweep per run (long format)

``emit_plot_data`` turns a results directory into tidy tables. Every output
is a deterministic function of the configuration and seed; no timestamps or
wall-clock measurements are written.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ._parallel import worker_count
from .formats import Problem, atomic_write, load_problem
from .illusion import (
    ChipConfig,
    InterconnectConfig,
    Mode,
    RunReport,
    build_system,
    ideal_reference_run,
    run_system,
    single_chip_run,
)
from .metrics import compare, tv_distance
from .model import exact_boltzmann, ground_states
from .partition import PartitionSpec, partition
from .sampler import SamplerConfig

SCHEMA_VERSION = 1
EXACT_LIMIT = 20
METRIC_COLUMNS = [
    "run", "mode", "k", "tau", "delay", "tv", "kl", "tv_vs_ideal", "best_energy",
    "final_energy", "wall_time_s", "energy_proxy_j", "messages", "boundary_bytes",
    "cut_weight", "rng_draws",
]


@contextmanager
def stage(name: str):
    """Tag any exception escaping the block with the pipeline stage name."""
    try:
        yield
    except Exception as exc:
        if not hasattr(exc, "stage"):
            exc.stage = name
        raise


@dataclass
class ExperimentConfig:
    model_path: str
    out_dir: str
    model_format: str = "native"
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    ks: tuple[int, ...] = (2,)
    taus: tuple[int, ...] = (1,)
    delays: tuple[int, ...] = (0,)
    modes: tuple[str, ...] = ("sync",)
    epsilon: float = 0.05
    chip: ChipConfig = field(default_factory=ChipConfig)
    message_overhead: float = 0.0
    payload_bytes: int = 1
    seed: int = 0
    energy_stride: int = 1
    tv_points: int = 12

    def grid(self) -> list[tuple[str, int, int, int]]:
        """Ordered, de-duplicated ``(mode, k, tau, delay)`` points; synchronous
        points ignore the delay."""
        points = []
        for mode in self.modes:
            Mode(mode)
            for k in self.ks:
                for tau in self.taus:
                    for delay in (self.delays if mode == Mode.ASYNC.value else (0,)):
                        p = (mode, int(k), int(tau), int(delay))
                        if p not in points:
                            points.append(p)
        return points

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sampler"]["kernel"] = self.sampler.kernel.value
        d["sampler"]["schedule"] = asdict(self.sampler.schedule)
        d.pop("out_dir")
        return d


# -- helpers -------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def tv_curve(report: RunReport, exact_p: np.ndarray, points: int) -> list[list]:
    """TV to the exact distribution after increasing numbers of recorded samples."""
    states = report.trace.states
    if states is None or states.shape[0] == 0:
        return []
    n = report.trace.n
    idx = (states > 0).astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))
    m = idx.size
    marks = np.unique(np.geomspace(min(10, m), m, points).astype(np.int64))
    counts = np.zeros(exact_p.size, dtype=np.int64)
    prev = 0
    curve = []
    burn, thin = report.trace.burn_in, report.trace.thinning
    for mk in marks:
        np.add.at(counts, idx[prev:mk], 1)
        prev = mk
        curve.append([int(burn + mk * thin), tv_distance(counts / mk, exact_p)])
    return curve


def _run_row(run_id: str, report: RunReport, cut: float | None) -> list:
    c = report.comparison
    return [
        run_id, report.mode, report.k, report.tau, report.delay,
        c.tv if c else None, c.kl if c else None, c.tv_vs_ideal if c else None,
        report.trace.best_energy, float(report.trace.energies[-1]),
        report.wall_time, report.energy, report.messages, report.boundary_bytes,
        cut, report.trace.rng_draws,
    ]


def _energy_rows(runs: list[tuple[str, RunReport]], stride: int) -> list[list]:
    rows = []
    for run_id, rep in runs:
        e = rep.trace.energies
        for t in range(0, e.size, stride):
            rows.append([run_id, t, float(e[t])])
    return rows


def write_results(out_dir, header: dict, runs: list[tuple[str, RunReport, dict]],
                  energy_stride: int = 1) -> dict[str, Path]:
    out = Path(out_dir)
    entries = []
    metric_rows = []
    for run_id, rep, extra in runs:
        entry = {"run": run_id, **rep.to_dict(), **extra}
        entries.append(entry)
        metric_rows.append(_run_row(run_id, rep, extra.get("cut_weight")))
    report = {"schema_version": SCHEMA_VERSION, **header, "runs": entries}
    paths = {
        "report": out / "report.json",
        "metrics": out / "metrics.csv",
        "sweep_energy": out / "sweep_energy.csv",
    }
    atomic_write(paths["report"], _json_text(report))
    atomic_write(paths["metrics"], _csv_text(METRIC_COLUMNS, metric_rows))
    atomic_write(paths["sweep_energy"], _csv_text(
        ["run", "sweep", "energy"], _energy_rows([(r, rep) for r, rep, _ in runs], energy_stride)))
    return paths


def _model_header(problem: Problem) -> dict:
    m = problem.model
    return {
        "model": {
            "n": m.n,
            "num_couplings": m.num_couplings,
            "kind": problem.kind,
            "objective_offset": problem.offset,
            "objective_scale": problem.scale,
        }
    }


def _exact_block(problem: Problem, beta_values: np.ndarray):
    """Exact distribution (constant beta only) and ground states, when small."""
    model = problem.model
    if model.n > EXACT_LIMIT:
        return None, None, {}
    with stage("exact"):
        emin, ground = ground_states(model)
        exact = None
        if np.all(beta_values == beta_values[0]):
            exact = exact_boltzmann(model, float(beta_values[0]))
    return exact, ground, {"ground_energy": emin, "ground_state_count": len(ground)}


# -- experiments ---------------------------------------------------------------------

def run_experiment(config: ExperimentConfig) -> dict[str, Path]:
    with stage("load"):
        problem = load_problem(config.model_path, config.model_format)
    model = problem.model
    betas = config.sampler.schedule.values(config.sampler.sweeps)
    exact, ground, exact_info = _exact_block(problem, betas)
    sampler = replace(config.sampler, seed=config.seed, record_states=exact is not None)

    with stage("ideal"):
        ideal = ideal_reference_run(model, sampler)
        ideal.comparison = compare(ideal, exact=exact, ground_set=ground, ideal=ideal)

    points = config.grid()
    partitions = {}
    with stage("partition"):
        for k in sorted({p[1] for p in points}):
            spec = PartitionSpec(k, epsilon=config.epsilon, capacity=None, seed=config.seed)
            partitions[k] = partition(model, spec)

    def one(point):
        mode, k, tau, delay = point
        with stage(f"{mode} run k={k} tau={tau} delay={delay}"):
            ic = InterconnectConfig(tau=tau, delay=delay, message_overhead=config.message_overhead,
                                    payload_bytes=config.payload_bytes)
            system = build_system(model, partitions[k], config.chip, ic, mode)
            report = run_system(system, sampler)
            report.comparison = compare(report, exact=exact, ground_set=ground, ideal=ideal)
            return report

    workers = min(worker_count(), max(1, len(points)))
    if workers == 1:
        reports = [one(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, points))

    runs = [("ideal", ideal, _extras(ideal, exact, config, None))]
    for (mode, k, tau, delay), rep in zip(points, reports):
        runs.append((f"{mode}-k{k}-tau{tau}-d{delay}", rep,
                     _extras(rep, exact, config, partitions[k])))
    header = {"command": "illusion", "config": config.to_dict(), **_model_header(problem),
              "exact": exact_info}
    with stage("write"):
        return write_results(config.out_dir, header, runs, config.energy_stride)


def _extras(rep, exact, config, part) -> dict:
    extra = {}
    if part is not None:
        extra["cut_weight"] = part.cut_weight
        extra["part_sizes"] = part.part_sizes.tolist()
    else:
        extra["cut_weight"] = 0.0
    if exact is not None:
        extra["tv_curve"] = tv_curve(rep, exact.probabilities, config.tv_points)
    return extra


def run_sampling(model_path: str, model_format: str, config: SamplerConfig, out_dir: str,
                 restarts: int = 1, chip: ChipConfig | None = None,
                 energy_stride: int = 1) -> dict[str, Path]:
    """Single-chip sampling (optionally several independent restarts)."""
    with stage("load"):
        problem = load_problem(model_path, model_format)
    model = problem.model
    betas = config.schedule.values(config.sweeps)
    exact, ground, exact_info = _exact_block(problem, betas)
    config = replace(config, record_states=exact is not None)
    chip = chip or ChipConfig(capacity=max(model.n, 1))

    def one(r):
        with stage(f"sample restart {r}"):
            rep = single_chip_run(model, replace(config, seed=config.seed + r), chip)
            rep.comparison = compare(rep, exact=exact, ground_set=ground)
            return rep

    workers = min(worker_count(), restarts)
    if workers == 1:
        reports = [one(r) for r in range(restarts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, range(restarts)))
    runs = []
    for r, rep in enumerate(reports):
        extra = {"seed": config.seed + r, "cut_weight": 0.0,
                 "objective_best": problem.objective(rep.trace.best_energy)}
        if exact is not None:
            extra["tv_curve"] = tv_curve(rep, exact.probabilities, 12)
        runs.append((f"restart{r}", rep, extra))
    cfg = asdict(config)
    cfg["kernel"] = config.kernel.value
    cfg["schedule"] = asdict(config.schedule)
    header = {"command": "sample", "config": {"sampler": cfg, "restarts": restarts,
                                              "model_path": model_path, "model_format": model_format},
              **_model_header(problem), "exact": exact_info}
    with stage("write"):
        return write_results(out_dir, header, runs, energy_stride)


# -- plot data -----------------------------------------------------------------------

def _read_metrics(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def emit_plot_data(results_dir, out_dir=None) -> dict[str, Path]:
    """Tidy tables for plotting: accuracy vs tau, wall time vs k, TV vs sweeps.

    Inputs are checked before anything is written, so a failure leaves no
    partial output.
    """
    src = Path(results_dir)
    dst = Path(out_dir) if out_dir is not None else src
    metrics_path = src / "metrics.csv"
    report_path = src / "report.json"
    for p in (metrics_path, report_path):
        if not p.is_file():
            raise FileNotFoundError(f"missing input {p}")
    rows = _read_metrics(metrics_path)
    report = json.loads(report_path.read_text(encoding="utf-8"))

    def key(r):
        return (r["mode"], int(r["k"]), int(r["delay"]), int(r["tau"]))

    acc = sorted(rows, key=key)
    acc_rows = [[r["mode"], r["k"], r["delay"], r["tau"], r["tv"], r["kl"], r["tv_vs_ideal"]] for r in acc]
    wall = sorted(rows, key=lambda r: (r["mode"], int(r["tau"]), int(r["delay"]), int(r["k"])))
    wall_rows = [[r["mode"], r["tau"], r["delay"], r["k"], r["wall_time_s"], r["energy_proxy_j"],
                  r["messages"]] for r in wall]
    tv_rows = []
    for run in report.get("runs", []):
        for sweeps, tv in run.get("tv_curve", []):
            tv_rows.append([run["run"], sweeps, tv])

    paths = {
        "accuracy_vs_tau": dst / "accuracy_vs_tau.csv",
        "walltime_vs_k": dst / "walltime_vs_k.csv",
        "tv_vs_sweeps": dst / "tv_vs_sweeps.csv",
    }
    atomic_write(paths["accuracy_vs_tau"], _csv_text(
        ["mode", "k", "delay", "tau", "tv", "kl", "tv_vs_ideal"], acc_rows))
    atomic_write(paths["walltime_vs_k"], _csv_text(
        ["mode", "tau", "delay", "k", "wall_time_s", "energy_proxy_j", "messages"], wall_rows))
    atomic_write(paths["tv_vs_sweeps"], _csv_text(["run", "sweeps", "tv"], tv_rows))
    return paths
