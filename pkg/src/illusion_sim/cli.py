"""Command-line entry point: ``illusion-sim <command> ...``.

Exit codes: 0 success, 1 usage/config error, 2 data/parse error,
3 internal contract violation.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import CapacityError, ContractViolation, ParseError
from .experiment import ExperimentConfig, _json_text, emit_plot_data, run_experiment, run_sampling, stage
from .formats import FORMATS, atomic_write, format_native, load_problem
from .illusion import ChipConfig
from .partition import PartitionSpec, brute_force_min_cut, partition
from .sampler import BetaSchedule, Kernel, SamplerConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONTRACT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_model(p):
    p.add_argument("model", help="problem file")
    p.add_argument("--format", dest="fmt", choices=FORMATS, default="native",
                   help="problem file format (default: native)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")


def _add_sampler(p, with_kernel=True):
    p.add_argument("--beta", type=float, default=1.0, help="fixed inverse temperature")
    p.add_argument("--anneal", nargs=2, type=float, metavar=("BETA_START", "BETA_END"),
                   help="anneal beta over the run instead of a fixed value")
    p.add_argument("--schedule", choices=("linear", "geometric"), default="geometric",
                   help="anneal shape (default: geometric)")
    p.add_argument("--sweeps", type=int, default=10_000)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--thinning", type=int, default=1)
    if with_kernel:
        p.add_argument("--kernel", choices=[k.value for k in Kernel], default=Kernel.SEQUENTIAL.value,
                       help="sweep order (default: sequential)")
    p.add_argument("--energy-stride", type=int, default=1,
                   help="write every N-th sweep to sweep_energy.csv (default: 1)")


def _add_chip(p):
    p.add_argument("--capacity", type=int, default=None, help="p-bits per chip")
    p.add_argument("--update-rate", type=float, default=1e10, help="spin updates/s per chip")
    p.add_argument("--active-power", type=float, default=10.0, help="watts")
    p.add_argument("--idle-power", type=float, default=0.1, help="watts")
    p.add_argument("--wakeup-latency", type=float, default=1e-6, help="seconds")
    p.add_argument("--shutdown-latency", type=float, default=1e-6, help="seconds")


def _sampler_config(args) -> SamplerConfig:
    if args.anneal:
        schedule = BetaSchedule(args.schedule, args.anneal[0], args.anneal[1])
    else:
        schedule = BetaSchedule.constant(args.beta)
    # chip networks always run colour phases
    kernel = getattr(args, "kernel", Kernel.CHROMATIC.value)
    return SamplerConfig(kernel=kernel, schedule=schedule, sweeps=args.sweeps,
                         burn_in=args.burn_in, thinning=args.thinning, seed=args.seed)


def _chip_config(args, n_default) -> ChipConfig:
    return ChipConfig(
        capacity=args.capacity if args.capacity is not None else n_default,
        update_rate=args.update_rate, active_power=args.active_power,
        idle_power=args.idle_power, wakeup_latency=args.wakeup_latency,
        shutdown_latency=args.shutdown_latency,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="illusion-sim",
                     description="Partitioned probabilistic-computer (p-bit) simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="single-chip Gibbs sampling or annealing")
    _add_model(p)
    _add_sampler(p)
    p.add_argument("--restarts", type=int, default=1, help="independent chains (seeds seed..seed+R-1)")
    _add_chip(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("partition", help="balanced weighted min-cut partition")
    _add_model(p)
    p.add_argument("-k", "--k", type=int, required=True, help="number of parts (chips)")
    p.add_argument("--epsilon", type=float, default=0.05, help="balance slack (default: 0.05)")
    p.add_argument("--capacity", type=int, default=None, help="hard per-part size cap")
    p.add_argument("--brute-force", action="store_true",
                   help="also report the exhaustive optimum (k=2, n<=16)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("illusion", help="ideal reference vs partitioned chip network")
    _add_model(p)
    _add_sampler(p, with_kernel=False)
    p.add_argument("-k", "--k", type=int, nargs="+", default=[2], help="chip counts")
    p.add_argument("--tau", type=int, nargs="+", default=[1], help="exchange intervals (sweeps)")
    p.add_argument("--delay", type=int, nargs="+", default=[0], help="async delivery delays (sweeps)")
    p.add_argument("--mode", choices=("sync", "async", "both"), default="sync")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--message-overhead", type=float, default=0.0, help="seconds per exchange round")
    p.add_argument("--payload-bytes", type=int, default=1, help="bytes per boundary spin")
    _add_chip(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("convert", help="convert a problem file to native format")
    _add_model(p)
    p.add_argument("--out", required=True, help="output file")

    p = sub.add_parser("plotdata", help="tidy plot tables from a results directory")
    p.add_argument("results", help="directory holding report.json and metrics.csv")
    p.add_argument("--out", default=None, help="output directory (default: results dir)")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    return parser


def _cmd_sample(args):
    with stage("load"):
        n = load_problem(args.model, args.fmt).model.n
    with stage("config"):
        config = _sampler_config(args)
        chip = _chip_config(args, n)
    run_sampling(args.model, args.fmt, config, args.out, restarts=args.restarts, chip=chip,
                 energy_stride=args.energy_stride)


def _cmd_partition(args):
    with stage("load"):
        model = load_problem(args.model, args.fmt).model
    with stage("partition"):
        spec = PartitionSpec(args.k, epsilon=args.epsilon, capacity=args.capacity, seed=args.seed)
        result = partition(model, spec)
    out = {
        "schema_version": 1,
        "command": "partition",
        "n": model.n,
        "k": spec.k,
        "epsilon": spec.epsilon,
        "capacity": spec.capacity,
        "seed": spec.seed,
        "max_part_size": result.max_part_size,
        "cut_weight": result.cut_weight,
        "part_sizes": result.part_sizes.tolist(),
        "assignment": result.assignment.tolist(),
    }
    if args.brute_force:
        with stage("brute force"):
            best = brute_force_min_cut(model, spec)
        out["brute_force_cut_weight"] = best.cut_weight
        out["brute_force_assignment"] = best.assignment.tolist()
    atomic_write(f"{args.out}/partition.json", _json_text(out))


def _cmd_illusion(args):
    with stage("load"):
        n = load_problem(args.model, args.fmt).model.n
    with stage("config"):
        sampler = _sampler_config(args)
        modes = ("sync", "async") if args.mode == "both" else (args.mode,)
        config = ExperimentConfig(
            model_path=args.model, model_format=args.fmt, out_dir=args.out, sampler=sampler,
            ks=tuple(args.k), taus=tuple(args.tau), delays=tuple(args.delay), modes=modes,
            epsilon=args.epsilon, chip=_chip_config(args, n), message_overhead=args.message_overhead,
            payload_bytes=args.payload_bytes, seed=args.seed, energy_stride=args.energy_stride,
        )
    run_experiment(config)


def _cmd_convert(args):
    with stage("load"):
        problem = load_problem(args.model, args.fmt)
    comment = (f"converted from {args.fmt}: objective = {problem.offset!r} + "
               f"{problem.scale!r} * energy ({problem.kind})")
    atomic_write(args.out, format_native(problem.model, comment))


def _cmd_plotdata(args):
    with stage("plotdata"):
        emit_plot_data(args.results, args.out)


COMMANDS = {
    "sample": _cmd_sample,
    "partition": _cmd_partition,
    "illusion": _cmd_illusion,
    "convert": _cmd_convert,
    "plotdata": _cmd_plotdata,
}


def exit_code(exc: BaseException) -> int:
    """Map an exception raised by a command onto the documented exit codes."""
    if isinstance(exc, (ParseError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError)):
        return EXIT_DATA
    if isinstance(exc, CapacityError):
        return EXIT_USAGE
    if isinstance(exc, ContractViolation):
        # bad flag values surface as contract violations while building configs
        return EXIT_USAGE if getattr(exc, "stage", None) == "config" else EXIT_CONTRACT
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    return EXIT_CONTRACT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit code below
        code = exit_code(exc)
        where = getattr(exc, "stage", None)
        prefix = f"illusion-sim: {where}: " if where else "illusion-sim: "
        print(f"{prefix}{type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
