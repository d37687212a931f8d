import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from illusion_sim import SamplerConfig, calibration_model, grid_model, random_model, save_model
from illusion_sim.cli import EXIT_CONTRACT, EXIT_DATA, EXIT_OK, EXIT_USAGE, exit_code, main
from illusion_sim.errors import CapacityError, ContractViolation, ParseError
from illusion_sim.experiment import METRIC_COLUMNS, ExperimentConfig, emit_plot_data, run_experiment


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "model.txt"
    save_model(calibration_model(), path)
    return path


def files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


class TestExperiment:
    def test_outputs_and_schema(self, model_file, tmp_path):
        cfg = ExperimentConfig(str(model_file), str(tmp_path / "out"),
                               sampler=SamplerConfig.fixed(0.5, sweeps=3000), ks=(1, 2), taus=(1, 4))
        run_experiment(cfg)
        out = tmp_path / "out"
        report = json.loads((out / "report.json").read_text())
        assert report["schema_version"] == 1 and report["command"] == "illusion"
        metrics = rows(out / "metrics.csv")
        assert list(metrics[0]) == METRIC_COLUMNS
        assert [r["run"] for r in metrics] == ["ideal", "sync-k1-tau1-d0", "sync-k1-tau4-d0",
                                              "sync-k2-tau1-d0", "sync-k2-tau4-d0"]
        energy = rows(out / "sweep_energy.csv")
        assert len(energy) == 5 * 3000 and list(energy[0]) == ["run", "sweep", "energy"]

    def test_k1_matches_ideal(self, model_file, tmp_path):
        cfg = ExperimentConfig(str(model_file), str(tmp_path), sampler=SamplerConfig.fixed(0.5, sweeps=2000),
                               ks=(1,), modes=("sync", "async"), delays=(2,))
        run_experiment(cfg)
        for r in rows(tmp_path / "metrics.csv"):
            assert float(r["tv_vs_ideal"]) == 0.0

    def test_tau_grid_rows(self, model_file, tmp_path):
        taus = (1, 2, 4, 8)
        cfg = ExperimentConfig(str(model_file), str(tmp_path), sampler=SamplerConfig.fixed(0.5, sweeps=2000),
                               modes=("async",), taus=taus, delays=(1,))
        run_experiment(cfg)
        got = [int(r["tau"]) for r in rows(tmp_path / "metrics.csv") if r["mode"] == "async"]
        assert got == list(taus)
        emit_plot_data(tmp_path)
        acc = rows(tmp_path / "accuracy_vs_tau.csv")
        assert [int(r["tau"]) for r in acc if r["mode"] == "async"] == list(taus)
        assert all(0 <= float(r["tv"]) <= 1 for r in acc)

    def test_deterministic_across_workers(self, model_file, tmp_path, monkeypatch):
        outs = []
        for threads in ("1", "3"):
            monkeypatch.setenv("ILLUSION_SIM_THREADS", threads)
            out = tmp_path / threads
            run_experiment(ExperimentConfig(str(model_file), str(out),
                                            sampler=SamplerConfig.fixed(0.5, sweeps=1500),
                                            ks=(2, 3), taus=(1, 3), delays=(0, 2), modes=("sync", "async")))
            outs.append(files(out))
        assert outs[0] == outs[1]

    def test_plotdata_needs_inputs(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            emit_plot_data(tmp_path)
        assert list(tmp_path.iterdir()) == []

    def test_large_model_skips_exact(self, tmp_path):
        path = tmp_path / "big.txt"
        save_model(random_model(30, 0.1, seed=1), path)
        run_experiment(ExperimentConfig(str(path), str(tmp_path / "o"), sampler=SamplerConfig.fixed(1.0, sweeps=200)))
        r = rows(tmp_path / "o" / "metrics.csv")
        assert r[0]["tv"] == "" and r[1]["tv_vs_ideal"] == ""


class TestCommands:
    def test_sample(self, model_file, tmp_path):
        assert main(["sample", str(model_file), "--beta", "0.5", "--sweeps", "2000", "--out", str(tmp_path)]) == 0
        m = rows(tmp_path / "metrics.csv")
        assert len(m) == 1 and m[0]["mode"] == "single"
        assert main(["plotdata", str(tmp_path)]) == 0
        assert len(rows(tmp_path / "accuracy_vs_tau.csv")) == 1
        assert len(rows(tmp_path / "walltime_vs_k.csv")) == 1

    def test_sample_anneal_restarts(self, tmp_path):
        path = tmp_path / "g.txt"
        save_model(grid_model(3, 3), path)
        assert main(["sample", str(path), "--anneal", "0.1", "5", "--sweeps", "500", "--restarts", "3",
                     "--out", str(tmp_path / "o")]) == 0
        report = json.loads((tmp_path / "o" / "report.json").read_text())
        assert [r["seed"] for r in report["runs"]] == [0, 1, 2]
        assert all(r["best_energy"] == report["exact"]["ground_energy"] for r in report["runs"])

    def test_partition(self, tmp_path):
        path = tmp_path / "g.txt"
        save_model(grid_model(4, 4), path)
        assert main(["partition", str(path), "-k", "2", "--epsilon", "0", "--brute-force",
                     "--out", str(tmp_path)]) == 0
        out = json.loads((tmp_path / "partition.json").read_text())
        assert out["cut_weight"] == out["brute_force_cut_weight"] == 4.0
        assert out["part_sizes"] == [8, 8] and out["schema_version"] == 1

    def test_convert(self, tmp_path):
        src = tmp_path / "q.txt"
        src.write_text("qubo 2\nQ 0 0 1\nQ 0 1 -2\n")
        dst = tmp_path / "n.txt"
        assert main(["convert", str(src), "--format", "qubo", "--out", str(dst)]) == 0
        text = dst.read_text()
        assert text.startswith("# converted from qubo") and "ising 2" in text

    def test_illusion(self, model_file, tmp_path):
        assert main(["illusion", str(model_file), "--beta", "0.5", "--sweeps", "1000", "-k", "2",
                     "--tau", "1", "2", "--mode", "both", "--delay", "1", "--out", str(tmp_path)]) == 0
        assert len(rows(tmp_path / "metrics.csv")) == 5


class TestExitCodes:
    def test_usage(self, model_file, tmp_path, capsys):
        assert main([]) == EXIT_USAGE
        assert main(["sample", str(model_file), "--nope", "--out", str(tmp_path)]) == EXIT_USAGE
        assert main(["sample", str(model_file), "--beta", "-1", "--out", str(tmp_path)]) == EXIT_USAGE
        assert main(["illusion", str(model_file), "--capacity", "3", "--sweeps", "10",
                     "--out", str(tmp_path)]) == EXIT_USAGE
        assert "chip 0" in capsys.readouterr().err

    def test_data(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("ising 2\nJ 0 1 1\nJ 1 0 1\n")
        assert main(["sample", str(bad), "--out", str(tmp_path)]) == EXIT_DATA
        err = capsys.readouterr().err
        assert "load" in err and "bad.txt:3" in err
        assert main(["partition", str(tmp_path / "missing.txt"), "-k", "2", "--out", str(tmp_path)]) == EXIT_DATA
        assert main(["plotdata", str(tmp_path / "empty")]) == EXIT_DATA

    def test_contract_violation(self, tmp_path):
        path = tmp_path / "m.txt"
        save_model(random_model(3, 1.0, seed=0), path)
        assert main(["partition", str(path), "-k", "5", "--out", str(tmp_path)]) == EXIT_CONTRACT

    def test_mapping(self):
        assert exit_code(ParseError("x")) == EXIT_DATA
        assert exit_code(FileNotFoundError("x")) == EXIT_DATA
        assert exit_code(CapacityError("x")) == EXIT_USAGE
        assert exit_code(ContractViolation("x")) == EXIT_CONTRACT
        assert exit_code(RuntimeError("x")) == EXIT_CONTRACT

    def test_help_lists_subcommands(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--help"])
        assert info.value.code == EXIT_OK
        out = capsys.readouterr().out
        for cmd in ("sample", "partition", "illusion", "convert", "plotdata"):
            assert cmd in out


def test_console_entry_point(model_file, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "illusion_sim.cli", "partition", str(model_file),
                           "-k", "2", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "partition.json").read_text())["k"] == 2
