# %% [markdown]
# # Problem files and the command-line pipeline
# Problems arrive as native Ising files, Gset max-cut lists or upper-triangular
# QUBOs. The `illusion-sim` command wraps everything shown in the other demos
# and writes report.json, metrics.csv and sweep_energy.csv.

# %%
import itertools
import tempfile
from pathlib import Path

import numpy as np

from illusion_sim import calibration_model, energy, qubo_to_ising, save_model
from illusion_sim.cli import main
from illusion_sim.formats import parse_gset

# %% Max-cut as an antiferromagnet; the reported offset recovers the cut value.
problem = parse_gset("4 4\n1 2 1\n2 3 1\n3 4 1\n4 1 1\n")
s = np.array([1, -1, 1, -1])
print("cut of alternating assignment:", problem.objective(energy(problem.model, s)))

# %% QUBO to Ising with x = (1 + s) / 2, checked over every assignment.
q = np.triu(np.random.default_rng(0).normal(size=(5, 5)))
model, offset = qubo_to_ising(q)
gap = max(abs(np.array(x) @ q @ np.array(x) - energy(model, 2 * np.array(x) - 1) - offset)
          for x in itertools.product((0, 1), repeat=5))
print(f"largest QUBO/Ising mismatch: {gap:.1e}")

# %% End to end through the CLI.
with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    save_model(calibration_model(), tmp / "model.txt")
    code = main(["illusion", str(tmp / "model.txt"), "--beta", "0.5", "--sweeps", "20000",
                 "-k", "2", "--tau", "1", "4", "16", "--delay", "1", "--mode", "both",
                 "--out", str(tmp / "results")])
    main(["plotdata", str(tmp / "results")])
    print("exit code", code)
    print((tmp / "results" / "accuracy_vs_tau.csv").read_text())
