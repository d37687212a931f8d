# %% [markdown]
# # Splitting a problem graph across chips
# The partitioner minimises the total |J| of couplings that cross chips,
# subject to a per-chip size bound. It coarsens by heavy-edge matching, grows
# an initial bisection, and refines with Fiduccia-Mattheyses style moves on
# the way back up; more than two parts come from recursive bisection.

# %%
import numpy as np

from illusion_sim import PartitionSpec, brute_force_min_cut, grid_model, partition, random_model

grid = grid_model(4, 4)
r = partition(grid, PartitionSpec(2, epsilon=0.0))
print("4x4 grid bisection, cut =", r.cut_weight)
print(r.assignment.reshape(4, 4))

# %% Against the exhaustive optimum on small random graphs.
ratios = []
for seed in range(50):
    m = random_model(12, 0.3, seed=seed, positive=True)
    spec = PartitionSpec(2, epsilon=0.1)
    ratios.append(partition(m, spec).cut_weight / brute_force_min_cut(m, spec).cut_weight)
ratios = np.array(ratios)
print(f"optimal on {np.sum(ratios <= 1 + 1e-12)}/50, worst ratio {ratios.max():.3f}")

# %% Larger k and a hard capacity cap per chip.
big = random_model(400, 0.01, seed=1)
for k in (2, 4, 8):
    res = partition(big, PartitionSpec(k, epsilon=0.05))
    print(f"k={k}: sizes {res.part_sizes.tolist()}, cut {res.cut_weight:.2f}")
capped = partition(big, PartitionSpec(5, capacity=85))
print("capacity 85:", capped.part_sizes.tolist())
