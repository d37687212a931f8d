# %% [markdown]
# # Ising models and exact oracles
# A problem graph is a set of pairwise couplings J and biases h with energy
# E(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i. Small models can be solved
# exactly, which gives every sampler in this package a ground truth.

# %%
import numpy as np

from illusion_sim import IsingModel, energy, exact_boltzmann, ground_states, local_field, random_model

triangle = IsingModel(3, {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})
print("E(+,+,-) on the ferromagnetic triangle:", energy(triangle, [1, 1, -1]))

# %% Flipping spin i changes the energy by 2 s_i I_i, where I_i is the local field.
m = random_model(8, density=0.5, seed=3, bias_scale=1.0)
s = np.array([1, -1, 1, 1, -1, -1, 1, -1], dtype=np.int8)
t = s.copy()
t[4] = -t[4]
print("dE =", energy(m, t) - energy(m, s), " 2 s_i I_i =", 2 * s[4] * local_field(m, s, 4))

# %% Exact Boltzmann distribution over all 2^n states (bit i set <=> s_i = +1).
pair = IsingModel(2, {(0, 1): 1.0})
p = exact_boltzmann(pair, beta=1.0).probabilities
print("p(--), p(+-), p(-+), p(++) =", np.round(p, 5))

# %% Frustration: the antiferromagnetic triangle has six degenerate ground states.
afm = IsingModel(3, {(0, 1): -1.0, (0, 2): -1.0, (1, 2): -1.0})
emin, states = ground_states(afm)
print("ground energy", emin, "with", len(states), "ground states")
