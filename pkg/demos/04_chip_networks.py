# %% [markdown]
# # Synchronous and asynchronous chip networks
# Each chip holds its own spins plus read-only ghost copies of remote
# neighbours. Synchronous chips exchange boundaries at a barrier; with an
# exchange after every colour phase the network reproduces the single-chip
# run bit for bit. Exchanging less often, or with delivery delay, makes the
# ghosts stale: wall time drops, accuracy degrades.

# %%
from illusion_sim import (
    ChipConfig,
    InterconnectConfig,
    PartitionSpec,
    SamplerConfig,
    build_system,
    calibration_model,
    exact_boltzmann,
    ideal_reference_run,
    partition,
    random_model,
    sync_run,
    tv_distance,
)
from illusion_sim.illusion import run_system

# %% Bit-identity with the ideal single chip.
m = random_model(40, 0.1, seed=2, bias_scale=0.5)
cfg = SamplerConfig.fixed(0.7, sweeps=2000, seed=3)
ideal = ideal_reference_run(m, cfg)
for k in (2, 3, 4):
    system = build_system(m, partition(m, PartitionSpec(k)), ChipConfig(capacity=40))
    rep = sync_run(system, cfg)
    print(f"k={k}: identical trajectory: {rep.trace.digest() == ideal.trace.digest()}, "
          f"messages {rep.messages}")

# %% Staleness on the calibration instance.
m = calibration_model()
exact = exact_boltzmann(m, 0.5).probabilities
cfg = SamplerConfig.fixed(0.5, sweeps=200_000, burn_in=10_000)
part = partition(m, PartitionSpec(2))
print(f"ideal: TV {tv_distance(ideal_reference_run(m, cfg).trace.empirical(), exact):.4f}")
for mode, delay in (("sync", 0), ("async", 1)):
    for tau in (1, 4, 16):
        ic = InterconnectConfig(tau=tau, delay=delay, message_overhead=1e-6)
        rep = run_system(build_system(m, part, ChipConfig(capacity=10), ic, mode), cfg)
        print(f"{mode:>5} tau={tau:>2}: TV {tv_distance(rep.trace.empirical(), exact):.4f}, "
              f"wall {rep.wall_time:.3e} s, energy {rep.energy:.3e} J, messages {rep.messages}")
