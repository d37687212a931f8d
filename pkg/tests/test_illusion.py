import numpy as np
import pytest

from illusion_sim import (
    CapacityError,
    ChipConfig,
    ContractViolation,
    InterconnectConfig,
    PartitionSpec,
    SamplerConfig,
    account,
    async_run,
    build_system,
    calibration_model,
    exact_boltzmann,
    grid_model,
    ideal_reference_run,
    partition,
    random_model,
    sync_run,
    tv_distance,
)
from illusion_sim.illusion import expected_messages, run_system, single_chip_run
from illusion_sim.partition import PartitionResult


def grid_bisection():
    g = grid_model(4, 4)
    return g, partition(g, PartitionSpec(2, epsilon=0.0))


def system(model, k, mode="sync", tau=1, delay=0, overhead=0.0, seed=0):
    part = partition(model, PartitionSpec(k, seed=seed))
    return build_system(model, part, ChipConfig(capacity=model.n),
                        InterconnectConfig(tau=tau, delay=delay, message_overhead=overhead), mode)


class TestBuild:
    def test_single_chip(self):
        m = random_model(10, seed=1)
        s = system(m, 1)
        assert s.k == 1 and s.chips[0].ghosts.spin_ids.size == 0 and s.directed_pairs == 0

    def test_grid_bisection_ghosts(self):
        g, part = grid_bisection()
        s = build_system(g, part, ChipConfig(capacity=8))
        for chip in s.chips:
            assert chip.spins.size == 8 and chip.ghosts.spin_ids.size == 4
            assert len(chip.cut_couplings) == 4

    def test_capacity_error_names_chip(self):
        g = grid_model(4, 4)
        a = np.array([0] * 9 + [1] * 7)
        part = PartitionResult(a, 0.0, np.array([9, 7]), 2, 9)
        with pytest.raises(CapacityError, match="chip 0"):
            build_system(g, part, ChipConfig(capacity=8))

    def test_ghosts_are_remote_endpoints(self):
        m = random_model(30, 0.2, seed=4)
        s = system(m, 3)
        a = s.partition.assignment
        seen = np.zeros(m.n, dtype=int)
        for chip in s.chips:
            seen[chip.spins] += 1
            want = set()
            for (i, j) in m.edges:
                if a[i] == chip.chip_id and a[j] != chip.chip_id:
                    want.add(int(j))
                if a[j] == chip.chip_id and a[i] != chip.chip_id:
                    want.add(int(i))
            assert set(chip.ghosts.spin_ids.tolist()) == want
            assert np.all(chip.ghosts.owners != chip.chip_id)
        assert np.all(seen == 1)

    def test_config_validation(self):
        with pytest.raises(ContractViolation):
            ChipConfig(capacity=0)
        with pytest.raises(ContractViolation):
            ChipConfig(idle_power=-1.0)
        with pytest.raises(ContractViolation):
            InterconnectConfig(tau=0)
        with pytest.raises(ContractViolation):
            InterconnectConfig(delay=-1)


class TestRuns:
    def test_mode_mismatch(self):
        m = random_model(8, seed=2)
        with pytest.raises(ContractViolation):
            sync_run(system(m, 2, mode="async"), SamplerConfig.fixed(1.0, sweeps=5))
        with pytest.raises(ContractViolation):
            async_run(system(m, 2, mode="sync"), SamplerConfig.fixed(1.0, sweeps=5))

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_sync_tau1_bit_identical_to_ideal(self, k):
        m = random_model(24, 0.2, seed=k, bias_scale=0.5)
        cfg = SamplerConfig.fixed(0.6, sweeps=300, seed=k, record_states=True)
        ideal = ideal_reference_run(m, cfg)
        rep = sync_run(system(m, k), cfg)
        assert rep.trace.to_bytes() == ideal.trace.to_bytes()

    def test_async_zero_delay_matches_sync(self):
        m = random_model(20, 0.25, seed=6)
        cfg = SamplerConfig.fixed(0.8, sweeps=200, record_states=True)
        a = async_run(system(m, 3, mode="async"), cfg)
        s = sync_run(system(m, 3), cfg)
        assert a.trace.to_bytes() == s.trace.to_bytes()

    def test_ideal_equals_one_chip_sync(self):
        m = random_model(12, 0.3, seed=3)
        cfg = SamplerConfig.fixed(0.5, sweeps=400)
        ideal = ideal_reference_run(m, cfg)
        one = sync_run(system(m, 1), cfg)
        assert ideal.trace.to_bytes() == one.trace.to_bytes()
        assert ideal.messages == 0 == one.messages

    @pytest.mark.parametrize("mode,tau,delay", [
        ("sync", 1, 0), ("sync", 3, 0), ("async", 1, 1), ("async", 2, 3), ("async", 4, 0),
    ])
    def test_message_passing_engine_agrees(self, mode, tau, delay):
        m = random_model(14, 0.3, seed=tau + delay, bias_scale=0.3)
        cfg = SamplerConfig.fixed(0.7, sweeps=60, seed=1, record_states=True)
        sysm = system(m, 3, mode=mode, tau=tau, delay=delay)
        fast = run_system(sysm, cfg, engine="numba")
        slow = run_system(sysm, cfg, engine="python")
        assert fast.trace.to_bytes() == slow.trace.to_bytes()
        assert fast.messages == slow.messages

    def test_staleness_changes_trajectory(self):
        m = random_model(16, 0.3, seed=2)
        cfg = SamplerConfig.fixed(0.7, sweeps=100)
        base = sync_run(system(m, 2), cfg).trace.digest()
        assert sync_run(system(m, 2, tau=4), cfg).trace.digest() != base
        assert async_run(system(m, 2, mode="async", delay=1), cfg).trace.digest() != base

    def test_conservation(self):
        m = random_model(25, 0.2, seed=9)
        cfg = SamplerConfig.fixed(0.5, sweeps=77)
        rep = async_run(system(m, 3, mode="async", tau=2, delay=1), cfg)
        assert rep.chip_updates.sum() == rep.trace.attempts == rep.trace.rng_draws == 77 * 25
        assert np.array_equal(rep.chip_updates, rep.chip_draws)

    def test_deterministic_report(self):
        m = random_model(18, 0.3, seed=1)
        cfg = SamplerConfig.fixed(0.5, sweeps=100)
        a = async_run(system(m, 2, mode="async", tau=2, delay=2), cfg).to_dict()
        b = async_run(system(m, 2, mode="async", tau=2, delay=2), cfg).to_dict()
        assert a == b


class TestMessages:
    def test_two_chips_tau10(self):
        g, part = grid_bisection()
        s = build_system(g, part, ChipConfig(capacity=8), InterconnectConfig(tau=10))
        rep = sync_run(s, SamplerConfig.fixed(1.0, sweeps=100))
        assert rep.exchange_rounds == 10 and rep.messages == 20 == expected_messages(s, 100)

    @pytest.mark.parametrize("mode,tau", [("sync", 1), ("sync", 7), ("async", 1), ("async", 3)])
    def test_closed_form(self, mode, tau):
        m = random_model(30, 0.2, seed=tau)
        s = system(m, 4, mode=mode, tau=tau, delay=1)
        rep = run_system(s, SamplerConfig.fixed(0.5, sweeps=50))
        assert rep.messages == expected_messages(s, 50)
        assert rep.boundary_bytes == rep.exchange_rounds * sum(v.size for v in s.links.values())


class TestAccounting:
    def test_single_chip_defaults(self):
        m = random_model(10, seed=0)
        rep = single_chip_run(m, SamplerConfig.fixed(1.0, sweeps=100_000))
        assert rep.trace.attempts == 10**6
        assert rep.wall_time == pytest.approx(1e-4, rel=1e-12)
        assert rep.energy == pytest.approx(1e-3, rel=1e-12)
        assert rep.rng_per_s == pytest.approx(1e10)

    def test_ideal_wall_time(self):
        m = random_model(13, seed=2)
        rep = ideal_reference_run(m, SamplerConfig.fixed(1.0, sweeps=1000))
        assert rep.wall_time == pytest.approx(1000 * 13 / 1e10, rel=1e-12)

    def test_two_balanced_chips_halve(self):
        g, part = grid_bisection()
        cfg = SamplerConfig.fixed(0.4, sweeps=1000)
        one = ideal_reference_run(g, cfg)
        for tau in (1, 5):
            two = sync_run(build_system(g, part, ChipConfig(capacity=8), InterconnectConfig(tau=tau)), cfg)
            assert two.wall_time == pytest.approx(one.wall_time / 2, rel=1e-12)

    def test_exchange_interval_trades_time_for_accuracy(self):
        m = calibration_model()
        exact = exact_boltzmann(m, 0.5).probabilities
        cfg = SamplerConfig.fixed(0.5, sweeps=200_000, burn_in=10_000)
        reps = {tau: async_run(system(m, 2, mode="async", tau=tau, delay=1, overhead=1e-6), cfg)
                for tau in (1, 10)}
        assert reps[10].wall_time < reps[1].wall_time
        tv = {tau: tv_distance(r.trace.empirical(), exact) for tau, r in reps.items()}
        assert tv[10] > tv[1]

    def test_sync_barrier_costs_energy(self):
        m = random_model(11, 0.4, seed=5)
        s = system(m, 2)
        rep = sync_run(s, SamplerConfig.fixed(0.5, sweeps=10))
        loads = s.phase_loads()
        events = 10 * int((loads < loads.max(axis=0)).sum())
        acc = account(rep, s.chip_config, s.interconnect)
        active = 10 * loads.sum(axis=1) / 1e10
        idle = acc.wall_time - active
        expected = float(np.sum(active * 10 + idle * 0.1)) + events * 2e-6 * 10
        assert acc.energy == pytest.approx(expected, rel=1e-12)


class TestAccuracy:
    def test_sync_tau4_tv(self):
        """Stated bound: TV <= 0.05 at 2e5 sweeps on the n=10 instance."""
        m = calibration_model()
        cfg = SamplerConfig.fixed(0.5, sweeps=200_000, burn_in=10_000)
        rep = sync_run(system(m, 2, tau=4), cfg)
        assert tv_distance(rep.trace.empirical(), exact_boltzmann(m, 0.5).probabilities) <= 0.05

    def test_async_delay2_tau2_tv(self):
        m = calibration_model()
        cfg = SamplerConfig.fixed(0.5, sweeps=400_000, burn_in=10_000)
        rep = async_run(system(m, 2, mode="async", tau=2, delay=2), cfg)
        assert tv_distance(rep.trace.empirical(), exact_boltzmann(m, 0.5).probabilities) <= 0.08

    def test_staleness_curve_monotone(self):
        m = calibration_model()
        exact = exact_boltzmann(m, 0.5).probabilities
        cfg = SamplerConfig.fixed(0.5, sweeps=200_000, burn_in=10_000)
        tvs = [tv_distance(async_run(system(m, 2, mode="async", tau=t, delay=1), cfg).trace.empirical(), exact)
               for t in (1, 2, 4, 8, 16)]
        drops = [a - b for a, b in zip(tvs, tvs[1:]) if b < a]
        assert len(drops) <= 1 and all(d <= 0.01 for d in drops)
