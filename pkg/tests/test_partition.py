import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import two_cliques
from illusion_sim import (
    CapacityError,
    ContractViolation,
    IsingModel,
    PartitionSpec,
    brute_force_min_cut,
    cut_weight,
    grid_model,
    partition,
    random_model,
)
from illusion_sim.model import chain_model
from illusion_sim.partition import WeightedGraph, coarsen, fm_refine


def path4():
    return chain_model(4, 1.0)


def ring(n):
    return IsingModel(n, {(i, (i + 1) % n) if i + 1 < n else (0, n - 1): 1.0 for i in range(n)})


class TestCutWeight:
    def test_path(self):
        assert cut_weight(path4(), [0, 0, 1, 1]) == 1.0

    def test_weighted_triangle(self):
        m = IsingModel(3, {(0, 1): 3.0, (1, 2): 1.0, (0, 2): 1.0})
        assert cut_weight(m, [0, 0, 1]) == 2.0

    def test_disjoint_cliques(self):
        assert cut_weight(two_cliques(), [0] * 4 + [1] * 4) == 0.0

    def test_uses_absolute_weights(self):
        assert cut_weight(IsingModel(2, {(0, 1): -2.5}), [0, 1]) == 2.5

    def test_rejects_bad_assignment(self):
        with pytest.raises(ContractViolation):
            cut_weight(path4(), [0, 0, 1])
        with pytest.raises(ContractViolation):
            cut_weight(path4(), [0, 0, -1, 1])


class TestCoarsen:
    def test_edgeless(self):
        h = coarsen(IsingModel(40), floor=4)
        assert len(h.graphs) == 1

    def test_below_floor(self):
        h = coarsen(IsingModel(2, {(0, 1): 1.0}), k=1)
        assert len(h.graphs) == 1

    def test_ring_halves(self):
        h = coarsen(ring(8), floor=4)
        g = h.graphs[1]
        assert g.n == 4
        assert np.all(g.node_weights == 2)
        deg = np.bincount(g.edges.ravel(), minlength=4)
        assert np.all(deg == 2) and len(g.edges) == 4
        # node weight is conserved at every level
        assert all(lvl.total_weight == 8 for lvl in h.graphs)

    def test_maps_compose(self):
        m = random_model(60, 0.1, seed=3, positive=True)
        h = coarsen(m, k=2, floor=8)
        assert len(h.graphs) > 1
        for fine, coarse, mp in zip(h.graphs, h.graphs[1:], h.maps):
            assert np.array_equal(np.bincount(mp, weights=fine.node_weights, minlength=coarse.n),
                                  coarse.node_weights)


class TestRefine:
    def test_optimal_unchanged(self):
        m = two_cliques(bridge=1.0)
        a = np.array([0] * 4 + [1] * 4)
        out = fm_refine(m, a, PartitionSpec(2, epsilon=0.0))
        assert cut_weight(m, out) == 1.0

    def test_swapped_pair_restored(self):
        m = two_cliques()
        a = np.array([0, 0, 0, 1, 0, 1, 1, 1])
        assert cut_weight(m, a) == 6.0
        out = fm_refine(m, a, PartitionSpec(2, epsilon=0.0))
        assert cut_weight(m, out) == 0.0
        assert np.bincount(out).tolist() == [4, 4]

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(4, 24), seed=st.integers(0, 10_000), k=st.integers(2, 4))
    def test_never_increases_cut(self, n, seed, k):
        m = random_model(n, 0.3, seed=seed, positive=True)
        spec = PartitionSpec(k, epsilon=0.2)
        cap = spec.max_part_size(n)
        a = np.arange(n) % k
        np.random.default_rng(seed).shuffle(a)
        out = fm_refine(m, a, spec)
        assert cut_weight(m, out) <= cut_weight(m, a) + 1e-12
        assert np.bincount(out, minlength=k).max() <= cap


class TestPartition:
    def test_k1(self):
        r = partition(path4(), PartitionSpec(1))
        assert r.cut_weight == 0 and np.all(r.assignment == 0)

    def test_grid_bisection(self):
        g = grid_model(4, 4)
        r = partition(g, PartitionSpec(2, epsilon=0.0))
        assert r.cut_weight == 4.0 == brute_force_min_cut(g, PartitionSpec(2, epsilon=0.0)).cut_weight
        assert r.part_sizes.tolist() == [8, 8]

    def test_disjoint_cliques_separated(self):
        r = partition(two_cliques(), PartitionSpec(2, epsilon=0.0))
        assert r.cut_weight == 0.0

    def test_k_exceeds_n(self):
        with pytest.raises(ContractViolation):
            partition(path4(), PartitionSpec(5))

    def test_capacity_too_small(self):
        with pytest.raises(CapacityError):
            partition(random_model(10, seed=1), PartitionSpec(2, capacity=4))

    def test_capacity_override(self):
        m = random_model(20, 0.2, seed=2)
        r = partition(m, PartitionSpec(3, capacity=8))
        assert r.max_part_size == 8 and r.part_sizes.max() <= 8

    def test_deterministic(self):
        m = random_model(40, 0.15, seed=7)
        spec = PartitionSpec(3, seed=11)
        a, b = partition(m, spec), partition(m, spec)
        assert np.array_equal(a.assignment, b.assignment) and a.cut_weight == b.cut_weight

    @pytest.mark.parametrize("k", [2, 3, 4, 7])
    def test_invariants_on_larger_graphs(self, k):
        for s in range(5):
            m = random_model(80, 0.08, seed=s, positive=True)
            r = partition(m, PartitionSpec(k, epsilon=0.05, seed=s))
            assert r.is_feasible
            assert sorted(set(r.assignment.tolist())) == list(range(k))
            assert abs(r.cut_weight - cut_weight(m, r.assignment)) < 1e-9

    def test_quality_on_twelve_node_corpus(self):
        ratios = []
        for s in range(50):
            m = random_model(12, 0.3, seed=s, positive=True)
            spec = PartitionSpec(2, epsilon=0.1)
            h, b = partition(m, spec), brute_force_min_cut(m, spec)
            assert h.is_feasible
            ratios.append(h.cut_weight / b.cut_weight if b.cut_weight > 0 else (1.0 if h.cut_weight == 0 else np.inf))
        ratios = np.array(ratios)
        assert np.sum(ratios <= 1.25) >= 45 and ratios.max() <= 2.0

    def test_weighted_graph_input(self):
        g = WeightedGraph.from_model(grid_model(2, 4))
        r = partition(g, PartitionSpec(2, epsilon=0.0))
        assert r.cut_weight == 2.0


class TestBruteForce:
    def test_disjoint_triangles(self):
        m = IsingModel(6, {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0, (3, 4): 1.0, (4, 5): 1.0, (3, 5): 1.0})
        assert brute_force_min_cut(m, PartitionSpec(2, epsilon=0.0)).cut_weight == 0.0

    def test_k4(self):
        m = IsingModel(4, {(i, j): 1.0 for i in range(4) for j in range(i + 1, 4)})
        assert brute_force_min_cut(m, PartitionSpec(2, epsilon=0.0)).cut_weight == 4.0

    def test_path_lexicographic(self):
        r = brute_force_min_cut(path4(), PartitionSpec(2, epsilon=0.0))
        assert r.cut_weight == 1.0 and r.assignment.tolist() == [0, 0, 1, 1]

    def test_range_guard(self):
        with pytest.raises(CapacityError):
            brute_force_min_cut(path4(), PartitionSpec(3))
        with pytest.raises(CapacityError):
            brute_force_min_cut(IsingModel(17), PartitionSpec(2))
