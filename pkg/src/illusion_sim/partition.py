"""Balanced k-way min-cut partitioning of a coupling graph.

The objective is the total ``|J_ij|`` over couplings whose endpoints land on
different parts, a proxy for boundary traffic between chips (sign does not
matter for communication). The pipeline is multilevel: heavy-edge matching
coarsens the graph, greedy graph growing seeds a bisection on the coarsest
level, and Fiduccia-Mattheyses style passes refine it while projecting back.
``k > 2`` uses recursive bisection followed by a k-way refinement pass.
Every tie (matching order, seeds, gains) goes to the lowest vertex index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ContractViolation
from .model import IsingModel

BRUTE_FORCE_MAX_SPINS = 16


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with integer node weights and positive edge weights.

    ``edges`` lists each pair once with ``u < v``; CSR arrays are derived.
    """

    node_weights: np.ndarray
    edges: np.ndarray
    edge_weights: np.ndarray
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)
    data: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.node_weights.size
        e = self.edges.reshape(-1, 2)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        vals = np.concatenate([self.edge_weights, self.edge_weights])
        order = np.lexsort((cols, rows))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", cols[order].astype(np.int64))
        object.__setattr__(self, "data", vals[order].astype(np.float64))

    @classmethod
    def from_model(cls, model: IsingModel) -> "WeightedGraph":
        return cls(
            node_weights=np.ones(model.n, dtype=np.int64),
            edges=np.array(model.edges, dtype=np.int64),
            edge_weights=np.abs(model.weights),
        )

    @property
    def n(self) -> int:
        return self.node_weights.size

    @property
    def total_weight(self) -> int:
        return int(self.node_weights.sum())

    def subgraph(self, nodes: np.ndarray) -> "WeightedGraph":
        """Induced subgraph on ``nodes`` (relabelled ``0..len(nodes)-1``)."""
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        keep = (remap[self.edges[:, 0]] >= 0) & (remap[self.edges[:, 1]] >= 0)
        return WeightedGraph(
            node_weights=self.node_weights[nodes],
            edges=remap[self.edges[keep]],
            edge_weights=self.edge_weights[keep],
        )


def _as_graph(obj) -> WeightedGraph:
    if isinstance(obj, WeightedGraph):
        return obj
    if isinstance(obj, IsingModel):
        return WeightedGraph.from_model(obj)
    raise TypeError(f"expected IsingModel or WeightedGraph, got {type(obj).__name__}")


@dataclass(frozen=True)
class PartitionSpec:
    k: int
    epsilon: float = 0.05
    capacity: int | None = None
    seed: int = 0
    trials: int = 8

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ContractViolation(f"k must be a positive integer, got {self.k}")
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ContractViolation(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if self.capacity is not None and self.capacity < 1:
            raise ContractViolation("capacity override must be >= 1")
        if self.trials < 1:
            raise ContractViolation("trials must be >= 1")

    def max_part_size(self, n: int) -> int:
        """Per-part bound: the capacity override if set, else
        ``floor((1 + epsilon) * ceil(n / k))``."""
        if self.capacity is not None:
            return int(self.capacity)
        base = -(-n // self.k)
        return int(math.floor((1.0 + self.epsilon) * base + 1e-9))


@dataclass(frozen=True)
class PartitionResult:
    assignment: np.ndarray
    cut_weight: float
    part_sizes: np.ndarray
    k: int
    max_part_size: int

    @property
    def is_feasible(self) -> bool:
        return bool(np.all(self.part_sizes <= self.max_part_size))

    def parts(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignment == p) for p in range(self.k)]


def _check_assignment(graph: WeightedGraph, assignment) -> np.ndarray:
    a = np.asarray(assignment)
    if a.shape != (graph.n,):
        raise ContractViolation(f"assignment has shape {a.shape}, expected ({graph.n},)")
    if not np.issubdtype(a.dtype, np.integer):
        raise ContractViolation("assignment must hold integer part ids")
    if np.any(a < 0):
        raise ContractViolation(f"spin {int(np.flatnonzero(a < 0)[0])} is unassigned")
    return a.astype(np.int64)


def cut_weight(model_or_graph, assignment) -> float:
    """Sum of ``|J_ij|`` over couplings whose endpoints sit in different parts."""
    g = _as_graph(model_or_graph)
    a = _check_assignment(g, assignment)
    cut = a[g.edges[:, 0]] != a[g.edges[:, 1]]
    return float(np.abs(g.edge_weights[cut]).sum())


def _result(graph: WeightedGraph, assignment: np.ndarray, k: int, cap: int) -> PartitionResult:
    sizes = np.bincount(assignment, weights=graph.node_weights, minlength=k).astype(np.int64)
    assignment = assignment.astype(np.int64)
    assignment.flags.writeable = False
    return PartitionResult(assignment, cut_weight(graph, assignment), sizes, k, cap)


# -- coarsening -------------------------------------------------------------------

@dataclass(frozen=True)
class Hierarchy:
    """``graphs[0]`` is the input; ``maps[l][v]`` is the id of fine node ``v``
    of level ``l`` in level ``l + 1``."""

    graphs: list[WeightedGraph]
    maps: list[np.ndarray]


def _contract(graph: WeightedGraph, mate: np.ndarray) -> tuple[WeightedGraph, np.ndarray]:
    mapping = np.full(graph.n, -1, dtype=np.int64)
    nxt = 0
    for v in range(graph.n):
        if mapping[v] < 0:
            mapping[v] = nxt
            if mate[v] >= 0:
                mapping[mate[v]] = nxt
            nxt += 1
    node_w = np.bincount(mapping, weights=graph.node_weights, minlength=nxt).astype(np.int64)
    cu = mapping[graph.edges[:, 0]]
    cv = mapping[graph.edges[:, 1]]
    keep = cu != cv
    lo = np.minimum(cu[keep], cv[keep])
    hi = np.maximum(cu[keep], cv[keep])
    keys, inverse = np.unique(lo * nxt + hi, return_inverse=True)
    w = np.bincount(inverse, weights=graph.edge_weights[keep], minlength=keys.size)
    edges = np.stack([keys // nxt, keys % nxt], axis=1) if keys.size else np.zeros((0, 2), np.int64)
    return WeightedGraph(node_w, edges.astype(np.int64), w), mapping


def _heavy_edge_matching(graph: WeightedGraph, max_node_weight: int | None) -> np.ndarray:
    mate = np.full(graph.n, -1, dtype=np.int64)
    order = np.lexsort((graph.edges[:, 1], graph.edges[:, 0], -graph.edge_weights))
    nw = graph.node_weights
    for e in order:
        u, v = graph.edges[e]
        if mate[u] >= 0 or mate[v] >= 0:
            continue
        if max_node_weight is not None and nw[u] + nw[v] > max_node_weight:
            continue
        mate[u], mate[v] = v, u
    return mate


def coarsen(model_or_graph, k: int = 2, floor: int | None = None,
            max_node_weight: int | None = None) -> Hierarchy:
    """Repeated heavy-edge matching until at most ``floor`` nodes remain
    (default ``max(2k, 32)``) or nothing can be matched."""
    graph = _as_graph(model_or_graph)
    floor = max(2 * k, 32) if floor is None else floor
    graphs, maps = [graph], []
    while graph.n > floor:
        mate = _heavy_edge_matching(graph, max_node_weight)
        if not np.any(mate >= 0):
            break
        graph, mapping = _contract(graph, mate)
        graphs.append(graph)
        maps.append(mapping)
    return Hierarchy(graphs, maps)


# -- refinement -------------------------------------------------------------------

def _part_bounds(max_sizes, k: int) -> np.ndarray:
    bounds = np.asarray(max_sizes, dtype=np.int64)
    return np.full(k, int(bounds)) if bounds.ndim == 0 else bounds


def _connectivity(graph: WeightedGraph, a: np.ndarray, k: int) -> np.ndarray:
    conn = np.zeros((graph.n, k))
    rows = np.repeat(np.arange(graph.n), np.diff(graph.indptr))
    np.add.at(conn, (rows, a[graph.indices]), graph.data)
    return conn


def fm_refine(model_or_graph, assignment, spec: PartitionSpec | None = None,
              max_passes: int = 10, max_sizes=None) -> np.ndarray:
    """Pass-based single-vertex move refinement.

    Within a pass every vertex moves at most once, always along the best
    gain (external minus internal weight), including negative gains; the
    pass is then rolled back to its best balanced prefix. Inside a pass a
    part may exceed its bound by one vertex weight, which lets tightly
    balanced bisections trade vertices. Stops after a pass with
    no improvement or after ``max_passes``. Part weight bounds come from
    ``max_sizes`` (scalar or per part) or else from ``spec``.
    """
    graph = _as_graph(model_or_graph)
    a = _check_assignment(graph, assignment).copy()
    if max_sizes is None:
        if spec is None:
            raise ContractViolation("need a PartitionSpec or explicit max_sizes")
        k = spec.k
        bounds = _part_bounds(spec.max_part_size(graph.total_weight), k)
    else:
        bounds = np.asarray(max_sizes, dtype=np.int64)
        k = bounds.size if bounds.ndim else (spec.k if spec is not None else int(a.max()) + 1)
        bounds = _part_bounds(bounds, k)
    if np.any(a >= k):
        raise ContractViolation(f"assignment uses part ids >= k={k}")
    nw = graph.node_weights
    sizes = np.bincount(a, weights=nw, minlength=k).astype(np.int64)
    if np.any(sizes > bounds):
        raise ContractViolation(f"infeasible input assignment: part sizes {sizes.tolist()} exceed {bounds.tolist()}")
    if k == 1 or graph.n == 0:
        return a

    conn = _connectivity(graph, a, k)
    rows = np.arange(graph.n)
    # a pass may overshoot a bound by one vertex weight in between; only
    # prefixes ending feasible are eligible as the rollback point
    slack = int(nw.max())
    for _ in range(max_passes):
        locked = np.zeros(graph.n, dtype=bool)
        moves = []
        gain_sum = 0.0
        best_sum, best_len = 0.0, 0
        for _step in range(graph.n):
            gains = conn - conn[rows, a][:, None]
            fits = (sizes[None, :] + nw[:, None]) <= bounds[None, :] + slack
            allowed = fits & ~locked[:, None]
            allowed[rows, a] = False
            if not allowed.any():
                break
            gains = np.where(allowed, gains, -np.inf)
            flat = int(np.argmax(gains))
            v, dst = divmod(flat, k)
            src = a[v]
            gain_sum += gains[v, dst]
            a[v] = dst
            sizes[src] -= nw[v]
            sizes[dst] += nw[v]
            locked[v] = True
            lo, hi = graph.indptr[v], graph.indptr[v + 1]
            nb, w = graph.indices[lo:hi], graph.data[lo:hi]
            np.subtract.at(conn[:, src], nb, w)
            np.add.at(conn[:, dst], nb, w)
            moves.append((v, src, dst))
            if gain_sum > best_sum + 1e-12 and np.all(sizes <= bounds):
                best_sum, best_len = gain_sum, len(moves)
        for v, src, dst in reversed(moves[best_len:]):
            a[v] = src
            sizes[dst] -= nw[v]
            sizes[src] += nw[v]
            lo, hi = graph.indptr[v], graph.indptr[v + 1]
            nb, w = graph.indices[lo:hi], graph.data[lo:hi]
            np.subtract.at(conn[:, dst], nb, w)
            np.add.at(conn[:, src], nb, w)
        if best_len == 0:
            break
    return a


# -- initial partition + multilevel bisection -------------------------------------

def _grow_bisection(graph: WeightedGraph, seed_vertex: int, target0: float,
                    max0: int, max1: int) -> np.ndarray | None:
    """Greedy graph growing: part 0 starts at ``seed_vertex`` and absorbs the
    vertex most strongly connected to it until it reaches ``target0``."""
    n = graph.n
    nw = graph.node_weights
    a = np.ones(n, dtype=np.int64)
    conn0 = np.zeros(n)
    w0 = 0
    w1 = graph.total_weight

    def absorb(v):
        nonlocal w0, w1
        a[v] = 0
        w0 += nw[v]
        w1 -= nw[v]
        lo, hi = graph.indptr[v], graph.indptr[v + 1]
        np.add.at(conn0, graph.indices[lo:hi], graph.data[lo:hi])

    absorb(seed_vertex)
    while w0 < target0 or w1 > max1:
        fits = (a == 1) & (w0 + nw <= max0)
        if not fits.any():
            break
        score = np.where(fits, conn0, -np.inf)
        best = np.max(score)
        if best <= 0:
            # no frontier: jump to the heaviest remaining vertex
            cand = np.flatnonzero(fits)
            v = int(cand[np.argmax(nw[cand])])
        else:
            v = int(np.argmax(score))
        absorb(v)
    if w0 > max0 or w1 > max1:
        return None
    return a


def _bisect(graph: WeightedGraph, k0: int, k1: int, cap: int, spec: PartitionSpec,
            rng: np.random.Generator) -> np.ndarray:
    total = graph.total_weight
    max0, max1 = cap * k0, cap * k1
    target0 = total * k0 / (k0 + k1)
    bounds = np.array([max0, max1])
    hier = coarsen(graph, k=2, max_node_weight=max(1, min(max0, max1) // 2))
    coarse = hier.graphs[-1]

    heaviest = int(np.argmax(coarse.node_weights))
    seeds = [heaviest]
    others = [int(v) for v in rng.permutation(coarse.n) if v != heaviest]
    seeds += others[: spec.trials - 1]
    best, best_cut = None, math.inf
    for s in seeds:
        a = _grow_bisection(coarse, s, target0, max0, max1)
        if a is None:
            continue
        a = fm_refine(coarse, a, max_sizes=bounds)
        c = cut_weight(coarse, a)
        if c < best_cut - 1e-12:
            best, best_cut = a, c
    if best is None:
        raise CapacityError(f"no feasible bisection with part bounds {max0}/{max1}")

    a = best
    for level in range(len(hier.maps) - 1, -1, -1):
        a = a[hier.maps[level]]
        a = fm_refine(hier.graphs[level], a, max_sizes=bounds)
    return a


def _recursive(graph: WeightedGraph, k: int, cap: int, spec: PartitionSpec,
               rng: np.random.Generator) -> np.ndarray:
    if k == 1:
        return np.zeros(graph.n, dtype=np.int64)
    k0 = k // 2
    k1 = k - k0
    side = _bisect(graph, k0, k1, cap, spec, rng)
    out = np.empty(graph.n, dtype=np.int64)
    for s, (kk, offset) in enumerate(((k0, 0), (k1, k0))):
        nodes = np.flatnonzero(side == s)
        out[nodes] = offset + _recursive(graph.subgraph(nodes), kk, cap, spec, rng)
    return out


def partition(model_or_graph, spec: PartitionSpec) -> PartitionResult:
    """Multilevel recursive-bisection partition; deterministic given ``spec.seed``."""
    graph = _as_graph(model_or_graph)
    n = graph.n
    if spec.k > n:
        raise ContractViolation(f"k={spec.k} exceeds the spin count {n}")
    cap = spec.max_part_size(graph.total_weight)
    if cap * spec.k < graph.total_weight:
        raise CapacityError(f"{spec.k} parts of at most {cap} cannot hold {graph.total_weight} spins")
    if spec.k == 1:
        return _result(graph, np.zeros(n, dtype=np.int64), 1, cap)
    rng = np.random.default_rng(spec.seed)
    a = _recursive(graph, spec.k, cap, spec, rng)
    if spec.k > 2:
        a = fm_refine(graph, a, max_sizes=np.full(spec.k, cap))
    return _result(graph, a, spec.k, cap)


# -- exhaustive oracle ------------------------------------------------------------

def brute_force_min_cut(model_or_graph, spec: PartitionSpec) -> PartitionResult:
    """Optimal balanced bisection by enumerating all ``2**n`` assignments.

    Ties go to the lexicographically smallest assignment vector.
    """
    graph = _as_graph(model_or_graph)
    n = graph.n
    if spec.k != 2 or n > BRUTE_FORCE_MAX_SPINS:
        raise CapacityError(f"brute force handles k == 2 and n <= {BRUTE_FORCE_MAX_SPINS}")
    cap = spec.max_part_size(graph.total_weight)
    masks = np.arange(1 << n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n)) & 1
    size1 = bits @ graph.node_weights
    feasible = (size1 <= cap) & (graph.total_weight - size1 <= cap)
    if not feasible.any():
        raise CapacityError("no feasible bisection")
    cuts = np.zeros(masks.size)
    for (u, v), w in zip(graph.edges, graph.edge_weights):
        cuts += w * (bits[:, u] != bits[:, v])
    cuts[~feasible] = np.inf
    best = cuts.min()
    ties = np.flatnonzero(cuts <= best + 1e-12 * max(1.0, best))
    # lexicographic order on (a_0, a_1, ...) == numeric order with a_0 as top bit
    lex_key = bits[ties] @ (1 << np.arange(n - 1, -1, -1, dtype=np.int64))
    choice = ties[int(np.argmin(lex_key))]
    return _result(graph, bits[choice].astype(np.int64), 2, cap)
