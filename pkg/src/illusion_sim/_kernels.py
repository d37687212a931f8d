"""Numba inner loops shared by the single-chip sampler and the chip-network simulator.

All kernels operate on the symmetric CSR adjacency of an IsingModel
(``indptr``, ``indices``, ``data``) and mutate ``state`` / ``counters`` in
place. Each spin update consumes exactly one draw from stream ``i`` at
counter ``counters[i]``.
"""
import math

import numba
import numpy as np

from .rng import uniform


@numba.njit(cache=True, nogil=True)
def prob_up(field, beta):
    """P(s_i = +1 | rest) = 1 / (1 + exp(-2 beta I_i)), overflow-safe."""
    x = 2.0 * beta * field
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True, nogil=True)
def heat_bath(field, beta, u):
    return np.int8(1) if u < prob_up(field, beta) else np.int8(-1)


@numba.njit(cache=True, nogil=True)
def csr_energy(indptr, indices, data, h, state):
    n = state.size
    pair = 0.0
    lin = 0.0
    for i in range(n):
        si = state[i]
        lin += h[i] * si
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j > i:
                acc += data[k] * state[j]
        pair += si * acc
    return -pair - lin


@numba.njit(cache=True, nogil=True)
def state_index(state):
    idx = 0
    for i in range(state.size):
        if state[i] > 0:
            idx |= 1 << i
    return idx


@numba.njit(cache=True, nogil=True)
def update_range(order, lo, hi, indptr, indices, data, h, state, beta, seed, counters):
    """Heat-bath update of spins ``order[lo:hi]`` in sequence; returns flip count."""
    flips = 0
    for k in range(lo, hi):
        i = order[k]
        field = h[i]
        for p in range(indptr[i], indptr[i + 1]):
            field += data[p] * state[indices[p]]
        u = uniform(seed, np.uint64(i), counters[i])
        counters[i] += np.uint64(1)
        new = heat_bath(field, beta, u)
        if new != state[i]:
            flips += 1
            state[i] = new
    return flips


@numba.njit(cache=True, nogil=True)
def _record(t, burn_in, thinning, state, hist, use_hist, states_out, record_states, rec):
    if t >= burn_in and (t - burn_in) % thinning == 0:
        if use_hist:
            hist[state_index(state)] += 1
        if record_states:
            states_out[rec, :] = state
        return rec + 1
    return rec


@numba.njit(cache=True, nogil=True)
def run_chain(indptr, indices, data, h, order, betas, seed, state, counters,
              burn_in, thinning, hist, use_hist, states_out, record_states, energies):
    """Full single-chip chain. ``order`` is index order (sequential kernel) or
    spins grouped by colour (chromatic kernel); the two are the same loop."""
    n = state.size
    flips = 0
    rec = 0
    for t in range(betas.size):
        flips += update_range(order, 0, n, indptr, indices, data, h, state, betas[t], seed, counters)
        energies[t] = csr_energy(indptr, indices, data, h, state)
        rec = _record(t, burn_in, thinning, state, hist, use_hist, states_out, record_states, rec)
    return flips


@numba.njit(cache=True, nogil=True)
def run_network(indptr, indices, data, h, owner, order, phase_ptr, betas, seed, state, counters,
                burn_in, thinning, hist, use_hist, states_out, record_states, energies,
                tau, delay_phases, ghost_buf, buf_time):
    """Chip-network chain on a logical phase clock.

    A spin reads couplings to spins on its own chip from the live state and
    couplings to remote spins from ``ghost`` (the newest delivered boundary
    snapshot). Exchanges happen after every colour phase when ``tau == 1``,
    otherwise after the last phase of every ``tau``-th sweep; a snapshot sent
    after phase ``T`` is delivered at phase ``T + 1 + delay_phases``.
    Returns ``(flips, exchange_rounds)``.
    """
    n = state.size
    num_phases = phase_ptr.size - 1
    nbuf = buf_time.size
    ghost = state.copy()
    head = 0
    pending = 0
    clock = 0
    flips = 0
    rounds = 0
    rec = 0
    for t in range(betas.size):
        beta = betas[t]
        for p in range(num_phases):
            while pending > 0 and buf_time[head] <= clock:
                ghost[:] = ghost_buf[head]
                head = (head + 1) % nbuf
                pending -= 1
            for k in range(phase_ptr[p], phase_ptr[p + 1]):
                i = order[k]
                ci = owner[i]
                field = h[i]
                for q in range(indptr[i], indptr[i + 1]):
                    j = indices[q]
                    if owner[j] == ci:
                        field += data[q] * state[j]
                    else:
                        field += data[q] * ghost[j]
                u = uniform(seed, np.uint64(i), counters[i])
                counters[i] += np.uint64(1)
                new = heat_bath(field, beta, u)
                if new != state[i]:
                    flips += 1
                    state[i] = new
            if tau == 1 or (p == num_phases - 1 and (t + 1) % tau == 0):
                rounds += 1
                slot = (head + pending) % nbuf
                ghost_buf[slot, :] = state
                buf_time[slot] = clock + 1 + delay_phases
                pending += 1
            clock += 1
        energies[t] = csr_energy(indptr, indices, data, h, state)
        rec = _record(t, burn_in, thinning, state, hist, use_hist, states_out, record_states, rec)
    return flips, rounds
