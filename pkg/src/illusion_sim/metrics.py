"""Accuracy and mixing diagnostics against exact oracles and the ideal run."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation
from .model import index_to_state, state_to_index


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ContractViolation(f"histograms live on different supports: {p.shape} vs {q.shape}")
    return p, q


def normalize(hist) -> np.ndarray:
    h = np.asarray(hist, dtype=np.float64)
    total = h.sum()
    if total <= 0:
        raise ContractViolation("cannot normalise an empty histogram")
    return h / total


def tv_distance(p, q) -> float:
    """Total variation distance ``0.5 * sum |p_i - q_i|``."""
    p, q = _pair(p, q)
    return float(0.5 * np.abs(p - q).sum())


def kl_divergence(p, q) -> float:
    """``KL(p || q)`` in nats, with ``0 ln 0 = 0``."""
    p, q = _pair(p, q)
    support = p > 0
    if np.any(q[support] <= 0):
        raise ContractViolation("q vanishes where p has mass; KL is infinite")
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


class AutocorrTime(NamedTuple):
    tau: float
    zero_variance: bool
    window: int


def autocorrelation_time(series, c: float = 5.0) -> AutocorrTime:
    """Integrated autocorrelation time in sweeps.

    ``tau(M) = 1/2 + sum_{t=1..M} rho(t)`` with the window ``M`` chosen as the
    first lag satisfying ``M >= c * tau(M)``. Results below 1/2 are floored
    to 1/2; a constant series returns 1/2 flagged ``zero_variance``.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 100:
        raise ContractViolation("autocorrelation needs a 1-d series of length >= 100")
    if np.ptp(x) == 0.0:
        return AutocorrTime(0.5, True, 0)
    x = x - x.mean()
    n = x.size
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    rho = acov / acov[0]
    taus = 0.5 + np.cumsum(rho[1:])
    lags = np.arange(1, n)
    ok = lags >= c * taus
    m = int(lags[np.argmax(ok)]) if ok.any() else n - 1
    tau = float(taus[m - 1])
    return AutocorrTime(max(tau, 0.5), False, m)


def ground_state_probability(trace, ground_set) -> float:
    """Fraction of recorded post-burn-in states that lie in ``ground_set``.

    ``ground_set`` is a collection of spin vectors (as returned by
    ``ground_states``) or of state indices.
    """
    if trace.num_recorded == 0:
        raise ContractViolation("trace holds no recorded states")
    idx = {int(g) if np.ndim(g) == 0 else state_to_index(g) for g in ground_set}
    if trace.histogram is not None:
        hits = sum(int(trace.histogram[k]) for k in idx if k < trace.histogram.size)
        return hits / int(trace.histogram.sum())
    if trace.states is None:
        raise ContractViolation("trace recorded neither histogram nor states")
    targets = np.array([index_to_state(k, trace.n) for k in idx], dtype=np.int8).reshape(-1, trace.n)
    hits = (trace.states[:, None, :] == targets[None, :, :]).all(axis=2).any(axis=1)
    return float(hits.mean())


@dataclass
class ComparisonReport:
    tv: float | None
    kl: float | None
    autocorrelation_time: float
    zero_variance: bool
    best_energy: float
    ground_state_probability: float | None
    throughput_ratio: float | None
    tv_vs_ideal: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def compare(report, exact=None, ground_set=None, ideal=None, c: float = 5.0) -> ComparisonReport:
    """Fill the comparison block of a run report.

    ``exact`` is an ExactDistribution (or probability vector), ``ideal`` the
    ideal single-chip RunReport; either may be omitted.
    """
    trace = report.trace
    tv = kl = tv_ideal = gsp = ratio = None
    if exact is not None and trace.histogram is not None:
        q = getattr(exact, "probabilities", exact)
        p = trace.empirical()
        tv = tv_distance(p, q)
        kl = kl_divergence(p, q)
    if ideal is not None:
        if trace.histogram is not None and ideal.trace.histogram is not None:
            tv_ideal = tv_distance(trace.empirical(), ideal.trace.empirical())
        if report.wall_time > 0 and ideal.wall_time > 0:
            ratio = (trace.attempts / report.wall_time) / (ideal.trace.attempts / ideal.wall_time)
    if ground_set is not None:
        gsp = ground_state_probability(trace, ground_set)
    series = trace.energies[trace.burn_in:]
    if series.size < 100:
        series = trace.energies
    act = autocorrelation_time(series, c) if series.size >= 100 else AutocorrTime(0.5, False, 0)
    return ComparisonReport(
        tv=tv, kl=kl, autocorrelation_time=act.tau, zero_variance=act.zero_variance,
        best_energy=trace.best_energy, ground_state_probability=gsp,
        throughput_ratio=ratio, tv_vs_ideal=tv_ideal,
    )

