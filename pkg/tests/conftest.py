import numpy as np
import pytest

from illusion_sim import IsingModel, random_model


@pytest.fixture
def triangle():
    return IsingModel(3, {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})


@pytest.fixture
def pair():
    return IsingModel(2, {(0, 1): 1.0})


def two_cliques(size=4, bridge=0.0):
    """Two disjoint unit-weight cliques, optionally joined by one edge."""
    c = {}
    for base in (0, size):
        for i in range(size):
            for j in range(i + 1, size):
                c[(base + i, base + j)] = 1.0
    if bridge:
        c[(size - 1, size)] = bridge
    return IsingModel(2 * size, c)


def small_random_models(count, n_range=(3, 12), seed=0):
    rng = np.random.default_rng(seed)
    for s in range(count):
        n = int(rng.integers(*n_range, endpoint=True))
        yield random_model(n, density=float(rng.uniform(0.2, 0.7)), seed=1000 + s,
                           bias_scale=float(rng.uniform(0, 1)))


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(test_acceptance.RESULTS):
        terminalreporter.write_line(test_acceptance.format_line(num))
