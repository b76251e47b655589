import numpy as np
import pytest

from cgwish.graph import hasse_order

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def lower_sizes(g):
    return np.array([len(g.lower_neighbors(i)) for i in g.vertices])


def in_hasse_order(g):
    return g.relabel(hasse_order(g))


def random_spd(m, rng, extra=3):
    A = rng.normal(size=(m, m + extra))
    return A @ A.T / (m + extra)


def random_in_pg(g, rng):
    """A covariance with the graph's zero pattern, built from a random factor
    in a perfect ordering and mapped back."""
    from cgwish.graph import perfect_vertex_order
    from cgwish.linalg import CholFactor, reconstruct

    order = perfect_vertex_order(g)
    gf = g.relabel(order)
    S = reconstruct(CholFactor.random(gf, rng))
    pos = np.asarray(order) - 1
    return S[np.ix_(pos, pos)]
