import numpy as np
import pytest

from nsgc.graph import build_graph


def random_symmetric(rng, n, scale=1.0):
    x = rng.standard_normal((n, n)) * scale
    return 0.5 * (x + x.T)


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def with_spectrum(rng, eigvals):
    q = random_orthogonal(rng, len(eigvals))
    s = (q * np.asarray(eigvals)) @ q.T
    return 0.5 * (s + s.T)


def random_graph(rng, n, p=0.4, node_dim=1, edge_dim=0, target=None):
    upper = np.triu(rng.random((n, n)) < p, 1)
    edges = [(int(u), int(v)) for u, v in zip(*np.nonzero(upper))]
    node_feat = rng.standard_normal((n, node_dim)) if node_dim > 1 else np.ones((n, 1))
    edge_feat = rng.standard_normal((len(edges), edge_dim)) if edge_dim else None
    return build_graph(num_nodes=n, edges=edges, node_feat=node_feat,
                       edge_feat=edge_feat, target=target)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def p2():
    return build_graph(num_nodes=2, edges=[(0, 1)], node_feat=[[1.0], [1.0]])


@pytest.fixture
def k3():
    return build_graph(num_nodes=3, edges=[(0, 1), (1, 2), (0, 2)])


# -- acceptance report -----------------------------------------------------

ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
