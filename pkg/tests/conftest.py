import numpy as np
import pytest

from lyinggcn.data import generate_multipartite
from lyinggcn.graph import Graph, chain_graph, normalize_adjacency
from lyinggcn.layers import GraphContext


def finite_diff_grad(f, x, eps=1e-5):
    """Central finite differences of a scalar function over an ndarray."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + eps
        fp = f()
        x[idx] = old - eps
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * eps)
        it.iternext()
    return g


def rel_err(a, b, floor=1e-8):
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float((np.abs(a - b) / denom).max())


def random_graph(rng, n_min=2, n_max=30):
    n = int(rng.integers(n_min, n_max + 1))
    p = min(1.0, 2.5 / max(n - 1, 1))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    if not pairs:
        pairs = [(0, n - 1)] if n > 1 else []
    return Graph(n, pairs)


def random_edge_weights(rng, g):
    Z = np.zeros((g.n_nodes, g.n_nodes))
    for u, v in g.edges:
        Z[u, v] = rng.uniform(-1.0, 1.0)
        Z[v, u] = rng.uniform(-1.0, 1.0)
    return Z


@pytest.fixture(scope="session")
def chain3():
    return chain_graph(3)


@pytest.fixture(scope="session")
def chain3_ops(chain3):
    return normalize_adjacency(chain3)


@pytest.fixture(scope="session")
def small_ds():
    """10-node bipartite dataset used by the full-model gradient checks."""
    return generate_multipartite(2, 10, 2, 4, np.random.default_rng(3))


@pytest.fixture(scope="session")
def small_ctx(small_ds):
    return GraphContext.from_graph(small_ds.graph)
