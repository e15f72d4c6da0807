"""Undirected simple graphs and their normalized propagation operators."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, ValidationError
from .numerics.sparse import SparseRowMatrix


class Graph:
    """Undirected simple graph: edges stored once as (u, v) with u < v."""

    __slots__ = ("n_nodes", "edges")

    def __init__(self, n_nodes: int, edges):
        self.n_nodes = int(n_nodes)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.edges = edges

    @classmethod
    def from_raw_edges(cls, n_nodes: int, pairs, warn_duplicates: bool = True) -> "Graph":
        """Symmetrize, deduplicate, and canonicalize an arbitrary edge list."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if len(pairs) and (pairs.min() < 0 or pairs.max() >= n_nodes):
            raise ValidationError(f"edge endpoint out of range for {n_nodes} nodes")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise ValidationError("self-loops are not allowed")
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        canon = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(pairs) else pairs
        if warn_duplicates and len(canon) < len(pairs):
            warnings.warn(
                f"deduplicated {len(pairs) - len(canon)} duplicate/reversed edges",
                stacklevel=2,
            )
        return cls(n_nodes, canon)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for col in (0, 1):
            np.add.at(deg, self.edges[:, col], 1)
        return deg

    def adjacency_dense(self) -> np.ndarray:
        A = np.zeros((self.n_nodes, self.n_nodes))
        if len(self.edges):
            A[self.edges[:, 0], self.edges[:, 1]] = 1.0
            A[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return A

    def neighbor_sets(self):
        nbrs = [set() for _ in range(self.n_nodes)]
        for u, v in self.edges:
            nbrs[u].add(int(v))
            nbrs[v].add(int(u))
        return nbrs


@dataclass
class NormalizedOperators:
    """Augmented propagation operator S~, its Laplacian I - S~, and augmented degrees."""

    S: SparseRowMatrix
    L_sym: SparseRowMatrix
    aug_degrees: np.ndarray
    s_diag: np.ndarray = field(init=False)

    def __post_init__(self):
        # S~_uu = 1 / g~_u: the only diagonal contribution is the added self-loop
        self.s_diag = 1.0 / self.aug_degrees


def normalize_adjacency(g: Graph) -> NormalizedOperators:
    """S~ = D~^(-1/2) (A + I) D~^(-1/2) and L~sym = I - S~ in CSR form."""
    n = g.n_nodes
    deg = g.degrees().astype(np.float64)
    aug = deg + 1.0
    inv_sqrt = 1.0 / np.sqrt(aug)

    rows = [np.arange(n, dtype=np.int64), g.edges[:, 0], g.edges[:, 1]]
    cols = [np.arange(n, dtype=np.int64), g.edges[:, 1], g.edges[:, 0]]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = inv_sqrt[rows] * inv_sqrt[cols]
    S = SparseRowMatrix.from_coo(rows, cols, vals, (n, n))

    L = SparseRowMatrix(n, n, S.indptr.copy(), S.indices.copy(), -S.data)
    for i in range(n):
        lo, hi = L.indptr[i], L.indptr[i + 1]
        on_diag = np.nonzero(L.indices[lo:hi] == i)[0]
        L.data[lo + on_diag[0]] += 1.0
    return NormalizedOperators(S=S, L_sym=L, aug_degrees=aug)


def edge_homophily(g: Graph, labels) -> float:
    """Fraction of edges whose endpoints carry the same label."""
    labels = np.asarray(labels)
    if labels.shape[0] != g.n_nodes:
        raise ValidationError(f"{labels.shape[0]} labels for {g.n_nodes} nodes")
    if g.n_edges == 0:
        raise EvaluationError("edge homophily of a graph with no edges is undefined")
    same = labels[g.edges[:, 0]] == labels[g.edges[:, 1]]
    return float(same.mean())


@dataclass
class GraphReport:
    self_loops: list
    duplicate_edges: list
    out_of_range: list
    connected: bool
    n_components: int

    @property
    def clean(self) -> bool:
        return not (self.self_loops or self.duplicate_edges or self.out_of_range)


def validate_graph(g: Graph) -> GraphReport:
    """Report-only structural audit; nothing is enforced here."""
    edges = g.edges
    self_loops = [tuple(e) for e in edges if e[0] == e[1]]
    out_of_range = [tuple(e) for e in edges if e.min() < 0 or e.max() >= g.n_nodes]

    seen = set()
    duplicates = []
    for u, v in edges:
        key = (min(u, v), max(u, v))
        if key in seen:
            duplicates.append((int(u), int(v)))
        seen.add(key)

    # connectivity over the valid undirected edges
    parent = list(range(g.n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        if (u, v) not in out_of_range and u != v:
            ru, rv = find(int(u)), find(int(v))
            if ru != rv:
                parent[ru] = rv
    n_components = len({find(i) for i in range(g.n_nodes)}) if g.n_nodes else 0
    return GraphReport(
        self_loops=self_loops,
        duplicate_edges=duplicates,
        out_of_range=out_of_range,
        connected=n_components <= 1,
        n_components=n_components,
    )


def chain_graph(n: int = 3) -> Graph:
    """Path graph u_0 - u_1 - ... - u_{n-1}."""
    return Graph(n, [(i, i + 1) for i in range(n - 1)])
