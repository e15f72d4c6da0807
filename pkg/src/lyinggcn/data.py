"""Datasets: synthetic multipartite generation, canonical JSON IO, and splits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError, ValidationError
from .graph import Graph


@dataclass
class Dataset:
    graph: Graph
    X: np.ndarray  # n x f float64
    y: np.ndarray  # n int64
    n_classes: int
    name: str = "unnamed"
    declared_homophily: float | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        n = self.graph.n_nodes
        if self.X.shape[0] != n or self.y.shape[0] != n:
            raise ValidationError(
                f"feature rows {self.X.shape[0]} / labels {self.y.shape[0]} vs {n} nodes"
            )
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise ValidationError(f"labels must lie in [0, {self.n_classes})")

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


@dataclass
class Trial:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        self.train = np.asarray(self.train, dtype=np.int64)
        self.val = np.asarray(self.val, dtype=np.int64)
        self.test = np.asarray(self.test, dtype=np.int64)

    def masks(self):
        return self.train, self.val, self.test


@dataclass
class SplitSet:
    trials: list[Trial] = field(default_factory=list)

    def __len__(self):
        return len(self.trials)

    def validate(self, n_nodes: int, require_cover: bool = False) -> None:
        for t_idx, trial in enumerate(self.trials):
            seen: set[int] = set()
            for mask_name, mask in zip(("train", "val", "test"), trial.masks()):
                if len(mask) == 0:
                    raise ValidationError(f"trial {t_idx}: empty {mask_name} mask")
                if mask.min() < 0 or mask.max() >= n_nodes:
                    raise ValidationError(f"trial {t_idx}: {mask_name} index out of range")
                as_set = set(mask.tolist())
                if len(as_set) != len(mask):
                    raise ValidationError(f"trial {t_idx}: duplicate index inside {mask_name}")
                if seen & as_set:
                    raise ValidationError(f"trial {t_idx}: masks overlap at {mask_name}")
                seen |= as_set
            if require_cover and len(seen) != n_nodes:
                raise ValidationError(f"trial {t_idx}: masks do not cover all {n_nodes} nodes")


def generate_multipartite(
    k: int,
    n: int,
    avg_degree: float,
    feat_dim: int,
    rng: np.random.Generator,
    name: str | None = None,
) -> Dataset:
    """Random k-partite graph: labels are partitions, features carry no label signal.

    Every node samples neighbours uniformly outside its own partition. Each
    node initiates floor(avg_degree / 2) picks plus a Bernoulli top-up, so
    after symmetrization the realized mean degree lands near avg_degree.
    """
    if k < 2:
        raise ConfigurationError(f"need at least 2 partitions, got {k}")
    if n < k:
        raise ConfigurationError(f"{n} nodes cannot fill {k} partitions")
    if avg_degree < 1:
        raise ConfigurationError(f"average degree must be >= 1, got {avg_degree}")

    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    y = np.repeat(np.arange(k, dtype=np.int64), sizes)
    half = avg_degree / 2.0
    base = int(np.floor(half))
    frac = half - base

    others: list[np.ndarray] = []
    starts = np.cumsum([0] + sizes)
    all_nodes = np.arange(n)
    for part in range(k):
        inside = (all_nodes >= starts[part]) & (all_nodes < starts[part + 1])
        others.append(all_nodes[~inside])
    if any(len(o) < avg_degree for o in others):
        raise ConfigurationError("average degree exceeds the pool of other-partition nodes")

    edges = []
    for v in range(n):
        pool = others[y[v]]
        d_v = base + (1 if rng.random() < frac else 0)
        if d_v == 0:
            continue
        picks = rng.choice(pool, size=d_v, replace=False)
        edges.extend((v, int(w)) for w in picks)
    g = Graph.from_raw_edges(n, edges, warn_duplicates=False)
    X = rng.standard_normal((n, feat_dim))
    return Dataset(
        graph=g,
        X=X,
        y=y,
        n_classes=k,
        name=name or f"multipartite-k{k}",
        declared_homophily=0.0,
    )


def make_random_splits(
    ds: Dataset,
    fractions=(0.6, 0.2, 0.2),
    trials: int = 10,
    rng: np.random.Generator | None = None,
) -> SplitSet:
    """Independent uniform shuffles cut by the given fractions, one per trial."""
    if abs(sum(fractions) - 1.0) > 1e-12:
        raise ConfigurationError(f"fractions must sum to 1, got {fractions}")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = ds.n_nodes
    n_train = int(np.floor(fractions[0] * n))
    n_val = int(np.floor(fractions[1] * n))
    if n_train == 0 or n_val == 0 or n - n_train - n_val == 0:
        raise ConfigurationError(f"fractions {fractions} leave an empty mask for n={n}")
    out = SplitSet()
    for _ in range(trials):
        perm = rng.permutation(n)
        out.trials.append(
            Trial(
                train=np.sort(perm[:n_train]),
                val=np.sort(perm[n_train : n_train + n_val]),
                test=np.sort(perm[n_train + n_val :]),
            )
        )
    out.validate(n, require_cover=True)
    return out


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ParseError(f"{path}: {message}")


def save_canonical(ds: Dataset, splits: SplitSet | None, path) -> None:
    doc = {
        "name": ds.name,
        "n": ds.n_nodes,
        "f": ds.n_features,
        "C": ds.n_classes,
        "edges": ds.graph.edges.tolist(),
        "features": ds.X.tolist(),
        "labels": ds.y.tolist(),
        "splits": [
            {"train": t.train.tolist(), "val": t.val.tolist(), "test": t.test.tolist()}
            for t in (splits.trials if splits else [])
        ],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")))


def load_canonical(path) -> tuple[Dataset, SplitSet | None]:
    """Parse and validate a canonical dataset file; no partial results on failure."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"$: not valid JSON ({exc})") from None

    _expect(isinstance(doc, dict), "$", "expected a JSON object")
    for key, kind in (("name", str), ("n", int), ("f", int), ("C", int)):
        _expect(key in doc, f"$.{key}", "missing required key")
        _expect(isinstance(doc[key], kind), f"$.{key}", f"expected {kind.__name__}")
    for key in ("edges", "features", "labels"):
        _expect(key in doc, f"$.{key}", "missing required key")
        _expect(isinstance(doc[key], list), f"$.{key}", "expected a list")

    n, f, C = doc["n"], doc["f"], doc["C"]
    _expect(n >= 1, "$.n", "need at least one node")
    _expect(len(doc["labels"]) == n, "$.labels", f"expected {n} labels, got {len(doc['labels'])}")
    _expect(
        len(doc["features"]) == n, "$.features", f"expected {n} rows, got {len(doc['features'])}"
    )
    for i, row in enumerate(doc["features"]):
        _expect(
            isinstance(row, list) and len(row) == f,
            f"$.features[{i}]",
            f"expected a list of {f} floats",
        )
    for i, e in enumerate(doc["edges"]):
        _expect(
            isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e),
            f"$.edges[{i}]",
            "expected an [u, v] integer pair",
        )

    labels = np.asarray(doc["labels"], dtype=np.int64)
    _expect(
        bool(len(labels) == 0 or (labels.min() >= 0 and labels.max() < C)),
        "$.labels",
        f"labels must lie in [0, {C})",
    )
    try:
        graph = Graph.from_raw_edges(n, np.asarray(doc["edges"], dtype=np.int64).reshape(-1, 2))
    except ValidationError as exc:
        raise ParseError(f"$.edges: {exc}") from None

    X = np.asarray(doc["features"], dtype=np.float64)
    ds = Dataset(graph=graph, X=X, y=labels, n_classes=C, name=doc["name"])

    splits = None
    raw_splits = doc.get("splits", [])
    _expect(isinstance(raw_splits, list), "$.splits", "expected a list")
    if raw_splits:
        splits = SplitSet()
        for i, s in enumerate(raw_splits):
            _expect(isinstance(s, dict), f"$.splits[{i}]", "expected an object")
            for key in ("train", "val", "test"):
                _expect(
                    key in s and isinstance(s[key], list),
                    f"$.splits[{i}].{key}",
                    "missing index list",
                )
            splits.trials.append(Trial(train=s["train"], val=s["val"], test=s["test"]))
        splits.validate(n)  # raises ValidationError on overlap
    return ds, splits
