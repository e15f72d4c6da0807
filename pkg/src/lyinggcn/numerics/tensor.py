"""Define-by-run reverse-mode autodiff over dense 2-D float64 tensors.

The graph is rebuilt on every forward pass: each operation returns a fresh
Tensor holding closures that push gradients into its parents. Only the
operations the models need are implemented.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import ConfigurationError, ContractError, DimensionError, EvaluationError
from .sparse import SparseRowMatrix

ACTIVATIONS = ("tanh", "relu", "elu", "identity")


class Tensor:
    """Dense 2-D float64 array, optionally a node of the autodiff graph."""

    __slots__ = ("values", "grad", "requires_grad", "parents", "_backward_done")

    def __init__(self, values, requires_grad=False, parents=()):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DimensionError(f"tensors are 2-D, got shape {values.shape}")
        self.values = values
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.parents = tuple(parents)
        self._backward_done = False

    @property
    def shape(self):
        return self.values.shape

    def item(self):
        if self.values.size != 1:
            raise ContractError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def detached_copy(self):
        return Tensor(self.values.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return elementwise_mul(self, other)


def _op(values, parents):
    """Result tensor; parents with requires_grad=False are dropped from the tape."""
    live = tuple((p, fn) for p, fn in parents if p.requires_grad)
    return Tensor(values, requires_grad=bool(live), parents=live)


def matmul(A: Tensor, B: Tensor) -> Tensor:
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"matmul shapes incompatible: {A.shape} @ {B.shape}")
    out = A.values @ B.values
    return _op(out, [(A, lambda g, B=B: g @ B.values.T), (B, lambda g, A=A: A.values.T @ g)])


def spmm(S: SparseRowMatrix, H: Tensor) -> Tensor:
    """Dense product S @ H; S is constant, gradient flows into H only."""
    if S.n_cols != H.shape[0]:
        raise DimensionError(f"spmm shapes incompatible: {S.shape} @ {H.shape}")
    out = S.matmat(H.values)

    def into_h(g, S=S):
        return S.transposed().matmat(np.ascontiguousarray(g))

    return _op(out, [(H, into_h)])


def add(A: Tensor, B: Tensor) -> Tensor:
    if A.shape != B.shape:
        raise DimensionError(f"add shapes differ: {A.shape} vs {B.shape}")
    return _op(A.values + B.values, [(A, lambda g: g), (B, lambda g: g)])


def scale(A: Tensor, c: float) -> Tensor:
    c = float(c)
    return _op(c * A.values, [(A, lambda g: c * g)])


def elementwise_mul(A: Tensor, B: Tensor) -> Tensor:
    if A.shape != B.shape:
        raise DimensionError(f"elementwise_mul shapes differ: {A.shape} vs {B.shape}")
    return _op(
        A.values * B.values,
        [(A, lambda g, B=B: g * B.values), (B, lambda g, A=A: g * A.values)],
    )


def apply_activation(kind: str, X: Tensor) -> Tensor:
    if kind == "tanh":
        y = np.tanh(X.values)
        return _op(y, [(X, lambda g, y=y: g * (1.0 - y * y))])
    if kind == "relu":
        pos = X.values > 0
        return _op(np.where(pos, X.values, 0.0), [(X, lambda g, pos=pos: g * pos)])
    if kind == "elu":
        # alpha = 1
        neg = np.expm1(np.minimum(X.values, 0.0))
        y = np.where(X.values > 0, X.values, neg)
        dy = np.where(X.values > 0, 1.0, neg + 1.0)
        return _op(y, [(X, lambda g, dy=dy: g * dy)])
    if kind == "identity":
        return _op(X.values, [(X, lambda g: g)])
    raise ConfigurationError(f"unknown activation kind: {kind!r} (expected one of {ACTIVATIONS})")


def dropout(X: Tensor, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    if not 0.0 <= p < 1.0:
        raise ConfigurationError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return _op(X.values, [(X, lambda g: g)])
    keep = (rng.random(X.shape) >= p) / (1.0 - p)
    return _op(X.values * keep, [(X, lambda g, keep=keep: g * keep)])


def gather_rows(X: Tensor, idx) -> Tensor:
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= X.shape[0]):
        raise DimensionError(f"gather index out of range for {X.shape[0]} rows")
    ones = np.ones(len(idx))

    def into_x(g, n=X.shape[0]):
        return _kernels.scatter_add_weighted(np.ascontiguousarray(g), idx, ones, n)

    return _op(X.values[idx], [(X, into_x)])


def weighted_scatter_add(M: Tensor, idx, weights, n_rows: int) -> Tensor:
    """out[r] = sum over entries e with idx[e] == r of weights[e] * M[e]."""
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if len(idx) != M.shape[0] or len(weights) != M.shape[0]:
        raise DimensionError(
            f"scatter arity mismatch: {len(idx)} indices, {len(weights)} weights, {M.shape[0]} rows"
        )
    out = _kernels.scatter_add_weighted(np.ascontiguousarray(M.values), idx, weights, n_rows)

    def into_m(g):
        return _kernels.gather_rows_weighted(np.ascontiguousarray(g), idx, weights)

    return _op(out, [(M, into_m)])


def row_scale(X: Tensor, diag) -> Tensor:
    """out[i] = diag[i] * X[i] for a constant per-row vector."""
    diag = np.asarray(diag, dtype=np.float64).reshape(-1, 1)
    if diag.shape[0] != X.shape[0]:
        raise DimensionError(f"row_scale diag length {diag.shape[0]} vs {X.shape[0]} rows")
    return _op(diag * X.values, [(X, lambda g: diag * g)])


def slice_rows(X: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start < stop <= X.shape[0]:
        raise DimensionError(f"row slice [{start}:{stop}] invalid for shape {X.shape}")

    def into_x(g):
        out = np.zeros(X.shape)
        out[start:stop] = g
        return out

    return _op(np.ascontiguousarray(X.values[start:stop]), [(X, into_x)])


def concat_cols(A: Tensor, B: Tensor) -> Tensor:
    if A.shape[0] != B.shape[0]:
        raise DimensionError(f"concat_cols row counts differ: {A.shape} vs {B.shape}")
    w = A.shape[1]
    return _op(
        np.hstack([A.values, B.values]),
        [(A, lambda g: np.ascontiguousarray(g[:, :w])), (B, lambda g: np.ascontiguousarray(g[:, w:]))],
    )


def tensor_sum(X: Tensor) -> Tensor:
    return _op(
        np.array([[X.values.sum()]]),
        [(X, lambda g: np.full(X.shape, g.reshape(-1)[0]))],
    )


def masked_softmax_cross_entropy(logits: Tensor, labels, mask) -> Tensor:
    """Mean negative log-softmax-likelihood over the masked nodes."""
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=np.int64)
    n, C = logits.shape
    if mask.size == 0:
        raise EvaluationError("cross entropy over an empty mask is undefined")
    if labels.shape[0] != n:
        raise DimensionError(f"labels length {labels.shape[0]} vs {n} logit rows")
    if labels.min() < 0 or labels.max() >= C:
        raise ContractError(f"labels must lie in [0, {C})")
    sub = logits.values[mask]
    shifted = sub - sub.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    picked = logp[np.arange(len(mask)), labels[mask]]
    loss = -picked.mean()
    probs = np.exp(logp)

    def into_logits(g):
        gs = g.reshape(-1)[0] / len(mask)
        d = probs.copy()
        d[np.arange(len(mask)), labels[mask]] -= 1.0
        full = np.zeros((n, C))
        full[mask] = gs * d
        return full

    return _op(np.array([[loss]]), [(logits, into_logits)])


def backward(loss: Tensor) -> None:
    """Accumulate dloss/dt into t.grad for every requires_grad ancestor t."""
    if loss.values.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._backward_done:
        raise ContractError("backward already ran from this loss; rebuild the forward pass")
    loss._backward_done = True

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    for node in reversed(topo):
        g = grads.get(id(node))
        if g is None:
            continue
        for parent, fn in node.parents:
            contrib = fn(g)
            if contrib is g:  # pass-through ops alias their output grad
                contrib = g.copy()
            acc = grads.get(id(parent))
            if acc is None:
                grads[id(parent)] = contrib
            else:
                acc += contrib
    for node in topo:
        g = grads.get(id(node))
        if g is not None:
            node.grad = g if node.grad is None else node.grad + g
