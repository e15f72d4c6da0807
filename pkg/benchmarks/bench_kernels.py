"""Compare the compiled kernels against the pure-numpy fallback.

Runs the two hot kernels (CSR matmat, weighted scatter-add) and one full
training epoch per backend on a synthetic-protocol-sized problem.

Usage: python benchmarks/bench_kernels.py [--nodes 1600] [--degree 5] [--hidden 20]
"""

import argparse
import time

import numpy as np


def timeit(fn, repeat=20):
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_backend(impl, name, S_parts, B, M, idx, w, n):
    indptr, indices, data = S_parts
    t_csr = timeit(lambda: impl.csr_matmat(indptr, indices, data, B, n))
    t_scatter = timeit(lambda: impl.scatter_add_weighted(M, idx, w, n))
    t_gather = timeit(lambda: impl.gather_rows_weighted(B, idx, w))
    print(f"{name:>8s}:  csr_matmat {1e3 * t_csr:7.3f} ms   "
          f"scatter_add {1e3 * t_scatter:7.3f} ms   gather {1e3 * t_gather:7.3f} ms")
    return t_csr, t_scatter


def bench_epoch(nodes, degree, hidden, feat):
    from lyinggcn import KERNEL_BACKEND
    from lyinggcn.data import generate_multipartite
    from lyinggcn.experiments import Optimizer, TrainSpec
    from lyinggcn.layers import GraphContext, ModelConfig, assemble_model, forward
    from lyinggcn.numerics import tensor as T
    from lyinggcn.numerics.tensor import Tensor

    ds = generate_multipartite(2, nodes, degree, feat, np.random.default_rng(0))
    ctx = GraphContext.from_graph(ds.graph)
    cfg = ModelConfig(kind="lying_gcn", depth=2, hidden=hidden, activation="tanh")
    model = assemble_model(cfg, feat, 2, np.random.default_rng(1))
    opt = Optimizer(model.parameters(), TrainSpec())
    X = Tensor(ds.X)
    mask = np.arange(nodes)

    def epoch():
        logits, _ = forward(model, X, ctx, training=False)
        loss = T.masked_softmax_cross_entropy(logits, ds.y, mask)
        opt.zero_grad()
        T.backward(loss)
        opt.step()

    t = timeit(epoch, repeat=10)
    print(f"{KERNEL_BACKEND:>8s}:  full lying epoch {1e3 * t:7.2f} ms "
          f"({nodes} nodes, {ds.graph.n_edges} edges, d={hidden}, f={feat})")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=1600)
    ap.add_argument("--degree", type=int, default=5)
    ap.add_argument("--hidden", type=int, default=20)
    ap.add_argument("--feat", type=int, default=64)
    args = ap.parse_args()

    from lyinggcn._kernels import _ops_py

    try:
        from lyinggcn._kernels import _ops_cy
    except ImportError:
        _ops_cy = None
        print("compiled kernels unavailable; benchmarking the fallback only")

    rng = np.random.default_rng(0)
    n = args.nodes
    m = args.nodes * args.degree  # directed edge count scale
    # random CSR with ~degree+1 entries per row
    rows = np.repeat(np.arange(n), args.degree + 1)
    cols = rng.integers(0, n, size=len(rows))
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    keep = np.concatenate(([True], (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])))
    rows, cols = rows[keep], cols[keep]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    data = rng.standard_normal(len(cols))
    S_parts = (indptr, cols.astype(np.int64), data)
    B = rng.standard_normal((n, args.hidden))
    M = rng.standard_normal((m, args.hidden))
    idx = rng.integers(0, n, size=m).astype(np.int64)
    w = rng.standard_normal(m)

    print(f"kernel microbenchmarks (n={n}, nnz={len(cols)}, edges={m}, d={args.hidden})")
    py = bench_backend(_ops_py, "python", S_parts, B, M, idx, w, n)
    if _ops_cy is not None:
        cy = bench_backend(_ops_cy, "compiled", S_parts, B, M, idx, w, n)
        print(f"speedup: csr_matmat x{py[0] / cy[0]:.1f}, scatter_add x{py[1] / cy[1]:.1f}")

    print("\nfull-epoch benchmark (active backend):")
    bench_epoch(args.nodes, args.degree, args.hidden, args.feat)
    print("re-run with LYINGGCN_FORCE_PYTHON_KERNELS=1 to time the fallback end to end")


if __name__ == "__main__":
    main()
