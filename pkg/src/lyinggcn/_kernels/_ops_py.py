"""Pure-numpy fallback for the compiled kernels.

np.add.at keeps the same per-entry accumulation order as the Cython loops,
so both backends agree to the last bit on identical inputs.
"""

import numpy as np


def csr_matmat(indptr, indices, data, B, n_rows):
    """Dense C = S @ B for S in CSR form."""
    C = np.zeros((n_rows, B.shape[1]), dtype=np.float64)
    rows = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(indptr))
    np.add.at(C, rows, data[:, None] * B[indices])
    return C


def scatter_add_weighted(M, idx, w, n_rows):
    """Dense out with out[idx[e], :] += w[e] * M[e, :]."""
    out = np.zeros((n_rows, M.shape[1]), dtype=np.float64)
    np.add.at(out, idx, w[:, None] * M)
    return out


def gather_rows_weighted(X, idx, w):
    """Dense out with out[e, :] = w[e] * X[idx[e], :]."""
    return w[:, None] * X[idx]
