# Hot kernels shared by the sparse algebra and the per-edge message passing.
# Semantics must stay bit-for-bit aligned with _ops_py (same accumulation order).

import numpy as np

cimport numpy as cnp

cnp.import_array()


def csr_matmat(cnp.int64_t[::1] indptr,
               cnp.int64_t[::1] indices,
               cnp.float64_t[::1] data,
               cnp.float64_t[:, ::1] B,
               Py_ssize_t n_rows):
    """Dense C = S @ B for S in CSR form."""
    cdef Py_ssize_t n_cols = B.shape[1]
    out = np.zeros((n_rows, n_cols), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] C = out
    cdef Py_ssize_t i, k, j
    cdef cnp.int64_t col
    cdef cnp.float64_t v
    for i in range(n_rows):
        for k in range(indptr[i], indptr[i + 1]):
            col = indices[k]
            v = data[k]
            for j in range(n_cols):
                C[i, j] += v * B[col, j]
    return out


def scatter_add_weighted(cnp.float64_t[:, ::1] M,
                         cnp.int64_t[::1] idx,
                         cnp.float64_t[::1] w,
                         Py_ssize_t n_rows):
    """Dense out with out[idx[e], :] += w[e] * M[e, :]."""
    cdef Py_ssize_t n_e = M.shape[0]
    cdef Py_ssize_t n_cols = M.shape[1]
    out = np.zeros((n_rows, n_cols), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] C = out
    cdef Py_ssize_t e, j
    cdef cnp.int64_t row
    cdef cnp.float64_t v
    for e in range(n_e):
        row = idx[e]
        v = w[e]
        for j in range(n_cols):
            C[row, j] += v * M[e, j]
    return out


def gather_rows_weighted(cnp.float64_t[:, ::1] X,
                         cnp.int64_t[::1] idx,
                         cnp.float64_t[::1] w):
    """Dense out with out[e, :] = w[e] * X[idx[e], :] (backward of scatter_add_weighted)."""
    cdef Py_ssize_t n_e = idx.shape[0]
    cdef Py_ssize_t n_cols = X.shape[1]
    out = np.empty((n_e, n_cols), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] C = out
    cdef Py_ssize_t e, j
    cdef cnp.int64_t row
    cdef cnp.float64_t v
    for e in range(n_e):
        row = idx[e]
        v = w[e]
        for j in range(n_cols):
            C[e, j] = v * X[row, j]
    return out
