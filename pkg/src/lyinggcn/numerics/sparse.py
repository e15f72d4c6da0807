"""Compressed-sparse-row matrices for the propagation operators.

Entries are float64 constants: no gradient ever flows into a sparse matrix.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import DimensionError, ValidationError


class SparseRowMatrix:
    """CSR matrix with int64 offsets/indices and float64 values."""

    __slots__ = ("n_rows", "n_cols", "indptr", "indices", "data", "_t_cache")

    def __init__(self, n_rows, n_cols, indptr, indices, data):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self._t_cache = None
        self._check()

    def _check(self):
        if self.indptr.shape != (self.n_rows + 1,):
            raise ValidationError("indptr length must be n_rows + 1")
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValidationError("offsets must start at 0 and end at nnz")
        if np.any(np.diff(self.indptr) < 0):
            raise ValidationError("row offsets must be monotone non-decreasing")
        if len(self.indices) != len(self.data):
            raise ValidationError("indices and data length mismatch")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.n_cols):
            raise ValidationError("column index out of range")
        for i in range(self.n_rows):
            cols = self.indices[self.indptr[i] : self.indptr[i + 1]]
            if cols.size > 1 and np.any(np.diff(cols) <= 0):
                raise ValidationError(f"column indices in row {i} must be strictly increasing")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.data)

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        """Build from triplets; duplicate (row, col) entries are summed."""
        n_rows, n_cols = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            keep = np.concatenate(([True], (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])))
            group = np.cumsum(keep) - 1
            vals = np.bincount(group, weights=vals, minlength=keep.sum())
            rows, cols = rows[keep], cols[keep]
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(n_rows, n_cols, indptr, cols, vals)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    def to_dense(self):
        out = np.zeros((self.n_rows, self.n_cols))
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out

    def transpose(self):
        rows = np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.indptr))
        return SparseRowMatrix.from_coo(self.indices, rows, self.data, (self.n_cols, self.n_rows))

    def transposed(self):
        """Transpose, cached: the backward pass hits this once per spmm per step."""
        if self._t_cache is None:
            self._t_cache = self.transpose()
        return self._t_cache

    def matmat(self, B):
        """Dense product self @ B."""
        B = np.ascontiguousarray(B, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != self.n_cols:
            raise DimensionError(
                f"cannot multiply sparse {self.shape} by dense {B.shape}"
            )
        return _kernels.csr_matmat(self.indptr, self.indices, self.data, B, self.n_rows)

    def max_abs_asymmetry(self):
        """max |A - A^T| entry; cheap symmetry diagnostic."""
        d = self.to_dense()
        return float(np.abs(d - d.T).max())
