"""Tensor algebra, reverse-mode autodiff, sparse operators, and the eigensolver."""

from .eig import ComplexSpectrum, eig_dense
from .sparse import SparseRowMatrix
from .tensor import (
    ACTIVATIONS,
    Tensor,
    add,
    apply_activation,
    backward,
    concat_cols,
    dropout,
    elementwise_mul,
    gather_rows,
    masked_softmax_cross_entropy,
    matmul,
    row_scale,
    scale,
    spmm,
    tensor_sum,
    weighted_scatter_add,
)

__all__ = [
    "ACTIVATIONS",
    "ComplexSpectrum",
    "SparseRowMatrix",
    "Tensor",
    "add",
    "apply_activation",
    "backward",
    "concat_cols",
    "dropout",
    "eig_dense",
    "elementwise_mul",
    "gather_rows",
    "masked_softmax_cross_entropy",
    "matmul",
    "row_scale",
    "scale",
    "spmm",
    "tensor_sum",
    "weighted_scatter_add",
]
