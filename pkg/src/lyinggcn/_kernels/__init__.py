"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set LYINGGCN_FORCE_PYTHON_KERNELS=1 to force the fallback (used by the
benchmark and the backend-equivalence tests).
"""

import os

from . import _ops_py

if os.environ.get("LYINGGCN_FORCE_PYTHON_KERNELS"):
    _impl = _ops_py
    BACKEND = "python"
else:
    try:
        from . import _ops_cy as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _ops_py
        BACKEND = "python"

csr_matmat = _impl.csr_matmat
scatter_add_weighted = _impl.scatter_add_weighted
gather_rows_weighted = _impl.gather_rows_weighted
