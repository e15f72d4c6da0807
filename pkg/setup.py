"""Builds the optional compiled kernel extension.

The package works without it (a pure-numpy fallback is selected at import
time), so a failed compile only costs speed, not functionality.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "lyinggcn._kernels._ops_cy",
                ["src/lyinggcn/_kernels/_ops_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    import sys

    print(f"warning: compiled kernels skipped ({exc}); using pure-python fallback", file=sys.stderr)

setup(ext_modules=ext_modules)
