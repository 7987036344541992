"""Build script for the optional Cython assembly kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only costs performance.  Set
PODNS_SKIP_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("PODNS_SKIP_EXT", "0") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext = Extension(
            "podns._kernels._assembly_cy",
            sources=["src/podns/_kernels/_assembly_cy.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except Exception as exc:  # pragma: no cover - build-env dependent
        print(f"podns: skipping Cython extension build ({exc})")
        ext_modules = []

setup(ext_modules=ext_modules)
