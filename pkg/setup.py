"""Build script for the optional Cython contour kernel.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/tracksentry/_contour_cy.pyx"],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    import warnings

    warnings.warn(f"Cython unavailable, building without compiled contour kernel: {exc}")
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[np.get_include()])
