"""Build script: compiles the optional Cython propagation kernel.

The package works without the extension (a pure-numpy fallback is selected at
import time), so a failed extension build degrades to a source-only install
instead of aborting.
"""

import sys

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:  # pragma: no cover - build environment issue
        print(f"dressedion: Cython/numpy unavailable ({exc}); "
              "building without the compiled kernel", file=sys.stderr)
        return []
    ext = Extension(
        "dressedion._kernel",
        ["src/dressedion/_kernel.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
