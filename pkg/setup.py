"""Build script: compiles the Cython kernels when a toolchain is available.

The package works without the extension (a numpy fallback is selected at
import time), so a failed extension build only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "epscalc._kernels",
                ["src/epscalc/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception:
    extensions = []

setup(ext_modules=extensions)
