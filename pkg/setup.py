"""Build script for the optional compiled core.

The package works without the extension; pure NumPy fallbacks are selected
at import time when the compiled module is missing.  Building requires
Cython and a C compiler.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    HAVE_CYTHON = True
except ImportError:
    HAVE_CYTHON = False

ext_modules = []
if HAVE_CYTHON:
    ext_modules = cythonize(
        [
            Extension(
                "divkernel._core",
                ["src/divkernel/_core.pyx"],
                # -ffp-contract=off keeps float results identical to the
                # pure NumPy fallback (no fused multiply-add).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
