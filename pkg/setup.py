"""Builds the optional compiled recurrence kernel.

The package works without it: wavescan.ssm falls back to a numpy
recurrence when the extension is absent (or when WAVESCAN_PURE=1).
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/wavescan/_kernels.pyx"], language_level=3
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
