"""Build script for the optional compiled tridiagonal kernels.

The package works without the extension: ``isoyamabe._kernels`` falls back
to a LAPACK-backed implementation at import time if the compiled module is
missing.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "isoyamabe._kernels._fast",
                sources=["src/isoyamabe/_kernels/_fast.pyx"],
            )
        ],
        language_level="3",
    )

for ext in ext_modules:
    ext.optional = True

setup(ext_modules=ext_modules)
