"""Builds the optional compiled scan kernel.

The package works without the extension: stoppred.engine falls back to the
vectorized numpy kernel when stoppred._kernels is missing.
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
                "stoppred._kernels",
                ["src/stoppred/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
