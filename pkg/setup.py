import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cohdist._kernels",
                ["src/cohdist/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: install without the compiled kernel; the package
    # falls back to the numpy implementation at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
