import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# optional=True: a failed compile falls back to the pure NumPy/SciPy kernels,
# selected at import time in widestencil._backend.
extensions = [
    Extension(
        "widestencil._kernels",
        ["src/widestencil/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
    if cythonize
    else [],
)
