import os

import numpy as np
from setuptools import Extension, setup

# Set GATS_NO_EXT=1 to install without the compiled kernels (pure-Python fallback only).
ext_modules = []
if not os.environ.get("GATS_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "gats._kernels",
                ["src/gats/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
