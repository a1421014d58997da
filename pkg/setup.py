import os

import numpy as np
from setuptools import Extension, setup

# Without Cython (or with ROTKICK_NO_EXT=1) the package installs pure-Python
# and rotkick.kernels falls back to numpy at import.
ext_modules = []
if os.environ.get("ROTKICK_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "rotkick._kernels",
                    ["src/rotkick/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
