import os

import numpy as np
from setuptools import Extension, setup

# KGCONTRAST_NO_EXT=1 installs the pure-Python package only.
ext_modules = []
if not os.environ.get("KGCONTRAST_NO_EXT"):
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "kgcontrast._ext",
            ["src/kgcontrast/_ext.pyx"],
            include_dirs=[np.get_include()],
            # no -ffast-math: kernels must round exactly like the numpy fallback
            extra_compile_args=["-O3", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
