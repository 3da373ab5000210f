import os

import numpy as np
from setuptools import Extension, setup

# The compiled core is optional: if Cython or a compiler is missing the
# package still installs and runs on the numpy fallback.
ext_modules = []
if os.environ.get("HICLUST_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "hiclust._kernels",
                    ["src/hiclust/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # no fma contraction: results must match the fallback bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
