import os

import numpy as np
from setuptools import Extension, setup

# -ffp-contract=off keeps the compiled kernel bit-identical to the pure-Python
# reference path (no FMA contraction); do not add -ffast-math.
extensions = [
    Extension(
        "esampler._forcekernel",
        ["src/esampler/_forcekernel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

if os.environ.get("ESAMPLER_NO_EXT"):
    ext_modules = []
else:
    from Cython.Build import cythonize

    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
