import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# OBTUSELAB_PURE=1 skips the extension; the package then runs on the Python tracer.
if cythonize is None or os.environ.get("OBTUSELAB_PURE"):
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "obtuselab._kernel",
                ["src/obtuselab/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
