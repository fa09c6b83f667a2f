import os

import numpy as np
from setuptools import Extension, setup

# The compiled RK4 core is optional: without Cython the package still
# installs and the pure-Python kernel is used at import time.
try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("QROTOR_NO_EXTENSION"):
    extensions = [
        Extension(
            "qrotor._rk4",
            ["src/qrotor/_rk4.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
