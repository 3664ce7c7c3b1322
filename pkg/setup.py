import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext = Extension(
    "perfadapt._core",
    ["src/perfadapt/_core.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)
# The compiled core is an accelerator only; perfadapt falls back to the
# pure numpy kernels when the build is unavailable.
ext.optional = True

setup(
    ext_modules=cythonize([ext], language_level=3) if cythonize else [],
)
