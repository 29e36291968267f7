import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    # -ffp-contract=off keeps the compiled kernels bit-identical to the
    # numpy fallback (no fused multiply-add in the recurrences).
    ext = Extension(
        "symcone._ckern",
        ["src/symcone/_ckern.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext.optional = True  # pure-python fallback is selected at import time
    ext_modules = cythonize([ext], language_level=3)
else:
    ext_modules = []

setup(ext_modules=ext_modules)
