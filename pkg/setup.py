import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "autozigzag._kernels",
    ["src/autozigzag/_kernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    # no fused multiply-add, so scalar kernels match the Python fallback bit for bit
    extra_compile_args=["-O2", "-ffp-contract=off"],
    optional=True,
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": 3}))
