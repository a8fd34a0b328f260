import os

import numpy
from setuptools import Extension, setup

# The compiled descent core is optional: set STRUCT_IMITATE_NO_EXT=1 to skip
# building it and run on the pure-NumPy fallback.
extensions = []
if not os.environ.get("STRUCT_IMITATE_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        extensions = cythonize(
            [
                Extension(
                    "struct_imitate._accel._descent",
                    ["src/struct_imitate/_accel/_descent.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=extensions)
