"""Build script for the optional compiled kernel backend.

The package is fully functional without the extension (a scipy/numpy
fallback is selected at import time), so any failure to cythonize or
compile downgrades to a pure build instead of aborting the install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "focrb._backend._core",
                ["src/focrb/_backend/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
