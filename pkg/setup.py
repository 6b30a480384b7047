import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SCHROSPEC_PURE_PYTHON") != "1" and os.path.exists("src/schrospec/_kernels/_core.pyx"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "schrospec._kernels._core",
                    ["src/schrospec/_kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install runs on the pure-NumPy kernel fallback.
        ext_modules = []

setup(ext_modules=ext_modules)
