import os

from setuptools import Extension, setup

# The compiled kernels are an optional speedup: the package falls back to the
# pure NumPy implementations in steinpairs.kernels._pure when the extension is
# absent.  Set STEINPAIRS_NO_EXT=1 to skip building it.
ext_modules = []
if not os.environ.get("STEINPAIRS_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "steinpairs.kernels._ext",
                    ["src/steinpairs/kernels/_ext.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
