"""Build script for the optional compiled kernel core.

The package works without the extension (a numpy fallback is selected at
import time); set NSGF_PURE_PYTHON=1 to skip the build entirely.
"""
import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython core if possible, fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler / headers
            print(f"nsgf: skipping compiled kernels ({exc}); numpy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"nsgf: failed to build {ext.name} ({exc}); numpy fallback will be used")


ext_modules = []
cmdclass = {}
if os.environ.get("NSGF_PURE_PYTHON") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext = Extension(
            "nsgf._kernels._core",
            ["src/nsgf/_kernels/_core.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-fopenmp"],
            extra_link_args=["-fopenmp"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
        cmdclass = {"build_ext": OptionalBuildExt}
    except ImportError as exc:
        print(f"nsgf: Cython/numpy unavailable at build time ({exc}); building pure Python")

setup(ext_modules=ext_modules, cmdclass=cmdclass)
