"""Build script: compiles the optional Cython kernel extension.

The extension is a pure speedup; if Cython, numpy headers or a C compiler
are missing the install proceeds and the package falls back to the numpy
kernels at import time.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"tstmr: building without compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "tstmr._kernels._kernels_cy",
        ["src/tstmr/_kernels/_kernels_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class OptionalBuildExt(build_ext):
    """Make extension compilation failures non-fatal."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"tstmr: skipping compiled kernels ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"tstmr: skipping {ext.name} ({exc})", file=sys.stderr)


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
