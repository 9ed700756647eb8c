"""Build script for the optional compiled rasterization kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed, not functionality.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the Cython kernel if possible; fall back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler / no Cython
            print(f"WARNING: compiled kernel skipped ({exc}); "
                  "using the pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "using the pure-Python fallback")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        ["src/proxileak/_kernels/_annulus.pyx"],
        language_level=3,
        # keep float results bit-identical to the numpy fallback
        compiler_directives={"boundscheck": False, "wraparound": False,
                             "cdivision": True},
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
