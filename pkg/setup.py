"""Build script for the optional compiled kernels.

The package works without the extension; csmt.kernels falls back to the
pure-Python implementations when the build is skipped or fails.  Set
CSMT_SKIP_EXT=1 to force a pure-Python install.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Carry on with the pure-Python fallback when compilation fails."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or toolchain missing
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(f"warning: compiled kernels skipped ({exc}); using pure-Python fallback")


def extensions():
    if os.environ.get("CSMT_SKIP_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("csmt.kernels._speed", ["src/csmt/kernels/_speed.pyx"])],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
