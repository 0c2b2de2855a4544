"""Build script: compiles the optional fast-kernel extension when Cython is
available. The package is fully functional without it (pure-Python kernels
are selected at import time), so any build failure here is non-fatal.

Set QDDLAB_NO_EXTENSION=1 to skip the extension build entirely.
"""
import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that downgrades compiler failures to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(f"WARNING: building the qddlab fast kernels failed ({exc}); "
              "falling back to the pure-Python kernels.")


ext_modules = []
cmdclass = {}
if os.environ.get("QDDLAB_NO_EXTENSION") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("qddlab.kernels._fast",
                       ["src/qddlab/kernels/_fast.pyx"],
                       extra_compile_args=["-O2"])],
            compiler_directives={"language_level": "3"},
        )
        cmdclass["build_ext"] = optional_build_ext
    except ImportError:
        print("WARNING: Cython not available; skipping the fast kernels.")

setup(ext_modules=ext_modules, cmdclass=cmdclass)
