import warnings

import numpy
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext
from Cython.Build import cythonize

# The compiled kernel is a speedup, not a requirement: if the toolchain is
# missing the package falls back to the pure-Python engine at import time.
# -ffp-contract=off keeps the C arithmetic bit-identical to the reference
# engine (no fused multiply-add contraction), and the -fno-builtin-sin/-cos
# pair stops gcc from merging adjacent sin/cos calls into glibc sincos,
# whose rounding can differ from the separate calls by an ulp.


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(f"skipping compiled kernel build: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"skipping compiled kernel {ext.name}: {exc}")


extensions = [
    Extension(
        "evoforage._kernel",
        ["src/evoforage/_kernel.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=[
            "-O3",
            "-ffp-contract=off",
            "-fno-builtin-sin",
            "-fno-builtin-cos",
        ],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3),
    cmdclass={"build_ext": OptionalBuildExt},
)
