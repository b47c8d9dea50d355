"""Build hook: compiles the optional EM kernel extension when Cython and a C
toolchain are available.  The package works without it; corefmt.align falls
back to the pure-Python kernel at import time."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("COREFMT_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "corefmt.align._kernel_c",
                    ["src/corefmt/align/_kernel_c.pyx"],
                    include_dirs=[numpy.get_include()],
                    # -ffp-contract=off: the compiled kernel must reproduce the
                    # pure-Python kernel bit for bit, so no FMA contraction.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - depends on toolchain
        print("corefmt: skipping compiled kernel (%s); pure-Python kernel will be used" % exc)

setup(ext_modules=ext_modules)
