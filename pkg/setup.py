"""Builds the optional compiled hot-loop extension.

The package works without it: compliancekit._kernels falls back to the
pure-Python loops when the extension is missing.
"""
from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
include_dirs = []
try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [Extension(
            "compliancekit._kernels._fastloops",
            ["src/compliancekit/_kernels/_fastloops.pyx"],
            # keep the compiled loops bit-identical to the pure-Python
            # reference: no fused multiply-adds, no sin/cos -> sincos
            # fusion (glibc sincos differs from cos by 1 ulp)
            extra_compile_args=["-ffp-contract=off", "-fno-builtin-sin",
                                "-fno-builtin-cos", "-fno-builtin-sincos"],
        )],
        compiler_directives={"language_level": "3", "boundscheck": False,
                             "wraparound": False, "cdivision": True},
    )
    include_dirs = [numpy.get_include()]
except ImportError:
    pass

setup(ext_modules=ext_modules, include_dirs=include_dirs)
