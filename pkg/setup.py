"""Build script: compiles the hot SGD kernel when a toolchain is available.

The package works without the extension; log2ns.embedding falls back to a
pure numpy kernel at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "log2ns.embedding._hs_sgd",
                ["src/log2ns/embedding/_hs_sgd.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O2"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
