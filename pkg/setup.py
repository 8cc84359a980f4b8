"""Build script for the optional compiled bit-kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just speeds up the partial-trace
inner loops.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "spintherm.kernels._bitkernels",
                ["src/spintherm/kernels/_bitkernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
