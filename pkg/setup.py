"""Build script for the optional compiled rollout kernel.

The package is fully functional without the extension (simulate falls back
to the pure-Python kernel, selected at import time); building it just makes
episode rollouts run at C speed.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "occlab._rollout",
                ["src/occlab/_rollout.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
