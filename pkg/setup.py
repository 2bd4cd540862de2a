import os

from setuptools import setup

ext_modules = []
if os.environ.get("BOXSCOUT_PURE") != "1":
    from setuptools import Extension

    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "boxscout._kernels._native",
                ["src/boxscout/_kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ]
    )

setup(ext_modules=ext_modules)
