"""Build hook for the optional compiled kernel extension.

The package is fully functional without the extension; diva._kernels falls
back to the pure implementation when the build is skipped or fails.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("diva._kernels._native", ["src/diva/_kernels/_native.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
