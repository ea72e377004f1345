from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("nisqmap._kernels._ckernels", ["src/nisqmap/_kernels/_ckernels.pyx"])],
        compiler_directives={"language_level": 3, "embedsignature": True},
    )
except ImportError:
    # no Cython: the package falls back to nisqmap._kernels._pykernels
    extensions = []

setup(ext_modules=extensions)
