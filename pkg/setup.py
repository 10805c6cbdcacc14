from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "qmmpc._kernels._native",
                ["src/qmmpc/_kernels/_native.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

# The extension is optional: the package falls back to the pure-numpy
# kernels when qmmpc._kernels._native is not importable.
setup(ext_modules=ext_modules)
