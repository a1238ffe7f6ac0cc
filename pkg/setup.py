"""Build script: compiles the hot-loop kernel extension when Cython and a C
toolchain are available.  The package works without it (numpy fallback picked
at import), so a failed extension build is deliberately non-fatal."""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "zetaladder._zkern",
                ["src/zetaladder/_zkern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # no cython / no compiler: fall back to pure python
    print(f"zetaladder: building without compiled kernel ({exc})")

setup(ext_modules=ext_modules)
