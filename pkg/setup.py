"""Builds the optional compiled energy kernel; the package works without it."""
from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler or Cython: fall back to numpy
            print(f"warning: compiled kernel not built ({exc}); using numpy backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: {ext.name} not built ({exc})")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension("pageflip.physics._ckernel", ["src/pageflip/physics/_ckernel.pyx"],
                    include_dirs=[numpy.get_include()], extra_compile_args=["-O3"])
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
