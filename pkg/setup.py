from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("editgloss._kernels", ["src/editgloss/_kernels.pyx"])],
        language_level=3,
    )
except ImportError:
    # Pure-Python fallback in editgloss._kernels_py is used at runtime.
    ext_modules = []

setup(ext_modules=ext_modules)
