"""Build script: compiles the optional closure kernel extension.

The engine works without the extension (a pure-Python kernel is selected
at import time), so any build failure here is non-fatal: set
``MODELFORM_NO_EXT=1`` to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("MODELFORM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/modelform/_closure.pyx"],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
