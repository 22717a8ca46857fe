import glob
import os

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

eigen = next(
    (p for p in ("/usr/include/eigen3", "/usr/local/include/eigen3") if os.path.isdir(p)),
    None,
)

ext = Pybind11Extension(
    "gridstrength._core",
    sorted(glob.glob("src/*.cpp")) + ["bindings/module.cpp"],
    include_dirs=["include", "vendor"] + ([eigen] if eigen else []),
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
