import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

compile_args = ["-O3", "-fno-wrapv", "-ffp-contract=off"]
link_args = []
if os.environ.get("BOXTRANSPORT_NO_OPENMP") != "1":
    compile_args.append("-fopenmp")
    link_args.append("-fopenmp")

extensions = [
    Extension(
        "boxtransport.sim._walk",
        ["src/boxtransport/sim/_walk.pyx"],
        include_dirs=[np.get_include(), "src/boxtransport/sim"],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
