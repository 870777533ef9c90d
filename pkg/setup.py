import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# fp-contract off keeps per-pixel sums bit-identical to the numpy fallback
compile_args = ["-O3", "-ffp-contract=off"]
link_args = []
if os.environ.get("PATCHBLEND_NO_OPENMP") != "1":
    compile_args.append("-fopenmp")
    link_args.append("-fopenmp")

extensions = [
    Extension(
        "patchblend.kernels._ckernels",
        ["src/patchblend/kernels/_ckernels.pyx"],
        include_dirs=[np.get_include()],
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
