import os

# Cap BLAS pools before numpy loads so timed checks run single-threaded.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from inwdt import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile the numba kernels up front so timed tests measure math only.
    _kernels.warm_up()


@pytest.fixture
def rng():
    return np.random.default_rng(0)
