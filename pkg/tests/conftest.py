from pathlib import Path

import numpy as np
import pytest

from codes import ShapingSpec, build_code, load_alist
from gf2 import SparseBinMatrix

DATA = Path(__file__).resolve().parent.parent / "data"
EXAMPLE_ALIST = DATA / "example_9_6.alist"

# Rows v1..v4, s1, s2 of the parity block of the 9-bit example code
EXAMPLE_GP = np.array(
    [
        [1, 1, 0],
        [1, 0, 1],
        [1, 1, 0],
        [1, 0, 1],
        [1, 1, 0],
        [0, 1, 1],
    ],
    dtype=np.uint8,
)


def make_random_code(rng: np.random.Generator, n: int, m: int, density: float = 0.35):
    while True:
        dense = (rng.random((m, n)) < density).astype(np.uint8)
        if dense.any():
            return build_code(SparseBinMatrix.from_dense(dense))


@pytest.fixture
def example_h():
    return load_alist(EXAMPLE_ALIST.read_text())


@pytest.fixture
def example_code(example_h):
    return build_code(example_h)


@pytest.fixture
def example_spec():
    return ShapingSpec(positions=(4, 5), target_p0=0.75)


@pytest.fixture
def random_code():
    return make_random_code
