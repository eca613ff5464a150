import numpy as np
import pytest
from hypothesis import strategies as st

from swiftcontract import ContractionSpec, build_coo


def random_case(rng: np.random.Generator, max_len=8, max_nnz=200, orders=(2, 5)):
    """A random valid (x, y, spec) triple with small shapes."""
    ox = int(rng.integers(orders[0], orders[1] + 1))
    oy = int(rng.integers(orders[0], orders[1] + 1))
    shape_x = [int(v) for v in rng.integers(1, max_len + 1, ox)]
    shape_y = [int(v) for v in rng.integers(1, max_len + 1, oy)]
    nc = int(rng.integers(1, min(ox, oy) + 1))
    cx = [int(v) for v in rng.choice(ox, nc, replace=False)]
    cy = [int(v) for v in rng.choice(oy, nc, replace=False)]
    for a, b in zip(cx, cy):
        shape_y[b] = shape_x[a]
    x = random_coo(rng, shape_x, int(rng.integers(0, max_nnz + 1)))
    y = random_coo(rng, shape_y, int(rng.integers(0, max_nnz + 1)))
    return x, y, ContractionSpec(tuple(cx), tuple(cy), ox, oy)


def random_coo(rng, shape, nnz, positive=True):
    coords = np.stack([rng.integers(0, s, nnz) for s in shape], axis=1) if shape else np.zeros((nnz, 0), int)
    values = rng.uniform(0.1, 1.0, nnz) if positive else rng.normal(size=nnz)
    return build_coo(shape, coords, values)


@st.composite
def coo_tensors(draw, min_order=1, max_order=4, max_len=6, max_nnz=40):
    order = draw(st.integers(min_order, max_order))
    shape = tuple(draw(st.lists(st.integers(1, max_len), min_size=order, max_size=order)))
    n = draw(st.integers(0, max_nnz))
    coords = [[draw(st.integers(0, s - 1)) for s in shape] for _ in range(n)]
    values = draw(st.lists(st.floats(-4, 4, allow_nan=False, allow_subnormal=False), min_size=n, max_size=n))
    return build_coo(shape, np.array(coords, dtype=np.int64).reshape(n, order), values)


@st.composite
def contraction_cases(draw, max_len=6, max_nnz=40):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return random_case(rng, max_len=max_len, max_nnz=max_nnz, orders=(1, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
