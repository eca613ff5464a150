import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swiftcontract import (
    BoundsError,
    ContractionSpec,
    CooTensor,
    RangeError,
    SizeError,
    delinearize,
    first_difference,
    from_dense,
    from_entries,
    linearize,
    oracle_contract,
    to_dense,
)
from swiftcontract.tensor import delinearize_many, empty, key_space, linearize_many

from conftest import coo_tensors, random_case, random_coo


def test_linearize_known_keys():
    assert linearize((5, 1), (10, 10), (0, 1)) == 51
    assert linearize((3, 5, 2), (4, 6, 4), (0, 1)) == 23
    assert linearize((0, 0, 0), (4, 6, 4), (0, 1, 2)) == 0


def test_linearize_follows_mode_list_order():
    # modes listed (1, 0) make mode 1 the most significant digit
    assert linearize((3, 5, 2), (4, 6, 4), (1, 0)) == 5 * 4 + 3


def test_delinearize_known_keys():
    assert delinearize(51, (10, 10), (0, 1)) == (5, 1)
    assert delinearize(0, (4, 6, 4), (0, 1, 2)) == (0, 0, 0)


def test_round_trip_all_keys_of_small_shape():
    shape = (3, 4, 5)
    modes = (0, 1, 2)
    seen = set()
    for key in range(60):
        coord = delinearize(key, shape, modes)
        assert linearize(coord, shape, modes) == key
        seen.add(coord)
    assert seen == set(itertools.product(range(3), range(4), range(5)))
    with pytest.raises(RangeError):
        delinearize(60, shape, modes)


def test_vectorised_matches_scalar(rng):
    shape = (7, 3, 9, 4)
    coords = np.stack([rng.integers(0, s, 300) for s in shape], axis=1)
    modes = (2, 0, 3)
    keys = linearize_many(coords, shape, modes)
    assert keys.dtype == np.uint64
    assert keys.tolist() == [linearize(c, shape, modes) for c in coords.tolist()]
    back = delinearize_many(keys, [shape[m] for m in modes])
    np.testing.assert_array_equal(back, coords[:, list(modes)])


def test_linearize_bounds_and_overflow():
    with pytest.raises(BoundsError):
        linearize((10, 0), (10, 10), (0, 1))
    with pytest.raises(OverflowError):
        key_space((2**32, 2**32), (0, 1))
    assert key_space((2**32, 2**31), (0, 1)) == 2**63


def test_build_coo_merges_and_drops():
    t = from_entries((3, 3), [((1, 2), 0.5), ((1, 2), 0.25)])
    assert t.to_dict() == {(1, 2): 0.75}
    assert from_entries((2, 2), [((0, 0), 0.0)]).nnz == 0
    assert from_entries((2, 2), [((0, 0), 1.5), ((0, 0), -1.5)]).nnz == 0
    with pytest.raises(BoundsError):
        from_entries((2, 2), [((2, 0), 1.0)])


def test_density():
    t = from_entries((4, 4), [((0, 0), 1.0), ((1, 3), 2.0), ((3, 2), 3.0)])
    assert t.density == pytest.approx(0.1875)


def test_arrays_are_read_only():
    t = from_entries((2, 2), [((0, 1), 1.0)])
    with pytest.raises(ValueError):
        t.values[0] = 2.0


@given(coo_tensors())
def test_build_coo_unique_nonzero(t):
    keys = {tuple(c) for c in t.coords.tolist()}
    assert len(keys) == t.nnz
    assert np.all(t.values != 0.0)


@given(coo_tensors())
def test_dense_round_trip(t):
    back = from_dense(to_dense(t))
    assert first_difference(back, t, 0.0) is None


def test_spec_derives_free_modes():
    spec = ContractionSpec((1, 2), (0, 1), 5, 4)
    assert spec.fmodes_x == (0, 3, 4)
    assert spec.fmodes_y == (2, 3)
    assert spec.output_order == 5


@pytest.mark.parametrize(
    "cx, cy",
    [((0,), (0, 1)), ((), ()), ((0, 0), (0, 1)), ((3,), (0,))],
)
def test_spec_rejects_bad_modes(cx, cy):
    with pytest.raises(ValueError):
        ContractionSpec(cx, cy, 3, 3)


def test_spec_length_mismatch_names_both_lengths():
    spec = ContractionSpec((1,), (0,), 2, 2)
    with pytest.raises(ValueError, match="length 3.*length 4"):
        spec.check((2, 3), (4, 5))


# X, Y and the expected output below were fixed before the engines existed:
# the output was summed by an explicit loop over both entry lists.
FIXED_X = {(1, 1, 0): 0.55, (0, 1, 1): 0.10, (0, 0, 0): 0.78, (2, 2, 2): 0.34, (2, 1, 2): 0.96}
FIXED_Y = {(1, 0, 0): 0.29, (0, 2, 0): 0.14, (1, 2, 2): 0.75, (0, 1, 0): 0.32, (0, 1, 1): 0.14}
FIXED_Z = {
    (0, 0, 1, 0): 0.2496,
    (0, 0, 1, 1): 0.1092,
    (0, 0, 2, 0): 0.1092,
    (0, 1, 0, 0): 0.029,
    (0, 1, 2, 2): 0.075,
    (1, 1, 1, 0): 0.176,
    (1, 1, 1, 1): 0.077,
    (1, 1, 2, 0): 0.077,
}


def test_oracle_fixed_table():
    x = from_entries((3, 3, 3), FIXED_X.items())
    y = from_entries((3, 3, 3), FIXED_Y.items())
    z = oracle_contract(x, y, ContractionSpec((2,), (0,), 3, 3))
    got = z.to_dict()
    assert set(got) == set(FIXED_Z)
    for k, v in FIXED_Z.items():
        assert got[k] == pytest.approx(v, abs=1e-12)


def nested_loop_contract(x: CooTensor, y: CooTensor, spec: ContractionSpec) -> dict:
    out: dict = {}
    for cx, vx in x.entries():
        for cy, vy in y.entries():
            if all(cx[a] == cy[b] for a, b in zip(spec.cmodes_x, spec.cmodes_y)):
                key = tuple(cx[m] for m in spec.fmodes_x) + tuple(cy[m] for m in spec.fmodes_y)
                out[key] = out.get(key, 0.0) + vx * vy
    return {k: v for k, v in out.items() if v != 0.0}


def test_oracle_matches_nested_loops(rng):
    for _ in range(30):
        shape_x = tuple(int(v) for v in rng.integers(1, 5, 3))
        shape_y = (shape_x[2],) + tuple(int(v) for v in rng.integers(1, 5, 2))
        x = random_coo(rng, shape_x, 8, positive=False)
        y = random_coo(rng, shape_y, 8, positive=False)
        spec = ContractionSpec((2,), (0,), 3, 3)
        want = nested_loop_contract(x, y, spec)
        got = oracle_contract(x, y, spec).to_dict()
        assert set(got) == set(want)
        for k in want:
            assert got[k] == pytest.approx(want[k], abs=1e-12)


def test_oracle_matrix_multiplication(rng):
    a = rng.normal(size=(4, 6)) * (rng.random((4, 6)) < 0.5)
    b = rng.normal(size=(6, 3)) * (rng.random((6, 3)) < 0.5)
    z = oracle_contract(from_dense(a), from_dense(b), ContractionSpec((1,), (0,), 2, 2))
    np.testing.assert_allclose(to_dense(z), a @ b, atol=1e-12)


def test_oracle_empty_operand():
    x = from_entries((3, 4), [((0, 0), 1.0)])
    z = oracle_contract(x, empty((4, 2)), ContractionSpec((1,), (0,), 2, 2))
    assert z.shape == (3, 2) and z.nnz == 0


def test_oracle_full_contraction_is_inner_product(rng):
    x = random_coo(rng, (3, 4, 2), 12, positive=False)
    y = random_coo(rng, (4, 2, 3), 12, positive=False)
    spec = ContractionSpec((0, 1, 2), (2, 0, 1), 3, 3)
    z = oracle_contract(x, y, spec)
    assert z.shape == () and z.order == 0
    flat = np.sum(to_dense(x) * np.transpose(to_dense(y), (2, 0, 1)))
    assert z.nnz == 1
    assert z.values[0] == pytest.approx(flat, abs=1e-12)


def test_oracle_size_limit():
    x = from_entries((100, 100), [((0, 0), 1.0)])
    with pytest.raises(SizeError):
        oracle_contract(x, x, ContractionSpec((1,), (0,), 2, 2), max_dense=5000)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_swap_symmetry(seed):
    rng = np.random.default_rng(seed)
    x, y, spec = random_case(rng, max_len=4, max_nnz=20, orders=(1, 4))
    z = oracle_contract(x, y, spec)
    w = oracle_contract(y, x, spec.swapped())
    perm = list(range(len(spec.fmodes_y), w.order)) + list(range(len(spec.fmodes_y)))
    # w's coordinates are (fY | fX); reorder them to (fX | fY)
    moved = CooTensor(z.shape, w.coords[:, perm] if w.order else w.coords, w.values)
    assert first_difference(z, moved, 1e-12) is None


def test_first_difference_reports_coordinate():
    a = from_entries((3,), [((0,), 1.0), ((2,), 1.0)])
    b = from_entries((3,), [((0,), 1.0), ((1,), 1.0)])
    assert "coordinate" in first_difference(a, b)
    c = from_entries((3,), [((0,), 1.0), ((2,), 1.5)])
    assert "value at (2,)" in first_difference(a, c)
    assert first_difference(a, a) is None
