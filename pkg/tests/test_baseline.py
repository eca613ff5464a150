import numpy as np
import pytest
from hypothesis import given, settings

from swiftcontract import ContractionSpec, contract_baseline, contract_swift, first_difference
from swiftcontract.baseline import ChainTable, build_hty, sort_x
from swiftcontract.tensor import empty, from_dense, from_entries, linearize

from conftest import contraction_cases, random_coo


def test_sort_x_lexicographic_free_modes():
    x = from_entries((3, 5, 2), [((2, 1, 0), 1.0), ((1, 4, 1), 2.0), ((1, 2, 0), 3.0)])
    s = sort_x(x, (0, 1))
    assert s.coords[:, :2].tolist() == [[1, 2], [1, 4], [2, 1]]
    assert sort_x(s, (0, 1)).coords.tolist() == s.coords.tolist()


def test_sort_x_random(rng):
    x = random_coo(rng, (6, 7, 8), 200)
    s = sort_x(x, (2, 0))
    keys = [tuple(c) for c in s.coords[:, [2, 0]].tolist()]
    assert keys == sorted(keys)
    assert s.to_dict() == x.to_dict()


def test_hty_shared_key():
    y = from_entries((10, 10, 4), [((5, 1, 0), 0.5), ((5, 1, 3), 0.25), ((2, 7, 1), 1.0)])
    spec = ContractionSpec((0, 1), (0, 1), 3, 3)
    hty = build_hty(y, spec)
    key = linearize((5, 1), (10, 10), (0, 1))
    assert key == 51
    assert sorted(hty.get(51)) == [(0, 0.5), (3, 0.25)]
    assert hty.get(99) == []


def test_hty_empty():
    hty = build_hty(empty((3, 3)), ContractionSpec((0,), (0,), 2, 2))
    assert len(hty.table) == 0
    assert hty.get(0) == []


def test_chain_table_matches_filter(rng):
    keys = rng.integers(0, 40, 500).astype(np.uint64)
    table = ChainTable(keys, np.arange(500, dtype=np.uint64), rng.random(500), buckets=16)
    for k in range(45):
        got = sorted(a for a, _ in table.get(k))
        assert got == np.flatnonzero(keys == k).tolist()


def test_duplicate_merge_example():
    x = from_entries((3, 5, 3, 7), [((1, 4, 1, 5), 0.3), ((1, 4, 2, 6), 0.3)])
    y = from_entries((3, 7, 3, 4), [((1, 5, 2, 3), 0.4), ((2, 6, 2, 3), 0.3)])
    z, _ = contract_baseline(x, y, ContractionSpec((2, 3), (0, 1), 4, 4))
    assert z.to_dict()[(1, 4, 2, 3)] == pytest.approx(0.21, abs=1e-12)


def test_identity(rng):
    y = random_coo(rng, (7, 4, 3), 40)
    z, _ = contract_baseline(from_dense(np.eye(7)), y, ContractionSpec((1,), (0,), 2, 3))
    assert first_difference(z, y, 0.0) is None


def test_accumulator_grows():
    # one X run fetching 100 distinct outputs forces the chained accumulator to grow
    x = from_entries((1, 1), [((0, 0), 1.0)])
    y = from_dense(np.ones((1, 100)))
    z, report = contract_baseline(x, y, ContractionSpec((1,), (0,), 2, 2), workers=1)
    assert z.nnz == 100
    assert report.growth_events > 0


@settings(max_examples=150, deadline=None)
@given(contraction_cases())
def test_baseline_matches_swift(case):
    x, y, spec = case
    a, _ = contract_baseline(x, y, spec, workers=2)
    b, _ = contract_swift(x, y, spec, workers=2)
    assert first_difference(a, b, 1e-12) is None
