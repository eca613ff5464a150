"""Linear-time grouping of tensor entries by a mode key.

Entries are mapped to dense metrics (0, 1, 2, ... in order of first
appearance of their key), then counting-sorted on those metrics. The count
array left behind by the sort doubles as a division-offset table, so the run
of entries for any key can be found with one directory lookup.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .hashing import mix64, next_pow2
from .tensor import CooTensor, Shape, key_space

# A directory has one of two layouts. Sparse key spaces use open addressing
# with (key, metric + 1) pairs stored side by side so that a probe touches one
# cache line. Key spaces no larger than DIRECT_FACTOR times the entry count
# use a dense array indexed by the key itself. Either way a stored 0 means
# "no metric".
DIRECT_FACTOR = 4
DIRECT_MIN = 4096


@njit(cache=True, nogil=True, inline="always")
def row_key(coords, i, modes, lengths):
    """LN key of row ``i`` over ``modes`` (``lengths`` are those modes' lengths)."""
    key = np.uint64(0)
    for p in range(modes.shape[0]):
        key = key * np.uint64(lengths[p]) + np.uint64(coords[i, modes[p]])
    return key


@njit(cache=True, nogil=True)
def _assign_direct(coords, modes, lengths, dense):
    n = coords.shape[0]
    metrics = np.empty(n, dtype=np.uint32)
    reverse = np.empty(n, dtype=np.uint64)
    count = np.uint32(0)
    # branch-free: whether a key is new is close to a coin flip when most
    # keys are distinct, and selects beat the mispredictions
    for i in range(n):
        key = row_key(coords, i, modes, lengths)
        tag = dense[key]
        new = tag == 0
        nxt = count + np.uint32(1)
        dense[key] = nxt if new else tag
        reverse[count] = key
        metrics[i] = count if new else tag - np.uint32(1)
        count = nxt if new else count
    return metrics, reverse, count


@njit(cache=True, nogil=True)
def _assign_hashed(coords, modes, lengths, slots, mask):
    n = coords.shape[0]
    metrics = np.empty(n, dtype=np.uint32)
    reverse = np.empty(n, dtype=np.uint64)
    count = 0
    for i in range(n):
        key = row_key(coords, i, modes, lengths)
        s = mix64(key) & mask
        while True:
            tag = slots[s, 1]
            if tag == 0:
                slots[s, 0] = key
                slots[s, 1] = count + 1
                reverse[count] = key
                metrics[i] = count
                count += 1
                break
            if slots[s, 0] == key:
                metrics[i] = tag - 1
                break
            s = (s + np.uint64(1)) & mask
    return metrics, reverse, count


@njit(cache=True, nogil=True, inline="always")
def dir_find(slots, mask, dense, key):
    """Metric of ``key`` in a directory, or -1 when absent."""
    if dense.shape[0] > 0:
        if key >= dense.shape[0]:
            return np.int64(-1)
        return np.int64(dense[key]) - 1
    s = mix64(key) & mask
    while True:
        tag = slots[s, 1]
        if tag == 0:
            return np.int64(-1)
        if slots[s, 0] == key:
            return np.int64(tag) - 1
        s = (s + np.uint64(1)) & mask


@njit(cache=True, nogil=True)
def _dir_find_many(slots, mask, dense, keys):
    out = np.empty(keys.shape[0], dtype=np.int64)
    for i in range(keys.shape[0]):
        out[i] = dir_find(slots, mask, dense, keys[i])
    return out


@njit(cache=True, nogil=True)
def _counting_sort(metrics, k):
    n = metrics.shape[0]
    # counts[k] stays n so the array becomes the division table in place
    counts = np.zeros(k + 1, dtype=np.int64)
    for i in range(n):
        counts[metrics[i]] += 1
    for g in range(1, k):
        counts[g] += counts[g - 1]
    counts[k] = n
    perm = np.empty(n, dtype=np.int64)
    for i in range(n):
        m = metrics[i]
        counts[m] -= 1
        perm[counts[m]] = i
    return perm, counts


@njit(cache=True, nogil=True)
def _group_scatter(coords, values, metrics, k):
    """Counting sort that moves entries directly instead of building a permutation.

    Same placement as ``_counting_sort``; source rows are read in order.
    """
    n, d = coords.shape
    counts = np.zeros(k + 1, dtype=np.int64)
    for i in range(n):
        counts[metrics[i]] += 1
    for g in range(1, k):
        counts[g] += counts[g - 1]
    counts[k] = n
    out_c = np.empty((n, d), dtype=coords.dtype)
    out_v = np.empty(n, dtype=values.dtype)
    for i in range(n):
        m = metrics[i]
        counts[m] -= 1
        j = counts[m]
        for c in range(d):
            out_c[j, c] = coords[i, c]
        out_v[j] = values[i]
    return out_c, out_v, counts


@njit(cache=True, nogil=True)
def _scatter_key_value(metrics, k, coords, modes, lengths, values):
    """Counting-sort placement of (LN key over ``modes``, value) pairs."""
    n = metrics.shape[0]
    counts = np.zeros(k + 1, dtype=np.int64)
    for i in range(n):
        counts[metrics[i]] += 1
    for g in range(1, k):
        counts[g] += counts[g - 1]
    counts[k] = n
    out_k = np.empty(n, dtype=np.uint64)
    out_v = np.empty(n, dtype=np.float64)
    for i in range(n):
        m = metrics[i]
        counts[m] -= 1
        out_k[counts[m]] = row_key(coords, i, modes, lengths)
        out_v[counts[m]] = values[i]
    return out_k, out_v, counts


@dataclass(frozen=True, eq=False)
class MetricDirectory:
    """Map from 64-bit keys to dense metrics; ``reverse[m]`` is the key given metric ``m``.

    ``dense`` is non-empty only for the direct layout, ``slots`` only for the
    hashed one.
    """

    slots: np.ndarray
    mask: np.uint64
    dense: np.ndarray
    reverse: np.ndarray

    def __len__(self):
        return int(self.reverse.shape[0])

    def lookup(self, key: int) -> int | None:
        m = dir_find(self.slots, self.mask, self.dense, np.uint64(key))
        return None if m < 0 else int(m)

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        """Metric per key, -1 where the key is absent."""
        return _dir_find_many(self.slots, self.mask, self.dense, np.asarray(keys, dtype=np.uint64))

    @property
    def nbytes(self) -> int:
        # reverse is a view of a buffer sized for the worst case
        rev = self.reverse if self.reverse.base is None else self.reverse.base
        return self.slots.nbytes + self.dense.nbytes + rev.nbytes

    @property
    def direct(self) -> bool:
        return self.dense.shape[0] > 0


def _new_directory(n: int, key_space: int | None):
    if key_space is not None and 0 < key_space <= DIRECT_FACTOR * max(n, DIRECT_MIN):
        return np.zeros((0, 2), dtype=np.uint64), np.uint64(0), np.zeros(key_space, dtype=np.uint32)
    capacity = next_pow2(max(8, 2 * n))
    slots = np.zeros((capacity, 2), dtype=np.uint64)
    return slots, np.uint64(capacity - 1), np.zeros(0, dtype=np.uint32)


def _assign(coords, modes, lengths, key_space):
    slots, mask, dense = _new_directory(coords.shape[0], key_space)
    if dense.shape[0] > 0:
        metrics, reverse, count = _assign_direct(coords, modes, lengths, dense)
    else:
        metrics, reverse, count = _assign_hashed(coords, modes, lengths, slots, mask)
    # a view: copying would touch fresh pages for every distinct key
    return metrics, MetricDirectory(slots, mask, dense, reverse[:count])


_ONE_MODE = np.zeros(1, dtype=np.int64)
_UNIT = np.ones(1, dtype=np.int64)


def assign_metrics(keys, key_space: int | None = None) -> tuple[np.ndarray, MetricDirectory]:
    """Give each distinct key a metric in order of first appearance.

    ``key_space``, when known, is an exclusive upper bound on the keys and
    lets small key spaces use the direct layout.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64).reshape(-1, 1)
    return _assign(keys, _ONE_MODE, _UNIT, key_space)


def mode_arrays(shape: Shape, modes: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """``modes`` and their lengths as int64 arrays, for the row-key kernels."""
    modes = tuple(int(m) for m in modes)
    return np.array(modes, dtype=np.int64), np.array([shape[m] for m in modes], dtype=np.int64)


def assign_metrics_coords(t: CooTensor, modes: Sequence[int]) -> tuple[np.ndarray, MetricDirectory]:
    """:func:`assign_metrics` on the LN keys of ``t`` over ``modes``, computed on the fly."""
    m, lengths = mode_arrays(t.shape, modes)
    return _assign(t.coords, m, lengths, key_space(t.shape, modes))


def counting_sort(metrics, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(perm, divisions)``: ``perm[j]`` is the source index placed at ``j``.

    Group ``g`` occupies ``[divisions[g], divisions[g + 1])``. Entries are
    written back-to-front inside each range, so the order within a group is
    not meaningful.
    """
    metrics = np.ascontiguousarray(metrics, dtype=np.uint32)
    return _counting_sort(metrics, int(k))


@dataclass(frozen=True, eq=False)
class GroupedTensor:
    shape: Shape
    modes: tuple[int, ...]
    coords: np.ndarray
    values: np.ndarray
    divisions: np.ndarray
    directory: MetricDirectory

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_groups(self) -> int:
        return len(self.directory)

    @property
    def keys(self) -> np.ndarray:
        """Group keys in group (first-appearance) order."""
        return self.directory.reverse

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.divisions)

    def group_range(self, g: int) -> tuple[int, int]:
        return int(self.divisions[g]), int(self.divisions[g + 1])

    def run_lookup(self, key: int) -> tuple[int, int] | None:
        g = self.directory.lookup(key)
        return None if g is None else self.group_range(g)

    def to_coo(self) -> CooTensor:
        return CooTensor(self.shape, self.coords, self.values)

    @property
    def nbytes(self) -> int:
        return (
            self.coords.nbytes + self.values.nbytes + self.divisions.nbytes + self.directory.nbytes
        )


def group_tensor(t: CooTensor, modes: Sequence[int]) -> GroupedTensor:
    """Arrange entries of ``t`` so that equal keys over ``modes`` are contiguous."""
    modes = tuple(int(m) for m in modes)
    metrics, directory = assign_metrics_coords(t, modes)
    coords, values, divisions = _group_scatter(t.coords, t.values, metrics, len(directory))
    return GroupedTensor(t.shape, modes, coords, values, divisions, directory)


def group_payload(t: CooTensor, modes: Sequence[int], payload_modes: Sequence[int]):
    """Group ``t`` by ``modes`` carrying only (LN key over ``payload_modes``, value).

    Placement is identical to :func:`group_tensor`. Returns
    ``(payload_keys, values, divisions, directory)``.
    """
    metrics, directory = assign_metrics_coords(t, modes)
    pm, pl = mode_arrays(t.shape, payload_modes)
    keys, values, divisions = _scatter_key_value(metrics, len(directory), t.coords, pm, pl, t.values)
    return keys, values, divisions, directory


def run_lookup(g: GroupedTensor, key: int) -> tuple[int, int] | None:
    return g.run_lookup(key)
