"""COO tensor data model, mixed-radix coordinate keys and contraction specs.

Coordinates are 0-based in memory. A tensor of order 0 (the result of
contracting every mode) has an empty shape and at most one entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Iterator, Sequence

import numpy as np
from numba import njit

from .errors import BoundsError, RangeError

MAX_ORDER = 16
U64_MAX = 2**64 - 1

Shape = tuple[int, ...]
Coordinate = tuple[int, ...]


def check_shape(shape: Iterable[int], allow_scalar: bool = True) -> Shape:
    shape = tuple(int(s) for s in shape)
    if len(shape) > MAX_ORDER:
        raise ValueError(f"order {len(shape)} exceeds the supported maximum of {MAX_ORDER}")
    if not shape and not allow_scalar:
        raise ValueError("shape must have at least one mode")
    for k, length in enumerate(shape):
        if length < 1:
            raise ValueError(f"mode {k} has length {length}; lengths must be >= 1")
    return shape


def key_space(shape: Shape, modes: Sequence[int]) -> int:
    """Number of distinct keys over ``modes``; raises OverflowError past 64 bits."""
    for m in modes:
        if not 0 <= m < len(shape):
            raise ValueError(f"mode {m} is not valid for an order-{len(shape)} tensor")
    size = prod(shape[m] for m in modes)
    if size > U64_MAX:
        raise OverflowError(
            f"length product {size} over modes {tuple(modes)} does not fit in 64 bits"
        )
    return size


def linearize(coord: Sequence[int], shape: Shape, modes: Sequence[int]) -> int:
    """Mixed-radix key of ``coord`` over ``modes``; the first listed mode is most significant.

    >>> linearize((5, 1), (10, 10), (0, 1))
    51
    """
    key_space(shape, modes)
    key = 0
    for m in modes:
        i = int(coord[m])
        if not 0 <= i < shape[m]:
            raise BoundsError(f"index {i} out of range for mode {m} of length {shape[m]}")
        key = key * shape[m] + i
    return key


def delinearize(key: int, shape: Shape, modes: Sequence[int]) -> Coordinate:
    """Inverse of :func:`linearize`; returns indices for ``modes`` in list order."""
    size = key_space(shape, modes)
    key = int(key)
    if not 0 <= key < size:
        raise RangeError(f"key {key} outside [0, {size}) for modes {tuple(modes)}")
    out = []
    for m in reversed(modes):
        key, i = divmod(key, shape[m])
        out.append(i)
    return tuple(reversed(out))


@njit(cache=True, nogil=True)
def _linearize_rows(coords, modes, lengths):
    n = coords.shape[0]
    out = np.empty(n, dtype=np.uint64)
    for r in range(n):
        key = np.uint64(0)
        for p in range(modes.shape[0]):
            key = key * np.uint64(lengths[p]) + np.uint64(coords[r, modes[p]])
        out[r] = key
    return out


@njit(cache=True, nogil=True)
def _delinearize_rows(keys, lengths):
    n = keys.shape[0]
    d = lengths.shape[0]
    out = np.empty((n, d), dtype=np.int64)
    for r in range(n):
        key = keys[r]
        for p in range(d - 1, -1, -1):
            length = np.uint64(lengths[p])
            q = key // length
            out[r, p] = np.int64(key - q * length)
            key = q
    return out


def linearize_many(coords: np.ndarray, shape: Shape, modes: Sequence[int]) -> np.ndarray:
    """Vectorized :func:`linearize` over the rows of an ``(n, order)`` coordinate array."""
    key_space(shape, modes)
    modes_arr = np.asarray(modes, dtype=np.int64)
    lengths = np.asarray([shape[m] for m in modes], dtype=np.int64)
    return _linearize_rows(np.ascontiguousarray(coords, dtype=np.int64), modes_arr, lengths)


def delinearize_many(keys: np.ndarray, lengths: Sequence[int]) -> np.ndarray:
    """Decode uint64 keys into an ``(n, len(lengths))`` index array.

    Keys are assumed to lie inside the key space; callers that accept
    untrusted keys go through :func:`delinearize`.
    """
    lengths_arr = np.asarray(lengths, dtype=np.int64)
    return _delinearize_rows(np.ascontiguousarray(keys, dtype=np.uint64), lengths_arr)


@dataclass(frozen=True, eq=False)
class CooTensor:
    """Sparse tensor in coordinate format.

    ``coords`` is an ``(nnz, order)`` int64 array and ``values`` a float64
    array of length ``nnz``. Instances built through :func:`build_coo` have
    unique coordinates and no explicit zeros; the engines construct results
    directly because they guarantee both properties themselves.
    """

    shape: Shape
    coords: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        coords = np.ascontiguousarray(self.coords, dtype=np.int64)
        if len(self.shape) == 0 or coords.size == 0:
            coords = coords.reshape(values.shape[0] if coords.size == 0 else -1, len(self.shape))
        if coords.shape[0] != values.shape[0]:
            raise ValueError(f"{coords.shape[0]} coordinates but {values.shape[0]} values")
        coords.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "values", values)

    @property
    def order(self) -> int:
        return len(self.shape)

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @property
    def density(self) -> float:
        return self.nnz / prod(self.shape)

    def entries(self) -> Iterator[tuple[Coordinate, float]]:
        for c, v in zip(self.coords.tolist(), self.values.tolist()):
            yield tuple(c), v

    def to_dict(self) -> dict[Coordinate, float]:
        return dict(self.entries())

    def canonical(self) -> CooTensor:
        """Copy with entries in ascending lexicographic coordinate order."""
        order = canonical_order(self.coords)
        return CooTensor(self.shape, self.coords[order], self.values[order])

    def __repr__(self):
        return f"CooTensor(shape={self.shape}, nnz={self.nnz})"


def canonical_order(coords: np.ndarray) -> np.ndarray:
    if coords.shape[1] == 0:
        return np.arange(coords.shape[0])
    return np.lexsort(coords.T[::-1])


def empty(shape: Iterable[int]) -> CooTensor:
    shape = check_shape(shape)
    return CooTensor(shape, np.empty((0, len(shape)), dtype=np.int64), np.empty(0))


def build_coo(shape: Iterable[int], coords, values) -> CooTensor:
    """Validate raw entries, merge duplicate coordinates by summation and drop exact zeros."""
    shape = check_shape(shape)
    order = len(shape)
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    coords = np.asarray(coords, dtype=np.int64)
    if coords.size == 0:
        coords = coords.reshape(values.shape[0], order)
    if coords.ndim != 2 or coords.shape[1] != order:
        raise ValueError(f"coordinates must have shape (n, {order}), got {coords.shape}")
    if coords.shape[0] != values.shape[0]:
        raise ValueError(f"{coords.shape[0]} coordinates but {values.shape[0]} values")

    if coords.shape[0]:
        lo = coords.min(axis=0)
        hi = coords.max(axis=0)
        for k in range(order):
            if lo[k] < 0 or hi[k] >= shape[k]:
                bad = lo[k] if lo[k] < 0 else hi[k]
                raise BoundsError(f"index {bad} out of range for mode {k} of length {shape[k]}")

    if prod(shape) <= U64_MAX:
        codes = linearize_many(coords, shape, range(order))
        uniq, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
    else:
        uniq, first, inverse = np.unique(coords, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    if len(uniq) != coords.shape[0]:
        merged = np.zeros(len(uniq))
        np.add.at(merged, inverse, values)
        coords, values = coords[first], merged

    keep = values != 0.0
    if not keep.all():
        coords, values = coords[keep], values[keep]
    return CooTensor(shape, coords, values)


def from_entries(shape: Iterable[int], entries: Iterable[tuple[Sequence[int], float]]) -> CooTensor:
    """Convenience wrapper around :func:`build_coo` for ``(coordinate, value)`` pairs."""
    shape = check_shape(shape)
    entries = list(entries)
    coords = np.array([list(c) for c, _ in entries], dtype=np.int64).reshape(-1, len(shape))
    values = np.array([v for _, v in entries], dtype=np.float64)
    return build_coo(shape, coords, values)


def from_dense(array) -> CooTensor:
    array = np.asarray(array, dtype=np.float64)
    flat = array.reshape(-1)
    nz = np.flatnonzero(flat)
    if array.ndim == 0:
        return CooTensor((), np.empty((len(nz), 0), dtype=np.int64), flat[nz])
    coords = np.stack(np.unravel_index(nz, array.shape), axis=1)
    return CooTensor(array.shape, coords, flat[nz])


def to_dense(t: CooTensor) -> np.ndarray:
    out = np.zeros(t.shape)
    if t.order == 0:
        if t.nnz:
            out[()] = t.values[0]
        return out
    out[tuple(t.coords.T)] = t.values
    return out


@dataclass(frozen=True)
class ContractionSpec:
    """Paired contracting modes of X and Y plus the derived free modes.

    Position ``p`` of ``cmodes_x`` is contracted with position ``p`` of
    ``cmodes_y``. The output coordinate is X's free indices followed by Y's,
    each in ascending mode order.
    """

    cmodes_x: tuple[int, ...]
    cmodes_y: tuple[int, ...]
    order_x: int
    order_y: int
    fmodes_x: tuple[int, ...] = field(init=False)
    fmodes_y: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        cx = tuple(int(m) for m in self.cmodes_x)
        cy = tuple(int(m) for m in self.cmodes_y)
        object.__setattr__(self, "cmodes_x", cx)
        object.__setattr__(self, "cmodes_y", cy)
        if len(cx) != len(cy):
            raise ValueError(f"{len(cx)} contracting modes for X but {len(cy)} for Y")
        if not cx:
            raise ValueError("at least one pair of contracting modes is required")
        for name, modes, order in (("X", cx, self.order_x), ("Y", cy, self.order_y)):
            if len(set(modes)) != len(modes):
                raise ValueError(f"repeated contracting mode for {name}: {modes}")
            for m in modes:
                if not 0 <= m < order:
                    raise ValueError(f"contracting mode {m} invalid for order-{order} {name}")
        object.__setattr__(self, "fmodes_x", tuple(m for m in range(self.order_x) if m not in cx))
        object.__setattr__(self, "fmodes_y", tuple(m for m in range(self.order_y) if m not in cy))

    @classmethod
    def for_tensors(cls, x: CooTensor, y: CooTensor, cmodes_x, cmodes_y) -> ContractionSpec:
        spec = cls(tuple(cmodes_x), tuple(cmodes_y), x.order, y.order)
        spec.check(x.shape, y.shape)
        return spec

    def check(self, shape_x: Shape, shape_y: Shape) -> None:
        if len(shape_x) != self.order_x or len(shape_y) != self.order_y:
            raise ValueError(
                f"spec is for orders ({self.order_x}, {self.order_y}), "
                f"got ({len(shape_x)}, {len(shape_y)})"
            )
        for mx, my in zip(self.cmodes_x, self.cmodes_y):
            if shape_x[mx] != shape_y[my]:
                raise ValueError(
                    f"contracting length mismatch: X mode {mx} has length {shape_x[mx]}, "
                    f"Y mode {my} has length {shape_y[my]}"
                )

    def output_shape(self, shape_x: Shape, shape_y: Shape) -> Shape:
        return tuple(shape_x[m] for m in self.fmodes_x) + tuple(shape_y[m] for m in self.fmodes_y)

    @property
    def output_order(self) -> int:
        return len(self.fmodes_x) + len(self.fmodes_y)

    def swapped(self) -> ContractionSpec:
        return ContractionSpec(self.cmodes_y, self.cmodes_x, self.order_y, self.order_x)


def first_difference(a: CooTensor, b: CooTensor, atol: float = 1e-12) -> str | None:
    """Describe the first disagreement between two tensors, or None if they match.

    Coordinates must match exactly after canonical sorting; values may differ
    by at most ``atol``.
    """
    if a.shape != b.shape:
        return f"shape {a.shape} != {b.shape}"
    a, b = a.canonical(), b.canonical()
    n = min(a.nnz, b.nnz)
    if a.order:
        rows = np.flatnonzero((a.coords[:n] != b.coords[:n]).any(axis=1))
        if rows.size:
            i = rows[0]
            return f"coordinate {tuple(a.coords[i].tolist())} != {tuple(b.coords[i].tolist())}"
    if a.nnz != b.nnz:
        longer = a if a.nnz > b.nnz else b
        return f"extra entry at {tuple(longer.coords[n].tolist())} (nnz {a.nnz} vs {b.nnz})"
    bad = np.flatnonzero(np.abs(a.values - b.values) > atol)
    if bad.size:
        i = bad[0]
        return (
            f"value at {tuple(a.coords[i].tolist())}: {a.values[i]!r} vs {b.values[i]!r}"
        )
    return None
