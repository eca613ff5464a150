"""Grouping-based contraction engine with capacity-bounded probing accumulation.

Pipeline:

1. processing: group X by its free modes and Y by its contracting modes;
2. contraction: for every X group, size a linear-probing accumulator from
   the Y run lengths its entries will fetch, then multiply-accumulate;
3. writeback: concatenate per-group slot contents in group order.

Output keys inside an accumulator are linearized over the output shape. All
keys produced by one X group share the same X free-mode prefix, so groups
never need to be merged with each other.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from time import perf_counter
from typing import Iterable, NamedTuple

import numpy as np
from numba import njit

from .errors import CapacityError
from .grouping import (
    GroupedTensor,
    assign_metrics_coords,
    dir_find,
    group_payload,
    mode_arrays,
    row_key,
)
from .hashing import mix64
from .tensor import (
    ContractionSpec,
    CooTensor,
    Shape,
    delinearize_many,
    key_space,
    linearize,
    linearize_many,
)

DEFAULT_WORKERS = 8
MIN_SLOTS = 8
# groups with at most this many outputs are emitted by sorting their claimed slots
SPARSE_EMIT = 16


@dataclass
class StageReport:
    engine: str
    workers: int
    processing_time: float = 0.0
    contraction_time: float = 0.0
    writeback_time: float = 0.0
    total_time: float = 0.0
    nnz_x: int = 0
    nnz_y: int = 0
    nnz_z: int = 0
    groups: int = 0
    max_group_upper_bound: int = 0
    max_load_factor: float = 0.0
    bytes_allocated: int = 0
    growth_events: int = 0
    # baseline only: chain nodes walked whose key did not match the probe
    mismatched_nodes: int = 0

    @property
    def stage_sum(self) -> float:
        return self.processing_time + self.contraction_time + self.writeback_time

    def to_dict(self) -> dict:
        return asdict(self)


def slots_for(n: int) -> int:
    """Accumulator capacity for at most ``n`` distinct keys: floor(1.3 n), at least 8."""
    return max(MIN_SLOTS, (13 * int(n)) // 10)


@njit(cache=True, inline="always")
def home_slot(key, cap):
    # upper 32 mixed bits keep the modulo a 32-bit division for realistic capacities
    return np.int64((mix64(key) >> np.uint64(32)) % np.uint64(cap))


@njit(cache=True, nogil=True, inline="always")
def probe_insert(slot_keys, slot_vals, slot_used, cap, key, val):
    """Add ``val`` under ``key``; 1 if a new slot was claimed, 0 if merged, -1 if full."""
    s = home_slot(key, cap)
    for _ in range(cap):
        if not slot_used[s]:
            slot_used[s] = True
            slot_keys[s] = key
            slot_vals[s] = val
            return 1
        if slot_keys[s] == key:
            slot_vals[s] += val
            return 0
        s += 1
        if s == cap:
            s = 0
    return -1


@njit(cache=True, nogil=True)
def probe_find(slot_keys, slot_used, cap, key):
    s = home_slot(key, cap)
    for _ in range(cap):
        if not slot_used[s]:
            return -1
        if slot_keys[s] == key:
            return s
        s += 1
        if s == cap:
            s = 0
    return -1


@njit(cache=True, nogil=True, inline="always")
def _contract_range(
    start, stop, x_ymetric, x_vals, prefix, y_div, y_fkeys, y_vals,
    slot_keys, slot_vals, slot_used, cap,
):
    occupancy = 0
    for i in range(start, stop):
        g = x_ymetric[i]
        if g < 0:
            continue
        xv = x_vals[i]
        for j in range(y_div[g], y_div[g + 1]):
            r = probe_insert(slot_keys, slot_vals, slot_used, cap, prefix + y_fkeys[j], xv * y_vals[j])
            if r < 0:
                return -1
            occupancy += r
    return occupancy


@njit(cache=True, nogil=True)
def _resolve_runs(x_div, x_ckeys, dir_slots, dir_mask, dir_dense, y_div):
    """Y group of every X entry (-1 if none), plus pair count and slot count per X group."""
    n_groups = x_div.shape[0] - 1
    x_ymetric = np.empty(x_ckeys.shape[0], dtype=np.int64)
    bounds = np.empty(n_groups, dtype=np.int64)
    caps = np.empty(n_groups, dtype=np.int64)
    for g in range(n_groups):
        n = 0
        for i in range(x_div[g], x_div[g + 1]):
            m = dir_find(dir_slots, dir_mask, dir_dense, x_ckeys[i])
            x_ymetric[i] = m
            if m >= 0:
                n += y_div[m + 1] - y_div[m]
        bounds[g] = n
        caps[g] = max(MIN_SLOTS, (13 * n) // 10)
    return x_ymetric, bounds, caps


@njit(cache=True, nogil=True)
def _run_bounds(x_ymetric, x_div, k, y_div):
    """Pairs produced by each X group: summed lengths of the Y runs it hits."""
    # y_len[m + 1] is the run length of Y group m and y_len[0] = 0 covers
    # entries with no run, so the sum needs no branch
    y_len = np.zeros(y_div.shape[0], dtype=np.int64)
    for m in range(y_div.shape[0] - 1):
        y_len[m + 1] = y_div[m + 1] - y_div[m]
    bounds = np.empty(k, dtype=np.int64)
    for g in range(k):
        total = 0
        for j in range(x_div[g], x_div[g + 1]):
            total += y_len[x_ymetric[j] + 1]
        bounds[g] = total
    return bounds


@njit(cache=True, nogil=True)
def _group_x(metrics, k, coords, cmodes, clengths, x_vals, dir_slots, dir_mask, dir_dense, y_div):
    """Counting-sort X by its free-key metric, resolving each entry's Y run on the way.

    Returns (Y group per grouped entry or -1, grouped values, divisions,
    pair count per group).
    """
    n = metrics.shape[0]
    counts = np.zeros(k + 1, dtype=np.int64)
    for i in range(n):
        counts[metrics[i]] += 1
    for g in range(1, k):
        counts[g] += counts[g - 1]
    counts[k] = n
    out_ym = np.empty(n, dtype=np.int64)
    out_v = np.empty(n, dtype=np.float64)
    for i in range(n):
        g = metrics[i]
        counts[g] -= 1
        j = counts[g]
        out_ym[j] = dir_find(dir_slots, dir_mask, dir_dense, row_key(coords, i, cmodes, clengths))
        out_v[j] = x_vals[i]
    # a separate pass in its own function; fused into this loop, or even
    # inlined after it, the per-group sums compile to markedly slower code
    return out_ym, out_v, counts, _run_bounds(out_ym, counts, k, y_div)


def resolve_runs(x_div, x_ckeys, y: GroupedTensor):
    """Python entry to the sizing pass: ``(x_ymetric, pair counts, slot counts)``.

    ``x_ckeys`` are the X entries' contracting keys laid out in the groups
    given by ``x_div``.
    """
    d = y.directory
    return _resolve_runs(
        np.ascontiguousarray(x_div, dtype=np.int64),
        np.ascontiguousarray(x_ckeys, dtype=np.uint64),
        d.slots, d.mask, d.dense, y.divisions,
    )


@njit(cache=True, nogil=True)
def _swift_block(
    g0, g1, x_div, x_ymetric, x_vals, x_gkeys, y_space, y_div, y_fkeys, y_vals, bounds,
    out_keys, out_vals,
):
    """Contract groups [g0, g1) into the block's output buffers.

    Returns (entries written, failing group or -1, highest load factor).
    The probe loop is written out here rather than calling ``probe_insert``;
    keep the two in step.
    """
    max_n = 0
    for g in range(g0, g1):
        if bounds[g] > max_n:
            max_n = bounds[g]
    max_cap = max(MIN_SLOTS, (13 * max_n) // 10)
    slot_keys = np.empty(max_cap, dtype=np.uint64)
    slot_vals = np.empty(max_cap, dtype=np.float64)
    slot_used = np.zeros(max_cap, dtype=np.bool_)
    # claimed slots in claim order, so sparse tables skip the full-table scan
    touched = np.empty(max_cap, dtype=np.int64)

    pos = 0
    max_load = 0.0
    for g in range(g0, g1):
        if bounds[g] == 0:
            continue
        cap = max(MIN_SLOTS, (13 * bounds[g]) // 10)
        prefix = x_gkeys[g] * y_space
        occ = 0
        for i in range(x_div[g], x_div[g + 1]):
            m = x_ymetric[i]
            if m < 0:
                continue
            xv = x_vals[i]
            for j in range(y_div[m], y_div[m + 1]):
                key = prefix + y_fkeys[j]
                s = home_slot(key, cap)
                probes = 0
                while slot_used[s] and slot_keys[s] != key:
                    s += 1
                    if s == cap:
                        s = 0
                    probes += 1
                    if probes == cap:
                        return pos, g, max_load
                if slot_used[s]:
                    slot_vals[s] += xv * y_vals[j]
                else:
                    if occ == cap:
                        return pos, g, max_load
                    slot_used[s] = True
                    slot_keys[s] = key
                    slot_vals[s] = xv * y_vals[j]
                    touched[occ] = s
                    occ += 1
        load = occ / cap
        if load > max_load:
            max_load = load
        # emit in slot order either way
        if occ <= SPARSE_EMIT:
            for a in range(1, occ):
                t = touched[a]
                b = a - 1
                while b >= 0 and touched[b] > t:
                    touched[b + 1] = touched[b]
                    b -= 1
                touched[b + 1] = t
            for a in range(occ):
                s = touched[a]
                out_keys[pos] = slot_keys[s]
                out_vals[pos] = slot_vals[s]
                pos += 1
                slot_used[s] = False
        else:
            for s in range(cap):
                if slot_used[s]:
                    out_keys[pos] = slot_keys[s]
                    out_vals[pos] = slot_vals[s]
                    pos += 1
                    slot_used[s] = False
    return pos, -1, max_load


class ProbeAccumulator:
    """Fixed-capacity linear-probing table summing values per uint64 key.

    The backing buffers are only reallocated by :meth:`reserve` when a larger
    capacity is requested; inserts never grow the table.
    """

    def __init__(self, capacity: int = MIN_SLOTS):
        self._keys = np.empty(0, dtype=np.uint64)
        self._vals = np.empty(0, dtype=np.float64)
        self._used = np.zeros(0, dtype=np.bool_)
        self.capacity = 0
        self.occupancy = 0
        self.reserve(capacity)

    def reserve(self, capacity: int) -> None:
        """Empty the table and set its slot count."""
        capacity = int(capacity)
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if capacity > self._keys.shape[0]:
            self._keys = np.empty(capacity, dtype=np.uint64)
            self._vals = np.empty(capacity, dtype=np.float64)
            self._used = np.zeros(capacity, dtype=np.bool_)
        else:
            self._used[: self.capacity] = False
        self.capacity = capacity
        self.occupancy = 0

    def clear(self) -> None:
        self.reserve(self.capacity)

    def insert(self, key: int, value: float) -> None:
        r = probe_insert(
            self._keys, self._vals, self._used, self.capacity, np.uint64(key), float(value)
        )
        if r < 0:
            raise CapacityError(f"accumulator full at {self.capacity} slots")
        self.occupancy += r

    def get(self, key: int) -> float | None:
        s = probe_find(self._keys, self._used, self.capacity, np.uint64(key))
        return None if s < 0 else float(self._vals[s])

    def items(self) -> tuple[np.ndarray, np.ndarray]:
        """Occupied ``(keys, values)`` in slot order."""
        used = self._used[: self.capacity]
        return self._keys[: self.capacity][used].copy(), self._vals[: self.capacity][used].copy()

    def __len__(self):
        return self.occupancy

    @property
    def nbytes(self) -> int:
        return self._keys.nbytes + self._vals.nbytes + self._used.nbytes


class GroupSlice(NamedTuple):
    """Half-open entry range ``[start, stop)`` of a grouped X tensor."""

    tensor: GroupedTensor
    start: int
    stop: int


def x_group(gx: GroupedTensor, g: int) -> GroupSlice:
    start, stop = gx.group_range(g)
    return GroupSlice(gx, start, stop)


def _slice_lookup(x_group: GroupSlice, y: GroupedTensor, spec: ContractionSpec):
    gx = x_group.tensor
    coords = gx.coords[x_group.start : x_group.stop]
    ckeys = linearize_many(coords, gx.shape, spec.cmodes_x)
    return y.directory.lookup_many(ckeys)


def upper_bound_slots(x_group: GroupSlice, y: GroupedTensor, spec: ContractionSpec) -> int:
    """Slots needed to accumulate one X group without growth.

    Every (x, y) pair fetched can produce at most one new output key, so the
    number of pairs bounds the group's distinct outputs.
    """
    ymetric = _slice_lookup(x_group, y, spec)
    counts = y.counts
    n = int(counts[ymetric[ymetric >= 0]].sum())
    return slots_for(n)


def contract_group(
    x_group: GroupSlice, y: GroupedTensor, spec: ContractionSpec, acc: ProbeAccumulator
) -> ProbeAccumulator:
    gx = x_group.tensor
    if x_group.stop <= x_group.start:
        return acc
    ymetric = _slice_lookup(x_group, y, spec)
    y_fkeys = linearize_many(y.coords, y.shape, spec.fmodes_y)
    y_space = key_space(y.shape, spec.fmodes_y)
    fx = linearize(gx.coords[x_group.start], gx.shape, spec.fmodes_x)
    prefix = np.uint64(fx * y_space)
    vals = np.ascontiguousarray(gx.values[x_group.start : x_group.stop])
    occ = _contract_range(
        0, x_group.stop - x_group.start, ymetric, vals, prefix, y.divisions, y_fkeys, y.values,
        acc._keys, acc._vals, acc._used, acc.capacity,
    )
    if occ < 0:
        raise CapacityError(f"group needs more than {acc.capacity} slots")
    acc.occupancy += occ
    return acc


def writeback(per_group_results: Iterable[tuple[np.ndarray, np.ndarray]], output_shape: Shape) -> CooTensor:
    """Concatenate ``(keys, values)`` snapshots in order and decode keys to coordinates.

    Merged values that came out exactly 0.0 are dropped here.
    """
    parts = list(per_group_results)
    if parts:
        keys = np.concatenate([np.asarray(k, dtype=np.uint64) for k, _ in parts])
        vals = np.concatenate([np.asarray(v, dtype=np.float64) for _, v in parts])
    else:
        keys = np.empty(0, dtype=np.uint64)
        vals = np.empty(0, dtype=np.float64)
    nonzero = vals != 0.0
    if not nonzero.all():
        keys, vals = keys[nonzero], vals[nonzero]
    return CooTensor(output_shape, delinearize_many(keys, output_shape), vals)


@njit(cache=True, nogil=True)
def _emit_blocks(keys, vals, starts, stops, lengths):
    """Writeback straight from the shared block buffer: skip gaps and exact
    zeros, decode keys to coordinates."""
    m = 0
    for b in range(starts.shape[0]):
        for i in range(starts[b], stops[b]):
            if vals[i] != 0.0:
                m += 1
    d = lengths.shape[0]
    coords = np.empty((m, d), dtype=np.int64)
    out_v = np.empty(m, dtype=np.float64)
    r = 0
    for b in range(starts.shape[0]):
        for i in range(starts[b], stops[b]):
            v = vals[i]
            if v == 0.0:
                continue
            key = keys[i]
            for p in range(d - 1, -1, -1):
                length = np.uint64(lengths[p])
                q = key // length
                coords[r, p] = np.int64(key - q * length)
                key = q
            out_v[r] = v
            r += 1
    return coords, out_v


def partition_blocks(divisions: np.ndarray, workers: int) -> list[tuple[int, int]]:
    """Split groups into ``workers`` contiguous blocks of roughly equal entry count."""
    n_groups = divisions.shape[0] - 1
    nnz = int(divisions[-1])
    cuts = [0]
    for w in range(1, workers):
        g = int(np.searchsorted(divisions, nnz * w / workers, side="left"))
        cuts.append(min(max(g, cuts[-1]), n_groups))
    cuts.append(n_groups)
    return [(cuts[w], cuts[w + 1]) for w in range(workers)]


def run_blocks(fn, blocks, workers: int):
    if workers == 1 or len(blocks) == 1:
        return [fn(*b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), blocks))


def contract_swift(
    x: CooTensor, y: CooTensor, spec: ContractionSpec, workers: int = DEFAULT_WORKERS
) -> tuple[CooTensor, StageReport]:
    if workers < 1:
        raise ValueError("workers must be positive")
    t_start = perf_counter()
    spec.check(x.shape, y.shape)
    out_shape = spec.output_shape(x.shape, y.shape)
    key_space(out_shape, range(len(out_shape)))
    y_space = np.uint64(key_space(y.shape, spec.fmodes_y))
    report = StageReport("swift", workers, nnz_x=x.nnz, nnz_y=y.nnz)

    t0 = perf_counter()
    # Y grouped by contracting key, carrying (free key, value) per entry
    y_fkeys, y_vals, y_div, y_dir = group_payload(y, spec.cmodes_y, spec.fmodes_y)
    # X grouped by free key, carrying (Y run, value); Y runs are resolved on the way
    x_metrics, x_dir = assign_metrics_coords(x, spec.fmodes_x)
    cm, cl = mode_arrays(x.shape, spec.cmodes_x)
    x_ymetric, x_vals, x_div, bounds = _group_x(
        x_metrics, len(x_dir), x.coords, cm, cl, x.values,
        y_dir.slots, y_dir.mask, y_dir.dense, y_div,
    )
    t1 = perf_counter()

    blocks = partition_blocks(x_div, workers)
    # one buffer shared by all blocks, each writing its own slice
    offsets = np.zeros(len(blocks) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([bounds[g0:g1].sum() for g0, g1 in blocks])
    out_keys = np.empty(offsets[-1], dtype=np.uint64)
    out_vals = np.empty(offsets[-1], dtype=np.float64)

    def work(w, g0, g1):
        lo, hi = offsets[w], offsets[w + 1]
        return _swift_block(
            g0, g1, x_div, x_ymetric, x_vals, x_dir.reverse, y_space, y_div,
            y_fkeys, y_vals, bounds, out_keys[lo:hi], out_vals[lo:hi],
        )

    results = run_blocks(work, [(w, g0, g1) for w, (g0, g1) in enumerate(blocks)], workers)
    for pos, failed, _ in results:
        if failed >= 0:
            raise CapacityError(f"group {failed} overflowed its {slots_for(bounds[failed])} slots")
    t2 = perf_counter()

    stops = offsets[:-1] + np.array([r[0] for r in results], dtype=np.int64)
    coords, vals = _emit_blocks(
        out_keys, out_vals, offsets[:-1], stops, np.asarray(out_shape, dtype=np.int64)
    )
    z = CooTensor(out_shape, coords, vals)
    t3 = perf_counter()

    report.processing_time = t1 - t0
    report.contraction_time = t2 - t1
    report.writeback_time = t3 - t2
    report.total_time = t3 - t_start
    report.nnz_z = z.nnz
    report.groups = len(x_dir)
    report.max_group_upper_bound = slots_for(bounds.max()) if bounds.size else 0
    report.max_load_factor = max((r[2] for r in results), default=0.0)
    # key, value, used flag and claim-order index per slot
    slot_bytes = sum(25 * slots_for(bounds[g0:g1].max(initial=0)) for g0, g1 in blocks)
    report.bytes_allocated = (
        y_fkeys.nbytes + y_vals.nbytes + y_div.nbytes + y_dir.nbytes
        + x_metrics.nbytes + x_dir.nbytes + x_ymetric.nbytes + x_vals.nbytes + x_div.nbytes
        + bounds.nbytes + slot_bytes
        + out_keys.nbytes + out_vals.nbytes
        + z.coords.nbytes + z.values.nbytes
    )
    return z, report
