"""Sort-and-hash reference engine: comparator sort, chained tables, growable accumulators.

X is comparator-sorted by its free modes, Y is loaded into a chained hash
table keyed by its contracting modes (HtY), and every run of equal X free
indices is accumulated in a chained table that starts small and rehashes
as it fills. Per-worker output lists grow by doubling.
"""

from __future__ import annotations

from dataclasses import dataclass
from time import perf_counter

import numpy as np
from numba import njit

from .hashing import mix64, next_pow2
from .swift import DEFAULT_WORKERS, StageReport, partition_blocks, run_blocks, writeback
from .tensor import ContractionSpec, CooTensor, key_space, linearize_many

ACC_INITIAL_BUCKETS = 16
ACC_INITIAL_NODES = 64


@njit(cache=True, nogil=True)
def _build_chains(keys, heads, mask):
    nxt = np.empty(keys.shape[0], dtype=np.int64)
    for i in range(keys.shape[0]):
        b = mix64(keys[i]) & mask
        nxt[i] = heads[b]
        heads[b] = i
    return nxt


@njit(cache=True, nogil=True)
def _chain_walk(heads, nxt, node_keys, mask, key):
    """Node indices stored under ``key`` (head first) and mismatched nodes walked."""
    found = []
    mismatched = 0
    node = heads[mix64(key) & mask]
    while node >= 0:
        if node_keys[node] == key:
            found.append(node)
        else:
            mismatched += 1
        node = nxt[node]
    return np.array(found, dtype=np.int64), mismatched


class ChainTable:
    """Bucket array of singly linked chains; new nodes are prepended at the head.

    Nodes live in parallel arrays indexed by insertion number, with
    ``next`` holding the index of the following node in the chain (-1 ends
    it). Each node carries a 64-bit ``aux`` payload and a float value.
    """

    def __init__(self, keys, aux=None, values=None, buckets: int | None = None):
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        n = keys.shape[0]
        self.buckets = next_pow2(max(1, n)) if buckets is None else next_pow2(buckets)
        self.mask = np.uint64(self.buckets - 1)
        self.heads = np.full(self.buckets, -1, dtype=np.int64)
        self.keys = keys
        self.aux = np.zeros(n, dtype=np.uint64) if aux is None else np.ascontiguousarray(aux, dtype=np.uint64)
        self.values = np.zeros(n) if values is None else np.ascontiguousarray(values, dtype=np.float64)
        self.next = _build_chains(keys, self.heads, self.mask)

    def __len__(self):
        return int(self.keys.shape[0])

    def find(self, key: int) -> tuple[np.ndarray, int]:
        """Return node indices for ``key`` and the number of other-key nodes walked past."""
        return _chain_walk(self.heads, self.next, self.keys, self.mask, np.uint64(key))

    def get(self, key: int) -> list[tuple[int, float]]:
        nodes, _ = self.find(key)
        return [(int(self.aux[i]), float(self.values[i])) for i in nodes]

    @property
    def nbytes(self) -> int:
        return (
            self.heads.nbytes + self.next.nbytes + self.keys.nbytes
            + self.aux.nbytes + self.values.nbytes
        )


@dataclass(frozen=True, eq=False)
class HtY:
    """Y as a chain table: contracting key -> (free-mode key, value) payloads."""

    table: ChainTable
    free_space: int

    def get(self, ckey: int) -> list[tuple[int, float]]:
        return self.table.get(ckey)


def build_hty(y: CooTensor, spec: ContractionSpec) -> HtY:
    ckeys = linearize_many(y.coords, y.shape, spec.cmodes_y)
    fkeys = linearize_many(y.coords, y.shape, spec.fmodes_y)
    return HtY(ChainTable(ckeys, fkeys, y.values), key_space(y.shape, spec.fmodes_y))


def sort_x(x: CooTensor, fmodes) -> CooTensor:
    """Entries of ``x`` in ascending lexicographic order of their ``fmodes`` indices."""
    order = _sort_order(linearize_many(x.coords, x.shape, fmodes))
    return CooTensor(x.shape, x.coords[order], x.values[order])


def _sort_order(fkeys: np.ndarray) -> np.ndarray:
    # mixed-radix keys compare exactly like the index tuples they encode
    return np.argsort(fkeys, kind="quicksort")


@njit(cache=True, nogil=True)
def _baseline_block(
    r0, r1, run_starts, run_fkeys, x_ckeys, x_vals, y_space,
    heads, nxt, node_keys, node_aux, node_vals, hmask,
):
    """Contract sorted-X runs [r0, r1).

    Returns (out_keys, out_vals, count, growth_events, bytes_allocated,
    mismatched_nodes).
    """
    growth = 0
    nbytes = 0
    mismatched = 0

    acc_heads = np.empty(ACC_INITIAL_BUCKETS, dtype=np.int64)
    pool_cap = ACC_INITIAL_NODES
    p_next = np.empty(pool_cap, dtype=np.int64)
    p_key = np.empty(pool_cap, dtype=np.uint64)
    p_val = np.empty(pool_cap, dtype=np.float64)
    nbytes += acc_heads.nbytes + 24 * pool_cap

    out_cap = max(64, run_starts[r1] - run_starts[r0])
    out_keys = np.empty(out_cap, dtype=np.uint64)
    out_vals = np.empty(out_cap, dtype=np.float64)
    nbytes += 16 * out_cap
    pos = 0

    for r in range(r0, r1):
        nb = ACC_INITIAL_BUCKETS
        amask = np.uint64(nb - 1)
        acc_heads[:nb] = -1
        size = 0
        prefix = run_fkeys[r] * y_space
        for i in range(run_starts[r], run_starts[r + 1]):
            ck = x_ckeys[i]
            xv = x_vals[i]
            node = heads[mix64(ck) & hmask]
            while node >= 0:
                if node_keys[node] != ck:
                    mismatched += 1
                    node = nxt[node]
                    continue
                key = prefix + node_aux[node]
                v = xv * node_vals[node]
                b = mix64(key) & amask
                a = acc_heads[b]
                while a >= 0 and p_key[a] != key:
                    a = p_next[a]
                if a >= 0:
                    p_val[a] += v
                else:
                    if size == pool_cap:
                        pool_cap *= 2
                        n_next = np.empty(pool_cap, dtype=np.int64)
                        n_key = np.empty(pool_cap, dtype=np.uint64)
                        n_val = np.empty(pool_cap, dtype=np.float64)
                        n_next[:size] = p_next[:size]
                        n_key[:size] = p_key[:size]
                        n_val[:size] = p_val[:size]
                        p_next, p_key, p_val = n_next, n_key, n_val
                        nbytes += 24 * pool_cap
                        growth += 1
                    p_key[size] = key
                    p_val[size] = v
                    p_next[size] = acc_heads[b]
                    acc_heads[b] = size
                    size += 1
                    if size > nb:
                        nb *= 2
                        amask = np.uint64(nb - 1)
                        if nb > acc_heads.shape[0]:
                            acc_heads = np.empty(nb, dtype=np.int64)
                            nbytes += acc_heads.nbytes
                        acc_heads[:nb] = -1
                        for a2 in range(size):
                            b2 = mix64(p_key[a2]) & amask
                            p_next[a2] = acc_heads[b2]
                            acc_heads[b2] = a2
                        growth += 1
                node = nxt[node]

        if pos + size > out_cap:
            while pos + size > out_cap:
                out_cap *= 2
            n_keys = np.empty(out_cap, dtype=np.uint64)
            n_vals = np.empty(out_cap, dtype=np.float64)
            n_keys[:pos] = out_keys[:pos]
            n_vals[:pos] = out_vals[:pos]
            out_keys, out_vals = n_keys, n_vals
            nbytes += 16 * out_cap
            growth += 1
        for a in range(size):
            out_keys[pos] = p_key[a]
            out_vals[pos] = p_val[a]
            pos += 1

    return out_keys, out_vals, pos, growth, nbytes, mismatched


def contract_baseline(
    x: CooTensor,
    y: CooTensor,
    spec: ContractionSpec,
    workers: int = DEFAULT_WORKERS,
) -> tuple[CooTensor, StageReport]:
    if workers < 1:
        raise ValueError("workers must be positive")
    t_start = perf_counter()
    spec.check(x.shape, y.shape)
    out_shape = spec.output_shape(x.shape, y.shape)
    key_space(out_shape, range(len(out_shape)))
    y_space = np.uint64(key_space(y.shape, spec.fmodes_y))
    report = StageReport("baseline", workers, nnz_x=x.nnz, nnz_y=y.nnz)

    t0 = perf_counter()
    fkeys = linearize_many(x.coords, x.shape, spec.fmodes_x)
    order = _sort_order(fkeys)
    fkeys = fkeys[order]
    x_coords = x.coords[order]
    x_vals = np.ascontiguousarray(x.values[order])
    x_ckeys = linearize_many(x_coords, x.shape, spec.cmodes_x)
    if fkeys.shape[0]:
        run_starts = np.concatenate(
            ([0], np.flatnonzero(fkeys[1:] != fkeys[:-1]) + 1, [fkeys.shape[0]])
        ).astype(np.int64)
    else:
        run_starts = np.zeros(1, dtype=np.int64)
    run_fkeys = np.ascontiguousarray(fkeys[run_starts[:-1]])
    hty = build_hty(y, spec)
    t1 = perf_counter()

    table = hty.table
    blocks = partition_blocks(run_starts, workers)

    def work(r0, r1):
        return _baseline_block(
            r0, r1, run_starts, run_fkeys, x_ckeys, x_vals, y_space,
            table.heads, table.next, table.keys, table.aux, table.values, table.mask,
        )

    results = run_blocks(work, blocks, workers)
    t2 = perf_counter()

    z = writeback(((k[:n], v[:n]) for k, v, n, *_ in results), out_shape)
    t3 = perf_counter()

    report.processing_time = t1 - t0
    report.contraction_time = t2 - t1
    report.writeback_time = t3 - t2
    report.total_time = t3 - t_start
    report.nnz_z = z.nnz
    report.groups = int(run_starts.shape[0] - 1)
    report.growth_events = sum(r[3] for r in results)
    report.mismatched_nodes = sum(r[5] for r in results)
    report.bytes_allocated = (
        fkeys.nbytes + order.nbytes + x_coords.nbytes + x_vals.nbytes + x_ckeys.nbytes
        + run_starts.nbytes + run_fkeys.nbytes + table.nbytes
        + sum(r[4] for r in results)
        + z.coords.nbytes + z.values.nbytes
    )
    return z, report
