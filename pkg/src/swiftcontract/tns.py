"""Coordinate text files (``.tns``) and seeded random tensor generation.

File format: one entry per line, ``N`` 1-based indices followed by the
value, separated by whitespace. Lines starting with ``#`` are comments; a
``#shape: a b c`` comment fixes the shape, otherwise each mode's length is
the largest index seen in it.

Generator algorithm (reproducible in any language):

* SplitMix64 stream seeded with the preset seed (state += 0x9E3779B97F4A7C15,
  then the standard xor-shift-multiply finalizer).
* Coordinates: draw a 64-bit word ``r``; reject while ``r < (2**64 - T) % T``
  where ``T`` is the product of the shape; the code is ``r % T``. Codes
  already drawn are rejected too. Codes decode mixed-radix with mode 0 most
  significant. Exactly ``nnz`` codes are kept, in draw order.
* Values: after all coordinates, one word per entry in the same order,
  ``((r >> 11) + 1) * 2**-53``, which lies in (0, 1].
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
from numba import njit

from .errors import BoundsError, ParseError
from .hashing import mix64
from .tensor import U64_MAX, CooTensor, build_coo, canonical_order, check_shape, delinearize_many

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True)
def _splitmix_next(state):
    state = state + _GOLDEN
    return state, mix64(state)


@njit(cache=True)
def _draw_codes(seed, total, nnz):
    state = np.uint64(seed)
    threshold = (np.uint64(0) - total) % total
    capacity = 8
    while capacity < 2 * nnz:
        capacity *= 2
    mask = np.uint64(capacity - 1)
    seen_keys = np.empty(capacity, dtype=np.uint64)
    seen_used = np.zeros(capacity, dtype=np.bool_)
    codes = np.empty(nnz, dtype=np.uint64)
    n = 0
    while n < nnz:
        state, r = _splitmix_next(state)
        if r < threshold:
            continue
        code = r % total
        s = mix64(code) & mask
        fresh = True
        while seen_used[s]:
            if seen_keys[s] == code:
                fresh = False
                break
            s = (s + np.uint64(1)) & mask
        if not fresh:
            continue
        seen_used[s] = True
        seen_keys[s] = code
        codes[n] = code
        n += 1
    values = np.empty(nnz, dtype=np.float64)
    for i in range(nnz):
        state, r = _splitmix_next(state)
        values[i] = ((r >> np.uint64(11)) + np.uint64(1)) * (1.0 / 9007199254740992.0)
    return codes, values


@dataclass(frozen=True)
class GeneratorPreset:
    name: str
    shape: tuple[int, ...]
    nnz: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "shape", check_shape(self.shape))
        if self.nnz < 0:
            raise ValueError("nnz must be non-negative")
        if self.nnz > math.prod(self.shape):
            raise ValueError(
                f"nnz {self.nnz} exceeds the {math.prod(self.shape)} cells of shape {self.shape}"
            )
        if not 0 <= self.seed <= U64_MAX:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def with_seed(self, seed: int) -> GeneratorPreset:
        return GeneratorPreset(self.name, self.shape, self.nnz, seed)


def generate(preset: GeneratorPreset) -> CooTensor:
    """Draw ``preset.nnz`` distinct uniform coordinates with values in (0, 1]."""
    total = math.prod(preset.shape)
    if total > U64_MAX:
        raise OverflowError(f"shape {preset.shape} has more than 2**64 cells")
    codes, values = _draw_codes(np.uint64(preset.seed), np.uint64(total), preset.nnz)
    coords = delinearize_many(codes, preset.shape)
    return CooTensor(preset.shape, coords, values)


def random_tensor(shape, nnz: int, seed: int) -> CooTensor:
    return generate(GeneratorPreset("custom", tuple(shape), nnz, seed))


def _preset(name: str, shape, nnz: int) -> GeneratorPreset:
    return GeneratorPreset(name, tuple(shape), nnz, zlib.crc32(name.encode()))


def _build_presets() -> dict[str, GeneratorPreset]:
    out = {}
    for set_name, length in (("set1", 50), ("set2", 100)):
        for level in (50, 100, 200, 300, 500):
            tag = f"{level:03d}"
            for prefix, order in (("A", 5), ("B", 4)):
                name = f"{set_name}/{prefix}{tag}"
                out[name] = _preset(name, (length,) * order, level * 1000)
    set3 = {
        "2190": ((4, 110, 4, 36, 486), 198_000, (36, 24, 4, 4), 81),
        "2178": ((4, 131, 413, 36, 4), 162_000, (36, 24, 4, 4), 81),
        "2177": ((4, 4, 131, 24, 413), 134_000, (24, 36, 4, 4), 95),
        "2164": ((131, 4, 413, 36, 4), 157_000, (36, 24, 4, 4), 81),
        "2163": ((4, 131, 4, 24, 413), 130_000, (24, 36, 4, 4), 95),
    }
    for tag, (a_shape, a_nnz, b_shape, b_nnz) in set3.items():
        out[f"set3/A{tag}"] = _preset(f"set3/A{tag}", a_shape, a_nnz)
        out[f"set3/B{tag}"] = _preset(f"set3/B{tag}", b_shape, b_nnz)
    apps = {
        "enron": ((186, 186, 44), 9838),
        "lbnl": ((65_000, 65_000, 65_000), 27269),
        "facebook": ((63891, 63890, 1847), 738_000),
        "hubbard-1d-p": ((4, 4, 93, 36, 432), 300_000),
        "hubbard-1d-t": ((131, 4, 413, 36, 4), 400_000),
        "hubbard-1d-z": ((4, 129, 184, 24, 4), 100_000),
        "hubbard-2d": ((4, 4, 111, 24, 528), 300_000),
        "nips": ((2000, 3000, 14_000, 17_000), 3_000_000),
    }
    for tag, (shape, nnz) in apps.items():
        out[f"app/{tag}"] = _preset(f"app/{tag}", shape, nnz)
    return out


PRESETS: dict[str, GeneratorPreset] = _build_presets()


def get_preset(name: str) -> GeneratorPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; see `swiftcontract generate --list`") from None


def _parse_shape_header(body: str, lineno: int) -> tuple[int, ...]:
    try:
        return check_shape(int(tok) for tok in body.split())
    except ValueError as exc:
        raise ParseError(f"bad shape header: {exc}", lineno) from None


def parse_tns(stream: Iterable[str]) -> CooTensor:
    """Read a ``.tns`` text stream into a tensor (duplicates summed, zeros dropped)."""
    header_shape = None
    order = None
    rows: list[list[int]] = []
    vals: list[float] = []
    lines: list[int] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("shape:"):
                header_shape = _parse_shape_header(body[6:], lineno)
            continue
        tokens = line.split()
        if order is None:
            order = len(tokens) - 1
            if header_shape is not None and len(header_shape) != order:
                raise ParseError(
                    f"shape header has {len(header_shape)} modes but entry has {order} indices",
                    lineno,
                )
        if len(tokens) != order + 1:
            raise ParseError(f"expected {order} indices and a value, got {len(tokens)} fields", lineno)
        try:
            idx = [int(tok) for tok in tokens[:-1]]
            value = float(tokens[-1])
        except ValueError:
            raise ParseError(f"malformed entry {line!r}", lineno) from None
        if any(i < 1 for i in idx):
            raise ParseError("indices are 1-based and must be >= 1", lineno)
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {tokens[-1]}", lineno)
        rows.append([i - 1 for i in idx])
        vals.append(value)
        lines.append(lineno)

    if order is None:
        if header_shape is None:
            raise ParseError("no entries and no shape header; cannot infer order")
        order = len(header_shape)
    coords = np.array(rows, dtype=np.int64).reshape(len(rows), order)
    if header_shape is None:
        shape = tuple(int(m) + 1 for m in coords.max(axis=0)) if order else ()
    else:
        shape = header_shape
        over = np.flatnonzero((coords >= np.array(shape, dtype=np.int64)).any(axis=1)) if order else []
        if len(over):
            raise ParseError(f"index outside shape {shape}", lines[over[0]])
    try:
        return build_coo(shape, coords, np.array(vals, dtype=np.float64))
    except BoundsError as exc:
        raise ParseError(str(exc)) from None


def write_tns(t: CooTensor, stream: TextIO, sort: bool = True) -> None:
    """Write ``t`` with a shape header.

    Entries go out in ascending coordinate order, or in storage order when
    ``sort`` is false.
    """
    stream.write("#shape:" + "".join(f" {s}" for s in t.shape) + "\n")
    if sort:
        order = canonical_order(t.coords)
        coords = (t.coords[order] + 1).tolist()
        values = t.values[order].tolist()
    else:
        coords = (t.coords + 1).tolist()
        values = t.values.tolist()
    stream.writelines(
        "".join(f"{i} " for i in c) + format(v, ".17g") + "\n" for c, v in zip(coords, values)
    )


def read_tns(path) -> CooTensor:
    with open(path, encoding="utf-8") as fh:
        return parse_tns(fh)


def save_tns(t: CooTensor, path, sort: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_tns(t, fh, sort)
