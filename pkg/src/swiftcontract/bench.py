"""Benchmark suites comparing the grouping engine against the sort-and-hash baseline.

Every sample regenerates its inputs from the preset seed so no engine sees
arrays warmed by a previous run. Memory figures are the engines' own
allocation accounting (bytes of the arrays they request), not process RSS.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field
from time import perf_counter
from typing import Callable, Sequence

import numpy as np

from .baseline import contract_baseline
from .grouping import group_tensor
from .swift import DEFAULT_WORKERS, StageReport, contract_swift
from .tensor import ContractionSpec, CooTensor, linearize_many
from .tns import GeneratorPreset, generate, get_preset, random_tensor

CSV_COLUMNS = [
    "engine", "input_x", "input_y", "cmodes", "workers", "sample",
    "processing_s", "contraction_s", "writeback_s", "total_s",
    "nnz_z", "bytes_allocated", "growth_events",
]

ENGINES: dict[str, Callable] = {"baseline": contract_baseline, "swift": contract_swift}

DEFAULT_LEVELS = ("050", "100", "200")
ALL_LEVELS = ("050", "100", "200", "300", "500")
# largest levels whose swift-only runs fit a 5 GB machine; set1/500 yields ~1e8 outputs
FEASIBLE_LEVELS = {"set1": ALL_LEVELS[:4], "set2": ALL_LEVELS}
SET_CMODES = ((1, 2), (0, 1))

# (A preset, B preset, A contracting modes, B contracting modes)
IMBALANCE_PAIRS = {
    "2190": ((3, 2), (0, 2)),
    "2178": ((3, 4), (0, 2)),
    "2177": ((3, 0), (0, 2)),
    "2164": ((3, 1), (0, 2)),
    "2163": ((3, 0), (0, 2)),
}

SCALING_NNZ = (500_000, 1_000_000, 2_000_000)
SCALING_SHAPE = (100,) * 5
SCALING_CMODES = ((1, 2, 3), (0, 1, 2))


@dataclass(frozen=True)
class Pairing:
    label: str
    x: GeneratorPreset
    y: GeneratorPreset
    cmodes_x: tuple[int, ...]
    cmodes_y: tuple[int, ...]

    @property
    def cmodes(self) -> str:
        return f"{','.join(map(str, self.cmodes_x))}/{','.join(map(str, self.cmodes_y))}"

    def swapped(self) -> Pairing:
        return Pairing(self.label + "-swapped", self.y, self.x, self.cmodes_y, self.cmodes_x)


def set_pairings(set_name: str, levels: Sequence[str] = DEFAULT_LEVELS) -> list[Pairing]:
    out = []
    cx, cy = SET_CMODES
    for level in levels:
        a = get_preset(f"{set_name}/A{level}")
        b = get_preset(f"{set_name}/B{level}")
        for label, x, y in (("AxB", a, b), ("BxB", b, b), ("AxA", a, a)):
            out.append(Pairing(f"{set_name}/{label}{level}", x, y, cx, cy))
    return out


def imbalance_pairings(tags: Sequence[str] = tuple(IMBALANCE_PAIRS)) -> list[Pairing]:
    out = []
    for tag in tags:
        cx, cy = IMBALANCE_PAIRS[tag]
        out.append(
            Pairing(f"set3/AxB{tag}", get_preset(f"set3/A{tag}"), get_preset(f"set3/B{tag}"), cx, cy)
        )
    return out


def scaling_pairings(nnzs: Sequence[int] = SCALING_NNZ) -> list[Pairing]:
    out = []
    for n in nnzs:
        x = GeneratorPreset(f"scaling/X{n}", SCALING_SHAPE, n, 1000 + n)
        y = GeneratorPreset(f"scaling/Y{n}", SCALING_SHAPE, n, 2000 + n)
        out.append(Pairing(f"scaling/{n}", x, y, *SCALING_CMODES))
    return out


_warmed = False


def warm_up() -> None:
    """Compile every kernel once so the first timed sample is not a JIT run."""
    global _warmed
    if _warmed:
        return
    x = random_tensor((6, 5, 4), 40, 1)
    y = random_tensor((5, 4, 3), 30, 2)
    spec = ContractionSpec.for_tensors(x, y, (1, 2), (0, 1))
    for engine in ENGINES.values():
        engine(x, y, spec, 1)
        engine(x, y, spec, 2)
    _warmed = True


def _row(p: Pairing, report: StageReport, sample: int) -> dict:
    return {
        "engine": report.engine,
        "input_x": p.x.name,
        "input_y": p.y.name,
        "cmodes": p.cmodes,
        "workers": report.workers,
        "sample": sample,
        "processing_s": report.processing_time,
        "contraction_s": report.contraction_time,
        "writeback_s": report.writeback_time,
        "total_s": report.total_time,
        "nnz_z": report.nnz_z,
        "bytes_allocated": report.bytes_allocated,
        "growth_events": report.growth_events,
    }


@dataclass
class BenchReport:
    suite: str
    rows: list[dict] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    # full StageReports, kept in memory for callers that need more than the CSV columns
    reports: list[tuple[str, StageReport]] = field(default_factory=list, repr=False)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows)

    def to_json(self) -> dict:
        return {"suite": self.suite, "rows": self.rows, "aggregate": self.aggregate}

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)


def _summary(values: Sequence[float]) -> dict:
    return {
        "mean": statistics.fmean(values),
        "std": statistics.stdev(values) if len(values) > 1 else 0.0,
        "median": statistics.median(values),
        "samples": len(values),
    }


def run_pairing(
    report: BenchReport,
    p: Pairing,
    samples: int,
    workers: int,
    engines: Sequence[str] = ("baseline", "swift"),
    sample_offset: int = 0,
) -> dict[str, list[StageReport]]:
    """Run every engine ``samples`` times on ``p``; each sample uses fresh inputs."""
    out: dict[str, list[StageReport]] = {e: [] for e in engines}
    for sample in range(samples):
        x = generate(p.x)
        y = generate(p.y)
        spec = ContractionSpec.for_tensors(x, y, p.cmodes_x, p.cmodes_y)
        for name in engines:
            _, r = ENGINES[name](x, y, spec, workers)
            out[name].append(r)
            report.rows.append(_row(p, r, sample_offset + sample))
            report.reports.append((p.label, r))
    return out


def _speedup_block(runs: dict[str, list[StageReport]]) -> dict:
    base, swift = runs["baseline"], runs["swift"]
    ratios = [b.total_time / s.total_time for b, s in zip(base, swift)]
    return {
        "speedup": _summary(ratios),
        "memory_ratio": statistics.fmean(
            s.bytes_allocated / b.bytes_allocated for b, s in zip(base, swift)
        ),
        "baseline_growth_events": sum(r.growth_events for r in base),
        "swift_growth_events": sum(r.growth_events for r in swift),
        "swift_max_load_factor": max(r.max_load_factor for r in swift),
    }


def bench_sets(
    set_name: str,
    samples: int = 10,
    workers: int = DEFAULT_WORKERS,
    levels: Sequence[str] = DEFAULT_LEVELS,
    engines: Sequence[str] = ("baseline", "swift"),
) -> BenchReport:
    warm_up()
    report = BenchReport(set_name)
    for p in set_pairings(set_name, levels):
        runs = run_pairing(report, p, samples, workers, engines)
        if set(engines) == {"baseline", "swift"}:
            report.aggregate[p.label] = _speedup_block(runs)
        else:
            report.aggregate[p.label] = {
                e: {
                    "total_s": _summary([r.total_time for r in rs]),
                    "growth_events": sum(r.growth_events for r in rs),
                    "max_load_factor": max(r.max_load_factor for r in rs),
                }
                for e, rs in runs.items()
            }
    return report


def bench_imbalance(
    samples: int = 10, workers: int = DEFAULT_WORKERS, tags: Sequence[str] = tuple(IMBALANCE_PAIRS)
) -> BenchReport:
    """Run each Set-3 pair in both operand orders; ratio = time(A x B) / time(B x A)."""
    warm_up()
    report = BenchReport("imbalance")
    for p in imbalance_pairings(tags):
        forward = {e: [] for e in ENGINES}
        backward = {e: [] for e in ENGINES}
        # alternate orders per sample so machine drift hits both alike
        for sample in range(samples):
            for runs, pairing in ((forward, p), (backward, p.swapped())):
                got = run_pairing(report, pairing, 1, workers, sample_offset=sample)
                for e, rs in got.items():
                    runs[e].extend(rs)
        block = {}
        for engine in ENGINES:
            f = statistics.median(r.total_time for r in forward[engine])
            b = statistics.median(r.total_time for r in backward[engine])
            block[engine] = {"forward_median_s": f, "swapped_median_s": b, "swap_ratio": f / b}
        report.aggregate[p.label] = block
    return report


def time_grouping(t: CooTensor, modes: Sequence[int]) -> float:
    start = perf_counter()
    group_tensor(t, modes)
    return perf_counter() - start


def time_sort(t: CooTensor, modes: Sequence[int]) -> float:
    """The baseline's input-processing sort of X: key construction plus comparator sort."""
    start = perf_counter()
    keys = linearize_many(t.coords, t.shape, modes)
    order = np.argsort(keys, kind="quicksort")
    t.coords[order]
    t.values[order]
    return perf_counter() - start


def grouping_scaling(
    nnzs: Sequence[int] = (1_000_000, 2_000_000),
    samples: int = 5,
    shape: tuple[int, ...] = SCALING_SHAPE,
    modes: Sequence[int] = (0, 3, 4),
) -> dict:
    """Median grouping and sorting times of random order-5 tensors per entry count.

    Sizes are interleaved within each sample round so machine drift hits all
    of them alike.
    """
    warm_up()
    times = {n: ([], []) for n in nnzs}
    for sample in range(samples):
        for n in nnzs:
            t = random_tensor(shape, n, 7919 * (sample + 1) + n)
            times[n][0].append(time_grouping(t, modes))
            times[n][1].append(time_sort(t, modes))
            del t
    return {
        n: {"group_s": statistics.median(g), "sort_s": statistics.median(s)}
        for n, (g, s) in times.items()
    }


def bench_scaling(samples: int = 5, workers: int = DEFAULT_WORKERS) -> BenchReport:
    """Stage times at 0.5M/1M/2M entries, with observed vs. expected growth ratios.

    Expected ratios between consecutive sizes: processing grows like
    nnz_X + nnz_Y for the grouping engine and like nnz_X log nnz_X + nnz_Y
    for the baseline, contraction like nnz_X * cmode_Yavg and writeback like
    nnz_Z.
    """
    warm_up()
    report = BenchReport("scaling")
    medians: dict[int, dict[str, dict[str, float]]] = {}
    for p in scaling_pairings():
        runs = run_pairing(report, p, samples, workers)
        n = p.x.nnz
        medians[n] = {
            e: {
                "processing_s": statistics.median(r.processing_time for r in rs),
                "contraction_s": statistics.median(r.contraction_time for r in rs),
                "writeback_s": statistics.median(r.writeback_time for r in rs),
                "nnz_z": rs[0].nnz_z,
            }
            for e, rs in runs.items()
        }
    groups = grouping_scaling(tuple(medians), samples)
    sizes = sorted(medians)
    ratios = []
    for lo, hi in zip(sizes, sizes[1:]):
        pairs_lo = lo * lo / 10**6
        pairs_hi = hi * hi / 10**6
        entry = {"from_nnz": lo, "to_nnz": hi, "expected": {
            "swift_processing": hi / lo,
            "baseline_processing": (hi * math.log(hi) + hi) / (lo * math.log(lo) + lo),
            "contraction": pairs_hi / pairs_lo,
            "writeback": medians[hi]["swift"]["nnz_z"] / medians[lo]["swift"]["nnz_z"],
        }, "observed": {
            f"{e}_{stage}": medians[hi][e][stage] / medians[lo][e][stage]
            for e in ENGINES
            for stage in ("processing_s", "contraction_s", "writeback_s")
        }}
        entry["observed"]["group_x"] = groups[hi]["group_s"] / groups[lo]["group_s"]
        entry["observed"]["sort_x"] = groups[hi]["sort_s"] / groups[lo]["sort_s"]
        ratios.append(entry)
    report.aggregate = {
        "stage_medians": {str(k): v for k, v in medians.items()},
        "grouping": {str(k): v for k, v in groups.items()},
        "ratios": ratios,
    }
    return report


SUITES = {
    "set1": lambda samples, workers, levels: bench_sets("set1", samples, workers, levels),
    "set2": lambda samples, workers, levels: bench_sets("set2", samples, workers, levels),
    "imbalance": lambda samples, workers, levels: bench_imbalance(samples, workers),
    "scaling": lambda samples, workers, levels: bench_scaling(samples, workers),
}
