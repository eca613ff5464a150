#!/usr/bin/env python3
"""Speedup and memory ratio of the grouping engine over the baseline on Sets 1 and 2.

Writes results/speedup_<set>.{csv,json} and prints one line per pairing.
"""
import argparse
from pathlib import Path

from swiftcontract import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sets", nargs="+", default=["set1", "set2"])
    ap.add_argument("--levels", nargs="+", default=list(bench.DEFAULT_LEVELS))
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--workers", type=int, default=8)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    for set_name in args.sets:
        report = bench.bench_sets(set_name, args.samples, args.workers, args.levels)
        report.write_csv(args.out / f"speedup_{set_name}.csv")
        report.write_json(args.out / f"speedup_{set_name}.json")
        for label, block in report.aggregate.items():
            sp = block["speedup"]
            print(
                f"{label:16s} speedup {sp['mean']:6.2f} +- {sp['std']:.2f}  "
                f"memory ratio {block['memory_ratio']:.2f}  "
                f"baseline growth {block['baseline_growth_events']}"
            )


if __name__ == "__main__":
    main()
