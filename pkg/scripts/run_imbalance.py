#!/usr/bin/env python3
"""Operand-order sensitivity on the Set-3 pairs (order-5 large x order-4 tiny)."""
import argparse
from pathlib import Path

from swiftcontract import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", nargs="+", default=list(bench.IMBALANCE_PAIRS))
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--workers", type=int, default=8)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    report = bench.bench_imbalance(args.samples, args.workers, args.pairs)
    report.write_csv(args.out / "imbalance.csv")
    report.write_json(args.out / "imbalance.json")
    print(f"{'pair':14s} {'baseline A.B/B.A':>17s} {'swift A.B/B.A':>14s}")
    for label, block in report.aggregate.items():
        print(
            f"{label:14s} {block['baseline']['swap_ratio']:17.2f} "
            f"{block['swift']['swap_ratio']:14.2f}"
        )


if __name__ == "__main__":
    main()
