#!/usr/bin/env python3
"""Stage-time growth from 0.5M to 2M entries against the linear-cost model."""
import argparse
from pathlib import Path

from swiftcontract import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=5)
    ap.add_argument("--workers", type=int, default=8)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    report = bench.bench_scaling(args.samples, args.workers)
    report.write_csv(args.out / "scaling.csv")
    report.write_json(args.out / "scaling.json")
    for r in report.aggregate["ratios"]:
        print(f"{r['from_nnz']} -> {r['to_nnz']}")
        exp, obs = r["expected"], r["observed"]
        print(f"  grouping X      {obs['group_x']:.2f}  (linear: {r['to_nnz'] / r['from_nnz']:.2f})")
        print(f"  baseline sort X {obs['sort_x']:.2f}")
        for e in ("swift", "baseline"):
            print(
                f"  {e:8s} processing {obs[f'{e}_processing_s']:.2f} (model "
                f"{exp[f'{e}_processing']:.2f}), contraction {obs[f'{e}_contraction_s']:.2f} "
                f"(model {exp['contraction']:.2f}), writeback {obs[f'{e}_writeback_s']:.2f} "
                f"(model {exp['writeback']:.2f})"
            )


if __name__ == "__main__":
    main()
