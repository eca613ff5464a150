"""Command-line entry point: ``swiftcontract {contract,generate,verify,bench}``.

Exit codes: 0 success, 1 verification mismatch, 2 bad arguments or
validation failure, 3 unreadable input, key overflow, size limit or I/O
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from time import perf_counter

from .baseline import contract_baseline
from .bench import ALL_LEVELS, DEFAULT_LEVELS, SUITES
from .errors import ParseError, SizeError
from .oracle import DEFAULT_MAX_DENSE, oracle_contract
from .swift import DEFAULT_WORKERS, StageReport, contract_swift
from .tensor import ContractionSpec, first_difference
from .tns import PRESETS, GeneratorPreset, generate, get_preset, read_tns, save_tns

EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_INPUT = 3

VERIFY_ATOL = 1e-12


class UsageError(Exception):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _oracle(x, y, spec, workers=1, max_dense=DEFAULT_MAX_DENSE):
    start = perf_counter()
    z = oracle_contract(x, y, spec, max_dense)
    report = StageReport("oracle", 1, nnz_x=x.nnz, nnz_y=y.nnz, nnz_z=z.nnz)
    report.contraction_time = report.total_time = perf_counter() - start
    return z, report


# verify compares every engine in this table against the others; tests swap
# entries to exercise the failure path
ENGINES = {
    "swift": contract_swift,
    "baseline": contract_baseline,
    "oracle": _oracle,
}


def _load_pair(args):
    x = read_tns(args.x)
    y = read_tns(args.y)
    try:
        spec = ContractionSpec.for_tensors(x, y, args.cmodes_x, args.cmodes_y)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return x, y, spec


def cmd_contract(args) -> int:
    x, y, spec = _load_pair(args)
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    if args.engine == "oracle":
        z, report = _oracle(x, y, spec, max_dense=args.max_dense)
    else:
        z, report = ENGINES[args.engine](x, y, spec, args.workers)
    info = report.to_dict()
    if args.sort_output:
        # sorted outside the timed stages
        start = perf_counter()
        z = z.canonical()
        info["sort_output_s"] = perf_counter() - start
    save_tns(z, args.out, sort=args.sort_output)
    if args.report:
        info["memory_note"] = "bytes_allocated counts arrays requested by the engine, not process RSS"
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(info, fh, indent=2)
    print(
        f"{args.engine}: nnz_z={z.nnz} total={report.total_time:.6f}s "
        f"(processing {report.processing_time:.6f}, contraction {report.contraction_time:.6f}, "
        f"writeback {report.writeback_time:.6f})"
    )
    return 0


def cmd_generate(args) -> int:
    if args.list:
        for name, p in PRESETS.items():
            print(f"{name}\tshape={'x'.join(map(str, p.shape))}\tnnz={p.nnz}\tseed={p.seed}")
        return 0
    if args.out is None:
        raise UsageError("--out is required")
    if args.preset is not None:
        if args.shape is not None or args.nnz is not None:
            raise UsageError("--preset cannot be combined with --shape/--nnz")
        try:
            preset = get_preset(args.preset)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        if args.seed is not None:
            preset = preset.with_seed(args.seed)
    else:
        if args.shape is None or args.nnz is None:
            raise UsageError("give --preset NAME or both --shape and --nnz")
        try:
            preset = GeneratorPreset("custom", args.shape, args.nnz, args.seed or 0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    save_tns(generate(preset), args.out)
    return 0


def cmd_verify(args) -> int:
    x, y, spec = _load_pair(args)
    outputs = {}
    for name, engine in ENGINES.items():
        if name == "oracle":
            outputs[name], _ = engine(x, y, spec, max_dense=int(args.max_dense))
        else:
            outputs[name], _ = engine(x, y, spec, args.workers)
    ok = True
    names = list(outputs)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            diff = first_difference(outputs[a], outputs[b], VERIFY_ATOL)
            if diff is None:
                print(f"PASS {a} vs {b} (nnz {outputs[a].nnz})")
            else:
                ok = False
                print(f"FAIL {a} vs {b}: {diff}")
    return 0 if ok else EXIT_MISMATCH


def cmd_bench(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    levels = tuple(args.levels) if args.levels else DEFAULT_LEVELS
    bad = [lv for lv in levels if lv not in ALL_LEVELS]
    if bad:
        raise UsageError(f"unknown level(s) {bad}; choose from {', '.join(ALL_LEVELS)}")
    report = SUITES[args.suite](args.samples, args.workers, levels)
    if args.out_csv:
        report.write_csv(args.out_csv)
    if args.out_json:
        report.write_json(args.out_json)
    print(json.dumps(report.aggregate, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swiftcontract", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def pair_args(p):
        p.add_argument("--x", required=True, help="X operand (.tns)")
        p.add_argument("--y", required=True, help="Y operand (.tns)")
        p.add_argument("--cmodes-x", type=_int_list, required=True, help="0-based, e.g. 1,2")
        p.add_argument("--cmodes-y", type=_int_list, required=True, help="0-based, e.g. 0,1")
        p.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
        p.add_argument("--max-dense", type=float, default=float(DEFAULT_MAX_DENSE),
                       help="element limit for the dense oracle")

    p = sub.add_parser("contract", help="contract two .tns tensors")
    pair_args(p)
    p.add_argument("--engine", choices=("swift", "baseline", "oracle"), default="swift")
    p.add_argument("--out", required=True)
    p.add_argument("--sort-output", action="store_true",
                   help="write entries in coordinate order (untimed)")
    p.add_argument("--report", help="write the stage report as JSON")
    p.set_defaults(func=cmd_contract)

    p = sub.add_parser("generate", help="write a seeded random tensor")
    p.add_argument("--preset")
    p.add_argument("--shape", type=_int_list)
    p.add_argument("--nnz", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--list", action="store_true", help="list presets and exit")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="cross-check all engines on one pair")
    pair_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
    p.add_argument("--levels", nargs="+", help=f"set1/set2 levels (default {' '.join(DEFAULT_LEVELS)})")
    p.add_argument("--out-csv")
    p.add_argument("--out-json")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "max_dense", None) is not None:
        args.max_dense = int(args.max_dense)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SizeError, OverflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
