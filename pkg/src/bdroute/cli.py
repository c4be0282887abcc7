"""Command-line front end: ``gen``, ``run``, ``report`` and ``verify``.

Exit codes: 0 success, 1 usage error, 2 runtime or verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .bench import ANY_DISTANCE, BUCKETS, LEVELS, ExperimentPlan, PlanError
from .csp import ALGORITHMS, UnknownAlgorithm
from .graph import GridSpec, build_grid, save_graph
from .report import GROUP_DIMENSIONS, summarize, verify_equality, write_summary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

log = logging.getLogger("bdroute")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_sizes(text: str) -> tuple[int, ...]:
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
    else:
        lo = hi = int(text)
    if lo < 2 or hi < lo:
        raise UsageError(f"grid size range must satisfy 2 <= A <= B, got {text!r}")
    return tuple(range(lo, hi + 1))


def parse_buckets(text: str) -> tuple[tuple[int, int], ...]:
    if text == "all":
        return BUCKETS
    if text == "any":
        return (ANY_DISTANCE,)
    try:
        lo, hi = (int(x) for x in text.split("-"))
    except ValueError:
        raise UsageError(f"bucket must be lo-hi, 'all' or 'any', got {text!r}") from None
    if not 0 <= lo < hi <= 100:
        raise UsageError(f"bad bucket {text!r}")
    return ((lo, hi),)


def parse_levels(text: str) -> tuple[int, ...]:
    if text == "all":
        return LEVELS
    try:
        return (bench.parse_level(text),)
    except ValueError:
        raise UsageError(f"level must be 'infeasible', 1..7 or 'all', got {text!r}") from None


def _plan(args) -> ExperimentPlan:
    try:
        return ExperimentPlan(
            grid_sizes=parse_sizes(args.n),
            buckets=parse_buckets(args.bucket),
            levels=parse_levels(args.level),
            requests_per_cell=args.requests,
            warmup_per_cell=args.warmup,
            aggregate_requests=args.requests,
            aggregate_warmup=args.warmup,
            graphs_per_cell=args.graphs_per_cell,
            master_seed=args.seed,
        )
    except PlanError as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args) -> int:
    out = Path(args.out)
    sizes = parse_sizes(args.n)
    out.mkdir(parents=True, exist_ok=True)
    if args.count == 0:
        for n in sizes:
            seed = int(bench.stream_seed(args.seed, "weights", n).generate_state(1, np.uint64)[0])
            (out / f"grid_n{n}.graph").write_bytes(save_graph(build_grid(GridSpec(n, seed))))
        return EXIT_OK
    if args.warmup != 0:
        raise UsageError("gen does not take --warmup")
    args.requests = args.count
    plan = _plan(args)
    for n, bucket, level in plan.cells():
        for gi, work in enumerate(bench.build_cell(plan, n, bucket, level)):
            stem = f"n{n}_b{bench.bucket_name(bucket)}_{bench.level_name(level)}_g{gi}"
            (out / f"grid_{stem}.graph").write_bytes(save_graph(work.graph))
            bench.write_requests(work.requests, out / f"requests_{stem}.csv")
    return EXIT_OK


def cmd_run(args) -> int:
    algorithms = args.alg or list(ALGORITHMS)
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise UsageError(f"unknown algorithm id(s): {', '.join(unknown)}; choose from {', '.join(ALGORITHMS)}")
    plan = _plan(args)
    records = bench.run_plan(
        plan, algorithms, jobs=args.jobs, strict_timing=args.strict_timing,
        progress=lambda cell: log.info("done n=%d bucket=%s level=%s", cell[0],
                                       bench.bucket_name(cell[1]), bench.level_name(cell[2])),
    )
    bench.write_measurements(records, args.out)
    bad = verify_equality(records)
    log.info("%d records written to %s, %d mismatches", len(records), args.out, len(bad))
    return EXIT_OK if not bad else EXIT_FAILURE


def _load(path: str):
    records = bench.read_measurements(path)
    if not records:
        raise ValueError(f"{path}: empty input (no measurement records)")
    return records


def cmd_report(args) -> int:
    records = _load(args.measurements)
    rows = summarize(records, args.group_by.replace("-", "_"))
    write_summary(rows, args.out or sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    records = _load(args.measurements)
    bad = verify_equality(records)
    for r in bad:
        print(f"MISMATCH algorithm={r.algorithm} grid_n={r.grid_n} bucket={r.bucket} "
              f"level={r.delay_level} request_id={r.request_id} src={r.src} dst={r.dst}")
    print(f"{len(records)} records checked, {len(bad)} mismatches")
    return EXIT_OK if not bad else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bdroute", description="Bounded Dijkstra CSP benchmark on grid graphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def workload(sp, requests: int, warmup: int) -> None:
        sp.add_argument("--n", default="6..20", help="grid side or range A..B")
        sp.add_argument("--bucket", default="all", help="lo-hi, 'all' (ten buckets) or 'any' (random pairs)")
        sp.add_argument("--level", default="all", help="infeasible, 1..7 or all")
        sp.add_argument("--requests", type=int, default=requests)
        sp.add_argument("--warmup", type=int, default=warmup)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--graphs-per-cell", type=int, default=1)

    gen = sub.add_parser("gen", help="write grid graphs and request CSVs")
    workload(gen, 0, 0)
    gen.add_argument("--count", type=int, default=0, help="requests per cell; 0 writes only one graph per size")
    gen.add_argument("--out", default=".", help="output directory")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="time plain vs bounded runs and write a measurement CSV")
    workload(run, 5000, 500)
    run.add_argument("--alg", action="append", help=f"algorithm id, repeatable ({', '.join(ALGORITHMS)})")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--strict-timing", action="store_true")
    run.add_argument("--out", default="measurements.csv")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="summarise runtime ratios")
    rep.add_argument("measurements")
    rep.add_argument("--group-by", default="delay-level",
                     choices=[d.replace("_", "-") for d in GROUP_DIMENSIONS])
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_report)

    ver = sub.add_parser("verify", help="list records whose plain and bounded outputs differ")
    ver.add_argument("measurements")
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, UnknownAlgorithm) as exc:
        print(f"bdroute: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlanError, ValueError, OSError) as exc:
        print(f"bdroute: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
