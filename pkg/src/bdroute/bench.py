"""Grid benchmark: request generation, paired plain/bounded timing, CSV records.

A *cell* is one (grid size, distance bucket, delay level) combination. Each
cell gets its own weight draw and request stream, all derived from the master
seed through named sub-streams so that the algorithm list never influences
what is generated.
"""

from __future__ import annotations

import csv
import gc
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Iterable, Iterator, Sequence

import numpy as np

from .csp import ALGORITHMS, CspRequest, EngineMode, Telemetry, UnknownAlgorithm
from .engines import COST, DELAY, dijkstra
from .graph import Graph, GridSpec, build_grid, hop_distance

log = logging.getLogger(__name__)

INFEASIBLE = 0
LEVELS = tuple(range(8))  # 0 = infeasible, 1..7 = feasible levels, tightest first
BUCKETS = tuple((10 * b, 10 * b + 10) for b in range(10))
ANY_DISTANCE = (0, 100)  # uniformly random pairs, used for distance-aggregated runs
INFEASIBLE_FLOOR = 1e-9

_STREAMS = {"weights": 1, "pairs": 2, "bounds": 3}


class PlanError(RuntimeError):
    pass


def level_name(level: int) -> str:
    return "infeasible" if level == INFEASIBLE else str(level)


def parse_level(text: str) -> int:
    text = text.strip().lower()
    if text == "infeasible":
        return INFEASIBLE
    level = int(text)
    if not 1 <= level <= 7:
        raise ValueError(f"delay level must be 'infeasible' or 1..7, got {text!r}")
    return level


def bucket_name(bucket: tuple[int, int]) -> str:
    return f"{bucket[0]}-{bucket[1]}"


def in_bucket(hops: int, bucket: tuple[int, int], longest: int) -> bool:
    """Hop count lies in (lo% * longest, hi% * longest]."""
    lo, hi = bucket
    return lo * longest < 100 * hops <= hi * longest


def stream_seed(master_seed: int, stream: str, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(_STREAMS[stream], *key))


def _cell_key(n: int, bucket: tuple[int, int], level: int, graph_index: int) -> tuple[int, ...]:
    return (n, bucket[0], bucket[1], level, graph_index)


def delay_bound_range(level: int, d_min: float, d_lc: float) -> tuple[float, float]:
    """Interval from which the delay bound of a request at ``level`` is drawn.

    Infeasible: [max(eps, d_min / 2), d_min). Level i: the i-th of 7 equal
    slices of [d_min, d_lc]. A degenerate pair (d_lc == d_min) collapses every
    feasible level to the single point d_min.
    """
    if level == INFEASIBLE:
        return max(INFEASIBLE_FLOOR, 0.5 * d_min), d_min
    width = (d_lc - d_min) / 7.0
    lo = d_min + (level - 1) * width
    hi = d_lc if level == 7 else d_min + level * width
    return lo, hi


def draw_delay_bound(level: int, d_min: float, d_lc: float, rng: np.random.Generator) -> float:
    lo, hi = delay_bound_range(level, d_min, d_lc)
    if hi <= lo:
        return lo
    value = float(rng.uniform(lo, hi))
    if value >= hi and level != 7:
        value = math.nextafter(hi, -math.inf)
    return value


@dataclass(frozen=True)
class SampledRequest:
    request_id: int
    request: CspRequest
    d_min: float
    d_lc: float
    bucket: tuple[int, int]
    level: int


class RequestSampler:
    """Draws requests on one grid graph, caching per-source least-delay and
    least-cost trees (untimed; used only to place delay bounds)."""

    def __init__(self, g: Graph, degenerate_patience: int = 50) -> None:
        if g.grid is None:
            raise PlanError("request sampling needs a grid graph")
        self.g = g
        self.spec = g.grid
        self.patience = degenerate_patience
        self._metrics: dict[int, tuple[list[float], list[float]]] = {}
        self._targets: dict[tuple[int, tuple[int, int]], list[int]] = {}
        self._degenerate_only: dict[tuple[int, int], bool] = {}

    def targets(self, src: int, bucket: tuple[int, int]) -> list[int]:
        key = (src, bucket)
        found = self._targets.get(key)
        if found is None:
            longest = self.spec.longest_hop_distance
            found = [v for v in range(self.g.node_count)
                     if v != src and in_bucket(hop_distance(self.spec, src, v), bucket, longest)]
            self._targets[key] = found
        return found

    def _source_metrics(self, src: int) -> tuple[list[float], list[float]]:
        cached = self._metrics.get(src)
        if cached is None:
            g = self.g
            least_delay = dijkstra(g, src, DELAY).dist
            cost_tree = dijkstra(g, src, COST)
            lc_delay = [math.inf] * g.node_count
            lc_delay[src] = 0.0
            pred = cost_tree.pred
            for v in cost_tree.settled[1:]:
                u = pred[v]
                lc_delay[v] = lc_delay[u] + g.edge_between(u, v).delay
            cached = (least_delay, lc_delay)
            self._metrics[src] = cached
        return cached

    def metrics(self, src: int, dst: int) -> tuple[float, float]:
        """(least delay, delay of the least-cost path) from src to dst."""
        least_delay, lc_delay = self._source_metrics(src)
        return least_delay[dst], lc_delay[dst]

    def degenerate_only(self, bucket: tuple[int, int]) -> bool:
        """True if every pair in the bucket has least-cost path == least-delay path delay."""
        known = self._degenerate_only.get(bucket)
        if known is None:
            known = True
            for src in range(self.g.node_count):
                for dst in self.targets(src, bucket):
                    d_min, d_lc = self.metrics(src, dst)
                    if d_lc != d_min:
                        known = False
                        break
                if not known:
                    break
            self._degenerate_only[bucket] = known
        return known

    def sample(
        self,
        request_id: int,
        bucket: tuple[int, int],
        level: int,
        pair_rng: np.random.Generator,
        bound_rng: np.random.Generator,
        max_attempts: int,
    ) -> tuple[SampledRequest, int]:
        """Draw one request; returns it with the number of pair draws used.

        Pairs whose least-cost and least-delay paths have the same delay are
        redrawn, unless the bucket contains nothing else.
        """
        streak = 0
        for attempt in range(1, max_attempts + 1):
            src = int(pair_rng.integers(self.g.node_count))
            candidates = self.targets(src, bucket)
            if not candidates:
                streak += 1
                continue
            dst = candidates[int(pair_rng.integers(len(candidates)))]
            d_min, d_lc = self.metrics(src, dst)
            if not math.isfinite(d_min):
                streak += 1
                continue
            if d_lc == d_min:
                streak += 1
                known = self._degenerate_only.get(bucket)
                if known is None and streak >= self.patience:
                    known = self.degenerate_only(bucket)
                if not known:
                    continue
            delta = draw_delay_bound(level, d_min, d_lc, bound_rng)
            return SampledRequest(request_id, CspRequest(src, dst, delta), d_min, d_lc, bucket, level), attempt
        raise PlanError(f"no usable pair in bucket {bucket_name(bucket)} after {max_attempts} draws")


def sample_request(
    g: Graph, spec: GridSpec, bucket: tuple[int, int], level: int, rng: np.random.Generator
) -> CspRequest:
    """One-off request draw on ``g`` (pairs and bound share ``rng``)."""
    if g.grid != spec:
        raise PlanError("graph was not generated from this grid spec")
    sampled, _ = RequestSampler(g).sample(0, bucket, level, rng, rng, max_attempts=10_000)
    return sampled.request


def generate_requests(
    g: Graph,
    bucket: tuple[int, int],
    level: int,
    count: int,
    pair_rng: np.random.Generator,
    bound_rng: np.random.Generator,
    sampler: RequestSampler | None = None,
) -> list[SampledRequest]:
    sampler = sampler or RequestSampler(g)
    budget = max(10 * count, 1000)
    out = []
    for i in range(count):
        sampled, used = sampler.sample(i, bucket, level, pair_rng, bound_rng, budget)
        budget -= used - 1
        out.append(sampled)
    return out


@dataclass(frozen=True)
class ExperimentPlan:
    grid_sizes: tuple[int, ...] = tuple(range(6, 21))
    buckets: tuple[tuple[int, int], ...] = BUCKETS
    levels: tuple[int, ...] = LEVELS
    requests_per_cell: int = 5000
    warmup_per_cell: int = 500
    aggregate_requests: int = 50000
    aggregate_warmup: int = 5000
    graphs_per_cell: int = 1
    master_seed: int = 0

    def __post_init__(self) -> None:
        if any(n < 2 for n in self.grid_sizes):
            raise PlanError("grid sizes must be >= 2")
        if not 0 <= self.warmup_per_cell < self.requests_per_cell:
            raise PlanError("warm-up must be smaller than the request count")
        if not 0 <= self.aggregate_warmup < self.aggregate_requests:
            raise PlanError("aggregate warm-up must be smaller than the request count")
        if self.graphs_per_cell < 1:
            raise PlanError("graphs per cell must be >= 1")
        for lo, hi in self.buckets:
            if not 0 <= lo < hi <= 100:
                raise PlanError(f"bad bucket {lo}-{hi}")
        for level in self.levels:
            if level not in LEVELS:
                raise PlanError(f"bad delay level {level}")

    def counts(self, bucket: tuple[int, int]) -> tuple[int, int]:
        if bucket == ANY_DISTANCE:
            return self.aggregate_requests, self.aggregate_warmup
        return self.requests_per_cell, self.warmup_per_cell

    def cells(self) -> Iterator[tuple[int, tuple[int, int], int]]:
        for n in self.grid_sizes:
            for bucket in self.buckets:
                for level in self.levels:
                    yield n, bucket, level


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


@dataclass
class CellWorkload:
    graph: Graph
    requests: list[SampledRequest]
    warmup: int


def build_cell(plan: ExperimentPlan, n: int, bucket: tuple[int, int], level: int) -> list[CellWorkload]:
    """Graphs and request lists for one cell; request ids run across the cell's graphs."""
    total, warm = plan.counts(bucket)
    out = []
    next_id = 0
    for gi, (count, wcount) in enumerate(zip(_split(total, plan.graphs_per_cell),
                                             _split(warm, plan.graphs_per_cell))):
        key = _cell_key(n, bucket, level, gi)
        weight_seed = int(stream_seed(plan.master_seed, "weights", *key).generate_state(1, np.uint64)[0])
        g = build_grid(GridSpec(n, weight_seed))
        pair_rng = np.random.default_rng(stream_seed(plan.master_seed, "pairs", *key))
        bound_rng = np.random.default_rng(stream_seed(plan.master_seed, "bounds", *key))
        reqs = generate_requests(g, bucket, level, count, pair_rng, bound_rng)
        reqs = [SampledRequest(next_id + r.request_id, r.request, r.d_min, r.d_lc, r.bucket, r.level)
                for r in reqs]
        next_id += count
        out.append(CellWorkload(g, reqs, wcount))
    return out


@dataclass
class MeasurementRecord:
    algorithm: str
    grid_n: int
    bucket_lo_pct: int
    bucket_hi_pct: int
    delay_level: str
    request_id: int
    src: int
    dst: int
    delay_bound: float
    t_plain_ns: int
    t_bounded_ns: int
    plain_pushes: int
    plain_pops: int
    bounded_pushes: int
    bounded_pops: int
    outputs_equal: bool
    path_cost: float | None
    path_delay: float | None

    @property
    def ratio(self) -> float:
        return self.t_plain_ns / self.t_bounded_ns

    @property
    def bucket(self) -> str:
        return f"{self.bucket_lo_pct}-{self.bucket_hi_pct}"


CSV_COLUMNS = tuple(f.name for f in fields(MeasurementRecord))


def run_cell(
    g: Graph,
    algorithm: str,
    requests: Sequence[SampledRequest],
    warmup: int = 0,
    clock=time.perf_counter_ns,
) -> list[MeasurementRecord]:
    """Time plain and bounded runs of ``algorithm`` on each request.

    The mode that runs first alternates from one request to the next. The
    first ``warmup`` requests are executed but not recorded. Garbage
    collection is paused for the duration of the loop.
    """
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise UnknownAlgorithm(f"unknown algorithm id {algorithm!r}") from None
    if g.grid is None:
        raise PlanError("measurements need a grid graph")
    rg = g.reverse()
    for graph in (g, rg):
        graph.adjacency("cost")
        graph.adjacency("delay")
    plain, bounded = EngineMode.PLAIN, EngineMode.BOUNDED
    records = []
    gc_was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        for i, sr in enumerate(requests):
            req = sr.request
            tel_p, tel_b = Telemetry(), Telemetry()
            if i % 2 == 0:
                t0 = clock()
                out_p = fn(g, req, plain, tel_p)
                t1 = clock()
                out_b = fn(g, req, bounded, tel_b)
                t2 = clock()
                t_plain, t_bounded = t1 - t0, t2 - t1
            else:
                t0 = clock()
                out_b = fn(g, req, bounded, tel_b)
                t1 = clock()
                out_p = fn(g, req, plain, tel_p)
                t2 = clock()
                t_bounded, t_plain = t1 - t0, t2 - t1
            if i < warmup:
                continue
            if t_plain <= 0 or t_bounded <= 0:
                raise RuntimeError(f"clock returned non-positive duration on request {sr.request_id}")
            sp, sb = tel_p.rollup(), tel_b.rollup()
            equal = (out_p is None and out_b is None) or (
                out_p is not None and out_b is not None and out_p.path == out_b.path)
            records.append(MeasurementRecord(
                algorithm=algorithm,
                grid_n=g.grid.n,
                bucket_lo_pct=sr.bucket[0],
                bucket_hi_pct=sr.bucket[1],
                delay_level=level_name(sr.level),
                request_id=sr.request_id,
                src=req.src,
                dst=req.dst,
                delay_bound=req.delay_bound,
                t_plain_ns=t_plain,
                t_bounded_ns=t_bounded,
                plain_pushes=sp.pushes,
                plain_pops=sp.pops,
                bounded_pushes=sb.pushes,
                bounded_pops=sb.pops,
                outputs_equal=equal,
                path_cost=None if out_b is None else out_b.attrs.cost,
                path_delay=None if out_b is None else out_b.attrs.delay,
            ))
    finally:
        if gc_was_enabled:
            gc.enable()
    return records


def _run_one_cell(args) -> list[MeasurementRecord]:
    plan, algorithms, (n, bucket, level) = args
    records = []
    for work in build_cell(plan, n, bucket, level):
        for alg in algorithms:
            records.extend(run_cell(work.graph, alg, work.requests, work.warmup))
    return records


def run_plan(
    plan: ExperimentPlan,
    algorithms: Sequence[str],
    jobs: int = 1,
    strict_timing: bool = False,
    progress=None,
) -> list[MeasurementRecord]:
    """Run every cell of ``plan`` for every algorithm.

    Cells may be spread over worker processes (at most one per CPU); inside a
    cell everything is sequential. ``strict_timing`` forces a single worker.
    """
    for alg in algorithms:
        if alg not in ALGORITHMS:
            raise UnknownAlgorithm(f"unknown algorithm id {alg!r}")
    cells = [(plan, tuple(algorithms), cell) for cell in plan.cells()]
    jobs = 1 if strict_timing else max(1, min(jobs, os.cpu_count() or 1))
    records: list[MeasurementRecord] = []
    if jobs == 1:
        for args in cells:
            records.extend(_run_one_cell(args))
            if progress is not None:
                progress(args[2])
        return records
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for args, chunk in zip(cells, pool.map(_run_one_cell, cells)):
            records.extend(chunk)
            if progress is not None:
                progress(args[2])
    return records


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_measurements(records: Iterable[MeasurementRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


_PARSERS = {
    "algorithm": str,
    "delay_level": str,
    "delay_bound": float,
    "outputs_equal": lambda s: {"true": True, "false": False}[s],
    "path_cost": lambda s: float(s) if s else None,
    "path_delay": lambda s: float(s) if s else None,
}


def read_measurements(path) -> list[MeasurementRecord]:
    """Parse a measurement CSV; raises ValueError on a malformed file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            try:
                values = {c: _PARSERS.get(c, int)(v) for c, v in zip(CSV_COLUMNS, row)}
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            records.append(MeasurementRecord(**values))
    return records


REQUEST_COLUMNS = ("request_id", "src", "dst", "delay_bound", "d_min", "d_lc",
                   "bucket_lo_pct", "bucket_hi_pct", "delay_level")


def write_requests(requests: Iterable[SampledRequest], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REQUEST_COLUMNS)
        for r in requests:
            w.writerow([r.request_id, r.request.src, r.request.dst, repr(r.request.delay_bound),
                        repr(r.d_min), repr(r.d_lc), r.bucket[0], r.bucket[1], level_name(r.level)])
