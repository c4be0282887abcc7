"""Delay-constrained least-cost (CSP) heuristics built on the search engines.

Each algorithm runs in one of two modes:

* ``PLAIN``: every shortest-path subroutine runs unbounded and the overlay
  drops results beyond the bound afterwards.
* ``BOUNDED``: the same bound is handed to :func:`bounded_dijkstra`, which
  never produces those results in the first place.

Both modes apply the identical inclusive ``<=`` test, so they return the same
path (or both None) for every request.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Callable

from .engines import (
    COST,
    DELAY,
    INF,
    SearchResult,
    SearchStats,
    WeightFn,
    bounded_dijkstra,
    dijkstra,
    extract_path,
)
from .graph import Graph, Path, PathAttrs, path_attrs

LARAC_MAX_ITERATIONS = 50
LARAC_RTOL = 1e-9


class EngineMode(enum.Enum):
    PLAIN = "plain"
    BOUNDED = "bounded"


class UnknownAlgorithm(KeyError):
    pass


@dataclass(frozen=True)
class CspRequest:
    src: int
    dst: int
    delay_bound: float

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError("source and destination must differ")
        if not (math.isfinite(self.delay_bound) and self.delay_bound > 0):
            raise ValueError(f"delay bound must be finite and > 0, got {self.delay_bound!r}")


@dataclass(frozen=True)
class CspSolution:
    path: Path
    attrs: PathAttrs


@dataclass(frozen=True)
class EngineCall:
    engine: str  # "sp", "spt" or "forward"
    metric: str
    bounded: bool
    stats: SearchStats


@dataclass
class Telemetry:
    """Engine invocations made while solving one request."""

    calls: list[EngineCall] = field(default_factory=list)
    hops: int = 0

    def rollup(self) -> SearchStats:
        total = SearchStats()
        for c in self.calls:
            total += c.stats
        return total

    def bounded_count(self, engine: str, metric: str) -> int:
        return sum(1 for c in self.calls if c.bounded and c.engine == engine and c.metric == metric)


class _Ctx:
    """Per-call state: graph, request, mode and telemetry sink."""

    __slots__ = ("g", "req", "bounded", "tel")

    def __init__(self, g: Graph, req: CspRequest, mode: EngineMode, tel: Telemetry | None) -> None:
        self.g = g
        self.req = req
        self.bounded = mode is EngineMode.BOUNDED
        self.tel = tel if tel is not None else Telemetry()

    def _log(self, engine: str, w: WeightFn, bounded: bool, r: SearchResult) -> None:
        self.tel.calls.append(EngineCall(engine, w.kind, bounded, r.stats))

    def sp(self, w: WeightFn, bound: float = INF) -> Path | None:
        """Forward src->dst shortest path; beyond-bound results come back as None."""
        g, req = self.g, self.req
        if self.bounded and bound < INF:
            r = bounded_dijkstra(g, req.src, w, bound, req.dst)
            self._log("sp", w, True, r)
            return extract_path(r, req.dst)
        r = dijkstra(g, req.src, w, req.dst)
        self._log("sp", w, False, r)
        if r.dist[req.dst] > bound:
            return None
        return extract_path(r, req.dst)

    def reverse_tree(self, w: WeightFn, bound: float = INF) -> SearchResult:
        """Tree of shortest paths towards dst; nodes beyond ``bound`` are unreached."""
        rg = self.g.reverse()
        dst = self.req.dst
        if self.bounded and bound < INF:
            r = bounded_dijkstra(rg, dst, w, bound)
            self._log("spt", w, True, r)
            return r
        r = dijkstra(rg, dst, w)
        self._log("spt", w, False, r)
        if bound < INF:
            dist, pred = r.dist, r.pred
            for v, dv in enumerate(dist):
                if dv > bound:
                    dist[v] = INF
                    pred[v] = -1
        return r

    def solution(self, path: Path | None) -> CspSolution | None:
        if path is None:
            return None
        attrs = path_attrs(self.g, path)
        if attrs.delay > self.req.delay_bound:
            return None
        return CspSolution(path, attrs)


def _tree_path(tree: SearchResult, v: int) -> Path | None:
    """Follow a reverse tree from ``v`` to its root (the destination)."""
    if tree.dist[v] == INF:
        return None
    pred = tree.pred
    nodes = [v]
    while v != tree.root:
        v = pred[v]
        nodes.append(v)
    return tuple(nodes)


def ldp(g: Graph, req: CspRequest, mode: EngineMode, telemetry: Telemetry | None = None) -> CspSolution | None:
    """Least-delay path, if it meets the bound."""
    ctx = _Ctx(g, req, mode, telemetry)
    return ctx.solution(ctx.sp(DELAY, req.delay_bound))


def fb(g: Graph, req: CspRequest, mode: EngineMode, telemetry: Telemetry | None = None) -> CspSolution | None:
    """Least-cost path if feasible, otherwise fall back to the least-delay path."""
    ctx = _Ctx(g, req, mode, telemetry)
    lc = ctx.sp(COST)
    if lc is not None:
        sol = ctx.solution(lc)
        if sol is not None:
            return sol
    return ctx.solution(ctx.sp(DELAY, req.delay_bound))


def larac(g: Graph, req: CspRequest, mode: EngineMode, telemetry: Telemetry | None = None) -> CspSolution | None:
    """Lagrangian relaxation over the aggregated weight ``cost + lam * delay``.

    The least-delay run comes first and is the only one given the bound; the
    least-cost and aggregated runs stay unbounded.
    """
    ctx = _Ctx(g, req, mode, telemetry)
    delta = req.delay_bound
    pd = ctx.sp(DELAY, delta)
    if pd is None:
        return None
    pc = ctx.sp(COST)
    c_pc, d_pc = path_attrs(g, pc)
    if d_pc <= delta:
        return ctx.solution(pc)
    c_pd, d_pd = path_attrs(g, pd)
    for _ in range(LARAC_MAX_ITERATIONS):
        lam = (c_pc - c_pd) / (d_pd - d_pc)
        if not (lam >= 0.0 and math.isfinite(lam)):
            break
        r = ctx.sp(WeightFn.linear(lam))
        c_r, d_r = path_attrs(g, r)
        agg_r = c_r + lam * d_r
        agg_pc = c_pc + lam * d_pc
        if math.isclose(agg_r, agg_pc, rel_tol=LARAC_RTOL, abs_tol=0.0):
            break
        if d_r <= delta:
            pd, c_pd, d_pd = r, c_r, d_r
        else:
            pc, c_pc, d_pc = r, c_r, d_r
    return ctx.solution(pd)


def dcur(g: Graph, req: CspRequest, mode: EngineMode, telemetry: Telemetry | None = None) -> CspSolution | None:
    """Hop-by-hop walk mixing least-cost and least-delay next hops.

    At each node the least-cost next hop is taken when the delay already spent
    plus that hop plus the least delay from there still fits the bound;
    otherwise the least-delay next hop is taken. A revisited node has the loop
    cut off and loses its cost direction.
    """
    ctx = _Ctx(g, req, mode, telemetry)
    src, dst, delta = req.src, req.dst, req.delay_bound
    ld_tree = ctx.reverse_tree(DELAY, delta)
    ld = ld_tree.dist
    if ld[src] > delta:
        return None
    ld_path = _tree_path(ld_tree, src)
    ld_cost = path_attrs(g, ld_path).cost
    lc_tree = ctx.reverse_tree(COST, ld_cost)
    lc_pred, lc = lc_tree.pred, lc_tree.dist
    ld_pred = ld_tree.pred
    delay_adj = g.adjacency("delay")

    def hop_delay(u: int, v: int) -> float:
        return min(wt for x, wt in delay_adj[u] if x == v)

    path = [src]
    prefix_delay = [0.0]
    position = {src: 0}
    banned: set[int] = set()
    max_hops = 4 * g.node_count
    hops = 0
    u = src
    while u != dst:
        if hops >= max_hops:
            ctx.tel.hops = hops
            return ctx.solution(ld_path)
        delay_so_far = prefix_delay[-1]
        nxt = -1
        if u not in banned and lc[u] < INF:
            w = lc_pred[u]
            dw = hop_delay(u, w)
            if delay_so_far + dw + ld[w] <= delta:
                nxt = w
        if nxt == -1:
            nxt = ld_pred[u]
            dw = hop_delay(u, nxt)
        hops += 1
        if nxt in position:
            # Loop: cut back to the revisited node and force the delay direction there.
            # If it was already forced, the loop's cost move happened further along.
            cut = position[nxt]
            loop_nodes = path[cut:]
            if nxt in banned:
                banned.update(loop_nodes)
            banned.add(nxt)
            for x in loop_nodes[1:]:
                del position[x]
            del path[cut + 1:]
            del prefix_delay[cut + 1:]
            u = nxt
            continue
        position[nxt] = len(path)
        path.append(nxt)
        prefix_delay.append(delay_so_far + dw)
        u = nxt
    ctx.tel.hops = hops
    return ctx.solution(tuple(path))


def iak(g: Graph, req: CspRequest, mode: EngineMode, telemetry: Telemetry | None = None) -> CspSolution | None:
    """Least-cost path, repaired by switching to least-delay routing at the latest possible node."""
    ctx = _Ctx(g, req, mode, telemetry)
    src, dst, delta = req.src, req.dst, req.delay_bound
    lc = ctx.sp(COST)
    if lc is None:
        return None
    sol = ctx.solution(lc)
    if sol is not None:
        return sol
    ld_tree = ctx.reverse_tree(DELAY, delta)
    ld = ld_tree.dist
    prefix = [0.0]
    for u, v in zip(lc, lc[1:]):
        prefix.append(prefix[-1] + g.edge_between(u, v).delay)
    for i in range(len(lc) - 1, -1, -1):
        v = lc[i]
        if prefix[i] + ld[v] > delta:
            continue
        head = lc[:i]
        tail = _tree_path(ld_tree, v)
        if set(head).isdisjoint(tail):
            sol = ctx.solution(head + tail)
            if sol is not None:
                return sol
    return None


def h_mcop(g: Graph, req: CspRequest, mode: EngineMode, telemetry: Telemetry | None = None) -> CspSolution | None:
    """Reverse least-delay tree, then a forward single-label search that prefers cheap labels
    which can still reach the destination in time.

    Forward keys are ``(0, cost)`` for promising labels (delay so far plus the
    least delay onwards fits the bound) and ``(1, delay so far + least delay
    onwards)`` otherwise, so any promising label beats any non-promising one.
    """
    ctx = _Ctx(g, req, mode, telemetry)
    src, dst, delta = req.src, req.dst, req.delay_bound
    tree = ctx.reverse_tree(DELAY, delta)
    rest = tree.dist
    if rest[src] > delta:
        return None

    n = g.node_count
    edges = g.edges
    out_edges = g.out_edges
    key = [(2, INF)] * n
    cost = [INF] * n
    delay = [INF] * n
    pred = [-1] * n
    visited = bytearray(n)
    stats = SearchStats(pushes=1)
    key[src] = (0, 0.0)
    cost[src] = delay[src] = 0.0
    heap = [(0, 0.0, 0, src)]
    seq = 1
    while heap:
        cls, k, _, u = heappop(heap)
        stats.pops += 1
        if u == dst:
            break
        if visited[u]:
            continue
        visited[u] = 1
        cu, du = cost[u], delay[u]
        for i in out_edges[u]:
            e = edges[i]
            v = e.dst
            stats.relax_attempts += 1
            if visited[v]:
                continue
            c2 = cu + e.cost
            d2 = du + e.delay
            through = d2 + rest[v]
            cand = (0, c2) if through <= delta else (1, through)
            if cand < key[v]:
                key[v] = cand
                cost[v], delay[v], pred[v] = c2, d2, u
                heappush(heap, (cand[0], cand[1], seq, v))
                seq += 1
                stats.relax_applied += 1
                stats.pushes += 1
    ctx.tel.calls.append(EngineCall("forward", "combined", False, stats))

    if pred[dst] != -1 and delay[dst] <= delta:
        nodes = [dst]
        v = dst
        while v != src:
            v = pred[v]
            nodes.append(v)
        nodes.reverse()
        sol = ctx.solution(tuple(nodes))
        if sol is not None:
            return sol
    return ctx.solution(_tree_path(tree, src))


ALGORITHMS: dict[str, Callable[..., CspSolution | None]] = {
    "ldp": ldp,
    "fb": fb,
    "larac": larac,
    "dcur": dcur,
    "iak": iak,
    "h_mcop": h_mcop,
}


def solve(
    name: str, g: Graph, req: CspRequest, mode: EngineMode, telemetry: Telemetry | None = None
) -> CspSolution | None:
    try:
        fn = ALGORITHMS[name]
    except KeyError:
        raise UnknownAlgorithm(f"unknown algorithm id {name!r}; expected one of {sorted(ALGORITHMS)}") from None
    return fn(g, req, mode, telemetry)
