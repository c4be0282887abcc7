"""Shortest-path engines with optional bounds.

``dijkstra`` is the textbook binary-heap search with lazy deletion and a
visited flag. ``bounded_dijkstra`` is the same loop with one extra test: a
relaxation whose tentative distance exceeds the bound is dropped before it
touches the distance table or the queue. Everything within the bound comes out
exactly as in the plain search; everything beyond it is reported unreached.

The same rejection is applied to Bellman-Ford and to a k-label (Chong style)
search. All engines take a :class:`WeightFn` selecting cost, delay or the
linear combination ``cost + lam * delay``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Optional

from .graph import Graph, Path

INF = math.inf


@dataclass(frozen=True)
class WeightFn:
    kind: str  # "cost" | "delay" | "linear"
    lam: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("cost", "delay", "linear"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "linear" and not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam!r}")

    @classmethod
    def linear(cls, lam: float) -> "WeightFn":
        return cls("linear", float(lam))

    @property
    def metric(self) -> str:
        return self.kind

    def of(self, cost: float, delay: float) -> float:
        if self.kind == "cost":
            return cost
        if self.kind == "delay":
            return delay
        return cost + self.lam * delay

    def adjacency(self, g: Graph) -> list[list[tuple[int, float]]]:
        if self.kind != "linear":
            return g.adjacency(self.kind)
        lam = self.lam
        edges = g.edges
        return [[(edges[i].dst, edges[i].cost + lam * edges[i].delay) for i in out]
                for out in g.out_edges]


COST = WeightFn("cost")
DELAY = WeightFn("delay")


def _bound_value(bound: Optional[float]) -> float:
    """Normalise a bound argument; None and +inf both mean unbounded."""
    if bound is None:
        return INF
    bound = float(bound)
    if math.isnan(bound) or bound <= 0.0:
        raise ValueError(f"a finite bound must be > 0, got {bound!r}")
    return bound


@dataclass
class SearchStats:
    # pruned_by_bound counts relaxations that would have been applied
    # (improving, or creating a label) had the bound not rejected them.
    pushes: int = 0
    pops: int = 0
    relax_attempts: int = 0
    relax_applied: int = 0
    pruned_by_bound: int = 0

    def __iadd__(self, other: "SearchStats") -> "SearchStats":
        self.pushes += other.pushes
        self.pops += other.pops
        self.relax_attempts += other.relax_attempts
        self.relax_applied += other.relax_applied
        self.pruned_by_bound += other.pruned_by_bound
        return self


@dataclass
class SearchResult:
    root: int
    dist: list[float]
    pred: list[int]  # -1 where absent
    stats: SearchStats
    # Nodes in the order they were settled (non-stale pops).
    settled: list[int] = field(default_factory=list)

    def reached(self, v: int) -> bool:
        return self.dist[v] < INF


def extract_path(r: SearchResult, v: int) -> Path | None:
    if r.dist[v] == INF:
        return None
    pred = r.pred
    nodes = [v]
    while v != r.root:
        v = pred[v]
        nodes.append(v)
        if len(nodes) > len(pred):
            raise RuntimeError("predecessor chain does not reach the root")
    nodes.reverse()
    return tuple(nodes)


def dijkstra(g: Graph, root: int, w: WeightFn, target: int | None = None) -> SearchResult:
    """Plain Dijkstra; stops when ``target`` is popped, else runs to exhaustion.

    Heap entries are ``(dist, seq, node)`` so equal distances pop FIFO.
    """
    adj = w.adjacency(g)
    n = g.node_count
    dist = [INF] * n
    pred = [-1] * n
    visited = bytearray(n)
    settled: list[int] = []
    pushes = pops = attempts = applied = 0

    dist[root] = 0.0
    heap = [(0.0, 0, root)]
    seq = 1
    pushes = 1
    while heap:
        d, _, u = heappop(heap)
        pops += 1
        if u == target:
            if not visited[u]:
                settled.append(u)
            break
        if visited[u]:
            continue
        visited[u] = 1
        settled.append(u)
        for v, wt in adj[u]:
            attempts += 1
            nd = d + wt
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heappush(heap, (nd, seq, v))
                seq += 1
                applied += 1
                pushes += 1
    return SearchResult(root, dist, pred, SearchStats(pushes, pops, attempts, applied, 0), settled)


def bounded_dijkstra(
    g: Graph, root: int, w: WeightFn, bound: float | None, target: int | None = None
) -> SearchResult:
    """Dijkstra that discards any relaxation with tentative distance > ``bound``.

    The bound is inclusive: a node at distance exactly ``bound`` is kept.
    ``bound=None`` (or +inf) delegates to :func:`dijkstra`.
    """
    limit = _bound_value(bound)
    if limit == INF:
        return dijkstra(g, root, w, target)
    adj = w.adjacency(g)
    n = g.node_count
    dist = [INF] * n
    pred = [-1] * n
    visited = bytearray(n)
    settled: list[int] = []
    pushes = pops = attempts = applied = pruned = 0

    dist[root] = 0.0
    heap = [(0.0, 0, root)]
    seq = 1
    pushes = 1
    while heap:
        d, _, u = heappop(heap)
        pops += 1
        if u == target:
            if not visited[u]:
                settled.append(u)
            break
        if visited[u]:
            continue
        visited[u] = 1
        settled.append(u)
        for v, wt in adj[u]:
            attempts += 1
            nd = d + wt
            if nd < dist[v]:
                if nd > limit:
                    pruned += 1
                    continue
                dist[v] = nd
                pred[v] = u
                heappush(heap, (nd, seq, v))
                seq += 1
                applied += 1
                pushes += 1
    return SearchResult(root, dist, pred, SearchStats(pushes, pops, attempts, applied, pruned), settled)


def bellman_ford(g: Graph, root: int, w: WeightFn, bound: float | None = None) -> SearchResult:
    """Round-based Bellman-Ford over the global edge order, with optional bound.

    Stops after the first round that changes nothing, or after
    ``node_count - 1`` rounds. ``settled`` lists the nodes in order of their
    first finite distance; no queue is involved, so ``pushes``/``pops`` stay 0.
    """
    limit = _bound_value(bound)
    n = g.node_count
    weighted = [(e.src, e.dst, w.of(e.cost, e.delay)) for e in g.edges]
    dist = [INF] * n
    pred = [-1] * n
    dist[root] = 0.0
    settled = [root]
    attempts = applied = pruned = 0
    for _ in range(max(n - 1, 0)):
        changed = False
        for u, v, wt in weighted:
            du = dist[u]
            if du == INF:
                continue
            attempts += 1
            nd = du + wt
            if nd < dist[v]:
                if nd > limit:
                    pruned += 1
                    continue
                if dist[v] == INF:
                    settled.append(v)
                dist[v] = nd
                pred[v] = u
                applied += 1
                changed = True
        if not changed:
            break
    return SearchResult(root, dist, pred, SearchStats(0, 0, attempts, applied, pruned), settled)


@dataclass
class KspResult:
    """Per-node label lists from :func:`chong_ksp`.

    Labels live in flat arrays; ``labels[v]`` holds the ids of the (up to k)
    labels settled at ``v`` in nondecreasing distance order.
    """

    root: int
    k: int
    label_node: list[int]
    label_dist: list[float]
    label_parent: list[int]
    labels: list[list[int]]
    stats: SearchStats
    popped: list[int] = field(default_factory=list)

    def dists(self, v: int) -> list[float]:
        return [self.label_dist[i] for i in self.labels[v]]

    def label_path(self, label: int) -> Path:
        nodes = []
        while label != -1:
            nodes.append(self.label_node[label])
            label = self.label_parent[label]
        nodes.reverse()
        return tuple(nodes)

    def paths(self, v: int) -> list[Path]:
        return [self.label_path(i) for i in self.labels[v]]


def chong_ksp(
    g: Graph,
    root: int,
    k: int,
    w: WeightFn,
    bound: float | None = None,
    target: int | None = None,
) -> KspResult:
    """Label-setting search keeping up to ``k`` settled labels per node.

    Each pop of a label at a node with fewer than ``k`` settled labels settles
    and expands it; later pops there are discarded, so every node is expanded
    at most ``k`` times. Extensions that would revisit a node already on the
    label's path are never created. With a bound, labels whose distance
    exceeds it are discarded at creation. With a target the search stops once
    the target holds ``k`` labels.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    limit = _bound_value(bound)
    adj = w.adjacency(g)
    n = g.node_count
    label_node = [root]
    label_dist = [0.0]
    label_parent = [-1]
    labels: list[list[int]] = [[] for _ in range(n)]
    popped: list[int] = []
    stats = SearchStats(pushes=1)
    heap = [(0.0, 0, 0)]
    seq = 1
    while heap:
        d, _, lab = heappop(heap)
        stats.pops += 1
        u = label_node[lab]
        if len(labels[u]) >= k:
            continue
        labels[u].append(lab)
        popped.append(lab)
        if u == target and len(labels[u]) >= k:
            break
        on_path = set()
        p = lab
        while p != -1:
            on_path.add(label_node[p])
            p = label_parent[p]
        for v, wt in adj[u]:
            stats.relax_attempts += 1
            if v in on_path:
                continue
            if len(labels[v]) >= k:
                continue
            nd = d + wt
            if nd > limit:
                stats.pruned_by_bound += 1
                continue
            label_node.append(v)
            label_dist.append(nd)
            label_parent.append(lab)
            heappush(heap, (nd, seq, len(label_node) - 1))
            seq += 1
            stats.relax_applied += 1
            stats.pushes += 1
    return KspResult(root, k, label_node, label_dist, label_parent, labels, stats, popped)
