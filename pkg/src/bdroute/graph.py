"""Directed two-metric graphs, grid generation, path evaluation and text I/O.

Every edge carries two strictly positive additive weights, ``cost`` and
``delay``. Graphs are immutable once built; search engines may therefore share
one instance and the adjacency caches built on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

Path = tuple[int, ...]


class GraphError(ValueError):
    """Raised for malformed graphs, paths or graph files."""


class Edge(NamedTuple):
    src: int
    dst: int
    cost: float
    delay: float


class PathAttrs(NamedTuple):
    cost: float
    delay: float

    def __add__(self, other: "PathAttrs") -> "PathAttrs":  # type: ignore[override]
        return PathAttrs(self.cost + other.cost, self.delay + other.delay)


@dataclass(frozen=True)
class GridSpec:
    n: int
    weight_seed: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise GraphError(f"grid side must be >= 2, got {self.n}")

    @property
    def node_count(self) -> int:
        return self.n * self.n

    @property
    def longest_hop_distance(self) -> int:
        return 2 * (self.n - 1)

    def coords(self, u: int) -> tuple[int, int]:
        return divmod(u, self.n)


def _check_weight(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise GraphError(f"{what} must be finite and > 0, got {value!r}")
    return value


class Graph:
    """Immutable directed multigraph with (cost, delay) edge weights."""

    __slots__ = ("node_count", "edges", "out_edges", "in_edges", "grid",
                 "_adjacency", "_reverse")

    def __init__(
        self,
        node_count: int,
        edges: Iterable[tuple[int, int, float, float]],
        grid: GridSpec | None = None,
    ) -> None:
        if node_count < 0:
            raise GraphError("node count must be non-negative")
        checked = []
        for src, dst, cost, delay in edges:
            src, dst = int(src), int(dst)
            if not (0 <= src < node_count and 0 <= dst < node_count):
                raise GraphError(f"edge ({src}, {dst}) references a node outside 0..{node_count - 1}")
            if src == dst:
                raise GraphError(f"self-loop on node {src}")
            checked.append(Edge(src, dst, _check_weight(cost, "cost"), _check_weight(delay, "delay")))
        self.node_count = node_count
        self.edges: tuple[Edge, ...] = tuple(checked)
        out_edges: list[list[int]] = [[] for _ in range(node_count)]
        in_edges: list[list[int]] = [[] for _ in range(node_count)]
        for i, e in enumerate(self.edges):
            out_edges[e.src].append(i)
            in_edges[e.dst].append(i)
        self.out_edges: tuple[tuple[int, ...], ...] = tuple(map(tuple, out_edges))
        self.in_edges: tuple[tuple[int, ...], ...] = tuple(map(tuple, in_edges))
        self.grid = grid
        self._adjacency: dict[str, list[list[tuple[int, float]]]] = {}
        self._reverse: Graph | None = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.node_count == other.node_count and self.edges == other.edges
                and self.grid == other.grid)

    def __hash__(self) -> int:
        return hash((self.node_count, self.edges))

    def __repr__(self) -> str:
        return f"Graph(node_count={self.node_count}, edges={len(self.edges)})"

    def adjacency(self, metric: str) -> list[list[tuple[int, float]]]:
        """Out-neighbour lists ``[(dst, weight), ...]`` for ``"cost"`` or ``"delay"``.

        Built once per metric and cached; callers must not mutate the result.
        """
        adj = self._adjacency.get(metric)
        if adj is None:
            if metric not in ("cost", "delay"):
                raise GraphError(f"unknown metric {metric!r}")
            edges = self.edges
            field = 2 if metric == "cost" else 3
            adj = [[(edges[i].dst, edges[i][field]) for i in out] for out in self.out_edges]
            self._adjacency[metric] = adj
        return adj

    def edge_between(self, u: int, v: int) -> Edge | None:
        """Cheapest-cost edge u->v, or None. Ties go to the first listed edge."""
        best = None
        for i in self.out_edges[u]:
            e = self.edges[i]
            if e.dst == v and (best is None or e.cost < best.cost):
                best = e
        return best

    def reverse(self) -> "Graph":
        """Edge-reversed graph, memoised on this instance."""
        if self._reverse is None:
            self._reverse = reverse_view(self)
            self._reverse._reverse = self
        return self._reverse


def reverse_view(g: Graph) -> Graph:
    return Graph(g.node_count, ((e.dst, e.src, e.cost, e.delay) for e in g.edges), grid=g.grid)


def build_grid(spec: GridSpec) -> Graph:
    """Row-major ``n x n`` 4-neighbour grid with weights uniform in [1, 2].

    Each neighbour pair gets a single (cost, delay) draw shared by its two
    directed edges.
    """
    n = spec.n
    pairs = []
    for r in range(n):
        for c in range(n):
            u = r * n + c
            if c + 1 < n:
                pairs.append((u, u + 1))
            if r + 1 < n:
                pairs.append((u, u + n))
    rng = np.random.default_rng(spec.weight_seed)
    costs = rng.uniform(1.0, 2.0, size=len(pairs)).tolist()
    delays = rng.uniform(1.0, 2.0, size=len(pairs)).tolist()
    edges = []
    for (u, v), cost, delay in zip(pairs, costs, delays):
        edges.append((u, v, cost, delay))
        edges.append((v, u, cost, delay))
    return Graph(n * n, edges, grid=spec)


def hop_distance(spec: GridSpec, u: int, v: int) -> int:
    (ru, cu), (rv, cv) = spec.coords(u), spec.coords(v)
    return abs(ru - rv) + abs(cu - cv)


def path_attrs(g: Graph, path: Sequence[int]) -> PathAttrs:
    """Sum cost and delay along ``path``, left to right.

    Between two nodes joined by parallel edges the cheapest one is used.
    """
    cost = 0.0
    delay = 0.0
    for u, v in zip(path, path[1:]):
        e = g.edge_between(u, v)
        if e is None:
            raise GraphError(f"no edge {u}->{v} on path")
        cost += e.cost
        delay += e.delay
    return PathAttrs(cost, delay)


def is_simple_path(g: Graph, path: Sequence[int]) -> bool:
    if len(set(path)) != len(path):
        return False
    return all(g.edge_between(u, v) is not None for u, v in zip(path, path[1:]))


def save_graph(g: Graph) -> bytes:
    lines = [f"graph {g.node_count}"]
    if g.grid is not None:
        lines.append(f"grid {g.grid.n} {g.grid.weight_seed}")
    lines.extend(f"edge {e.src} {e.dst} {e.cost!r} {e.delay!r}" for e in g.edges)
    return ("\n".join(lines) + "\n").encode("ascii")


def load_graph(data: bytes | str) -> Graph:
    text = data.decode("ascii") if isinstance(data, bytes) else data
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "graph" or len(lines[0]) != 2:
        raise GraphError("missing 'graph <node_count>' header")
    try:
        node_count = int(lines[0][1])
    except ValueError:
        raise GraphError(f"bad node count {lines[0][1]!r}") from None
    grid = None
    edges = []
    for lineno, parts in enumerate(lines[1:], start=2):
        tag = parts[0]
        try:
            if tag == "grid" and len(parts) == 3 and grid is None and not edges:
                grid = GridSpec(int(parts[1]), int(parts[2]))
            elif tag == "edge" and len(parts) == 5:
                edges.append((int(parts[1]), int(parts[2]), float(parts[3]), float(parts[4])))
            else:
                raise GraphError(f"unexpected line: {' '.join(parts)!r}")
        except ValueError as exc:
            if isinstance(exc, GraphError):
                raise GraphError(f"line {lineno}: {exc}") from None
            raise GraphError(f"line {lineno}: cannot parse {' '.join(parts)!r}") from None
    if grid is not None and grid.node_count != node_count:
        raise GraphError("grid header does not match node count")
    return Graph(node_count, edges, grid=grid)
