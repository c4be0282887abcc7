"""Bounded Dijkstra: early-terminating shortest-path subroutines for CSP routing."""

from .csp import ALGORITHMS, CspRequest, CspSolution, EngineMode, Telemetry, solve
from .engines import (
    COST,
    DELAY,
    KspResult,
    SearchResult,
    SearchStats,
    WeightFn,
    bellman_ford,
    bounded_dijkstra,
    chong_ksp,
    dijkstra,
    extract_path,
)
from .graph import (
    Graph,
    GraphError,
    GridSpec,
    PathAttrs,
    build_grid,
    hop_distance,
    load_graph,
    path_attrs,
    reverse_view,
    save_graph,
)

__all__ = [
    "ALGORITHMS", "COST", "DELAY", "CspRequest", "CspSolution", "EngineMode", "Graph",
    "GraphError", "GridSpec", "KspResult", "PathAttrs", "SearchResult", "SearchStats",
    "Telemetry", "WeightFn", "bellman_ford", "bounded_dijkstra", "build_grid", "chong_ksp",
    "dijkstra", "extract_path", "hop_distance", "load_graph", "path_attrs", "reverse_view",
    "save_graph", "solve",
]
