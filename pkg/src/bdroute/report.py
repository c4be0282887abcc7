"""Runtime-ratio summaries and output-equality checks over measurement records."""

from __future__ import annotations

import csv
import logging
import os
from collections import defaultdict
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .bench import MeasurementRecord

log = logging.getLogger(__name__)

GROUP_DIMENSIONS = ("delay_level", "bucket", "grid_n", "all")
PERCENTILES = (10, 25, 50, 75, 90)


@dataclass(frozen=True)
class RatioSummary:
    algorithm: str
    group_dimension: str
    group_value: str
    count: int
    mean: float
    p10: float
    p25: float
    p50: float
    p75: float
    p90: float


SUMMARY_COLUMNS = tuple(f.name for f in fields(RatioSummary))


def _group_value(r: MeasurementRecord, dimension: str) -> str:
    if dimension == "delay_level":
        return r.delay_level
    if dimension == "bucket":
        return r.bucket
    if dimension == "grid_n":
        return str(r.grid_n)
    return "all"


def _sort_key(dimension: str, value: str):
    if dimension == "delay_level":
        return -1 if value == "infeasible" else int(value)
    if dimension == "bucket":
        lo, hi = value.split("-")
        return int(lo), int(hi)
    if dimension == "grid_n":
        return int(value)
    return 0


def trim(values: Sequence[float]) -> np.ndarray:
    """Drop values below the 1st and above the 99th percentile."""
    arr = np.asarray(values, dtype=float)
    lo, hi = np.percentile(arr, [1, 99])
    return arr[(arr >= lo) & (arr <= hi)]


def summarize_ratios(ratios: Sequence[float]) -> tuple[int, float, list[float]]:
    kept = trim(ratios)
    return len(kept), float(kept.mean()), [float(x) for x in np.percentile(kept, PERCENTILES)]


def summarize(records: Iterable[MeasurementRecord], group_by: str) -> list[RatioSummary]:
    if group_by not in GROUP_DIMENSIONS:
        raise ValueError(f"group_by must be one of {GROUP_DIMENSIONS}, got {group_by!r}")
    groups: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in records:
        groups[(r.algorithm, _group_value(r, group_by))].append(r.ratio)
    out = []
    for (alg, value) in sorted(groups, key=lambda k: (k[0], _sort_key(group_by, k[1]))):
        ratios = groups[(alg, value)]
        if not ratios:
            log.warning("skipping empty group %s=%s for %s", group_by, value, alg)
            continue
        count, mean, pct = summarize_ratios(ratios)
        out.append(RatioSummary(alg, group_by, value, count, mean, *pct))
    return out


def verify_equality(records: Iterable[MeasurementRecord]) -> list[MeasurementRecord]:
    """Records whose plain and bounded outputs differ; empty means all identical."""
    return [r for r in records if not r.outputs_equal]


def write_summary(rows: Iterable[RatioSummary], out) -> None:
    """Write summary rows to a path, or to an open text stream."""
    if isinstance(out, (str, os.PathLike)):
        with open(out, "w", newline="", encoding="utf-8") as fh:
            write_summary(rows, fh)
        return
    w = csv.writer(out)
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(row)])
