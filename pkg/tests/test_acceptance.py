"""End-to-end acceptance checks. Each test logs one PASS/FAIL line, shown in
the "acceptance criteria" section of the pytest summary.

Timing criteria (4-9) run on this machine's clock; the work they do is kept
to a few minutes in total.
"""

import math
from collections import defaultdict

import numpy as np
import pytest

from bdroute.bench import ANY_DISTANCE, BUCKETS, INFEASIBLE, LEVELS, ExperimentPlan, build_cell, run_cell
from bdroute.csp import ALGORITHMS
from bdroute.engines import COST, DELAY, WeightFn, bellman_ford, bounded_dijkstra, chong_ksp, dijkstra, extract_path
from bdroute.report import summarize
from oracles import shortest_distance
from strategies import random_graph

pytestmark = pytest.mark.slow

WEIGHTS = (COST, DELAY, WeightFn.linear(0.7))


def _run(plan, algorithms):
    records = []
    for n, bucket, level in plan.cells():
        for work in build_cell(plan, n, bucket, level):
            for alg in algorithms:
                records.extend(run_cell(work.graph, alg, work.requests, work.warmup))
    return records


def _means(records, algorithm, group_by):
    return {r.group_value: r.mean for r in summarize([x for x in records if x.algorithm == algorithm], group_by)}


def _fmt(means):
    return ", ".join(f"{k}={v:.2f}" for k, v in means.items())


# --- shared workloads ----------------------------------------------------------

@pytest.fixture(scope="session")
def all_records():
    """Every measurement record produced by this module, for the dominance check."""
    return []


@pytest.fixture(scope="session")
def equality_records(all_records):
    plan = ExperimentPlan(grid_sizes=(6, 8, 10), requests_per_cell=200, warmup_per_cell=0, master_seed=1)
    recs = _run(plan, list(ALGORITHMS))
    all_records.extend(recs)
    return recs


@pytest.fixture(scope="session")
def aggregated_records(all_records):
    plan = ExperimentPlan(grid_sizes=tuple(range(6, 21)), buckets=(ANY_DISTANCE,), aggregate_requests=330,
                          aggregate_warmup=30, master_seed=2)
    recs = _run(plan, ["ldp", "iak", "dcur"])
    all_records.extend(recs)
    return recs


@pytest.fixture(scope="session")
def favourable_records(all_records):
    plan = ExperimentPlan(grid_sizes=(20,), buckets=((0, 10),), levels=(INFEASIBLE,), requests_per_cell=550,
                          warmup_per_cell=50, master_seed=3)
    recs = _run(plan, ["dcur", "iak", "h_mcop"])
    all_records.extend(recs)
    return recs


@pytest.fixture(scope="session")
def infeasible_n20_records(all_records):
    plan = ExperimentPlan(grid_sizes=(20,), levels=(INFEASIBLE,), requests_per_cell=50, warmup_per_cell=0,
                          master_seed=4)
    recs = _run(plan, ["iak", "dcur", "h_mcop"])
    all_records.extend(recs)
    return recs


@pytest.fixture(scope="session")
def distance_records(all_records):
    plan = ExperimentPlan(grid_sizes=tuple(range(6, 21)), buckets=((0, 10), (80, 90)), levels=(1,),
                          requests_per_cell=330, warmup_per_cell=30, master_seed=5)
    recs = _run(plan, ["ldp"])
    all_records.extend(recs)
    return recs


# --- criteria ------------------------------------------------------------------


def test_c01_output_invariance(equality_records, acceptance_log):
    bad = [r for r in equality_records if not r.outputs_equal]
    expected = len(ALGORITHMS) * 3 * len(BUCKETS) * len(LEVELS) * 200
    ok = not bad and len(equality_records) == expected
    acceptance_log("C1 output invariance", ok, f"{len(equality_records)} records, {len(bad)} mismatches")
    assert len(equality_records) == expected
    assert not bad


def test_c02_oracle_equivalence(acceptance_log):
    rng = np.random.default_rng(2024)
    failures = 0
    for _ in range(2000):
        g = random_graph(rng)
        w = WEIGHTS[int(rng.integers(len(WEIGHTS)))]
        src, dst = (int(x) for x in rng.integers(g.node_count, size=2))
        bound = float(rng.uniform(0.1, 30.0))
        # SP: filter-by-bound of the exhaustive optimum
        sp = bounded_dijkstra(g, src, w, bound, dst)
        exact = shortest_distance(g, src, dst, lambda e: w.of(e.cost, e.delay))
        plain_sp = dijkstra(g, src, w, dst)
        if exact <= bound:
            failures += sp.dist[dst] != exact or extract_path(sp, dst) != extract_path(plain_sp, dst)
        else:
            failures += extract_path(sp, dst) is not None
        # SPT: filter-by-bound of unbounded distances
        spt = bounded_dijkstra(g, src, w, bound)
        full = dijkstra(g, src, w)
        failures += spt.dist != [d if d <= bound else math.inf for d in full.dist]
    acceptance_log("C2 oracle equivalence", failures == 0, f"2000 graphs, {failures} failures")
    assert failures == 0


def test_c03_structural_dominance(equality_records, aggregated_records, favourable_records,
                                  infeasible_n20_records, distance_records, all_records, acceptance_log):
    violations = [r for r in all_records
                  if r.bounded_pushes > r.plain_pushes or r.bounded_pops > r.plain_pops]
    ratios = {}
    for alg in ("iak", "dcur", "h_mcop"):
        recs = [r for r in infeasible_n20_records if r.algorithm == alg]
        ratios[alg] = float(np.mean([r.plain_pops / r.bounded_pops for r in recs]))
    ok = not violations and all(v >= 3 for v in ratios.values())
    acceptance_log("C3 structural dominance", ok,
                   f"{len(all_records)} records, {len(violations)} violations; n=20 infeasible "
                   f"plain/bounded pops: {_fmt(ratios)} (need >= 3)")
    assert not violations
    assert all(v >= 3 for v in ratios.values()), ratios


def test_c04_ldp_infeasible_speedup(aggregated_records, acceptance_log):
    m = _means(aggregated_records, "ldp", "delay_level")
    inf = m.pop("infeasible")
    ok = inf > 1.5 and all(inf > v for v in m.values())
    acceptance_log("C4 LDP infeasible speedup", ok, f"infeasible={inf:.3f} (> 1.5 and > every level); {_fmt(m)}")
    assert inf > 1.5
    assert all(inf > v for v in m.values())


def test_c05_ldp_feasible_neutral(aggregated_records, acceptance_log):
    m = _means(aggregated_records, "ldp", "delay_level")
    m.pop("infeasible")
    ok = all(0.7 <= v <= 1.3 for v in m.values())
    acceptance_log("C5 LDP feasible neutrality", ok, f"{_fmt(m)} (within [0.7, 1.3])")
    assert ok


def test_c06_spt_beats_sp(aggregated_records, acceptance_log):
    inf = {alg: _means(aggregated_records, alg, "delay_level")["infeasible"] for alg in ("ldp", "iak")}
    agg = {alg: _means(aggregated_records, alg, "all")["all"] for alg in ("ldp", "iak", "dcur")}
    ok = inf["iak"] > inf["ldp"] and agg["dcur"] > agg["iak"] > agg["ldp"]
    acceptance_log("C6 SPT vs SP ordering", ok, f"infeasible {_fmt(inf)}; aggregated {_fmt(agg)}")
    assert inf["iak"] > inf["ldp"]
    assert agg["dcur"] > agg["iak"] > agg["ldp"]


def test_c07_iak_always_beneficial(aggregated_records, acceptance_log):
    m = _means(aggregated_records, "iak", "delay_level")
    ok = len(m) == 8 and all(v > 1.0 for v in m.values())
    acceptance_log("C7 IAK always beneficial", ok, f"{_fmt(m)} (all > 1)")
    assert ok


def test_c08_favourable_case(favourable_records, acceptance_log):
    m = {alg: _means(favourable_records, alg, "all")["all"] for alg in ("dcur", "iak", "h_mcop")}
    ok = all(v >= 5 for v in m.values())
    acceptance_log("C8 favourable-case amplification", ok, f"n=20, 0-10%, infeasible: {_fmt(m)} (>= 5)")
    assert ok


def test_c09_distance_decay(distance_records, acceptance_log):
    m = _means(distance_records, "ldp", "bucket")
    ok = m["0-10"] > m["80-90"]
    acceptance_log("C9 distance decay", ok, f"LDP level 1: {_fmt(m)}")
    assert ok


def test_c10_engine_agreement(acceptance_log):
    rng = np.random.default_rng(77)
    failures = 0
    for _ in range(1000):
        g = random_graph(rng)
        w = WEIGHTS[int(rng.integers(len(WEIGHTS)))]
        src = int(rng.integers(g.node_count))
        bound = float(rng.uniform(0.1, 30.0))
        plain = dijkstra(g, src, w)
        failures += bellman_ford(g, src, w).dist != plain.dist
        failures += bellman_ford(g, src, w, bound).dist != bounded_dijkstra(g, src, w, bound).dist
        k1 = chong_ksp(g, src, 1, w)
        failures += [k1.dists(v)[0] if k1.labels[v] else math.inf for v in range(g.node_count)] != plain.dist
        for k in (2, 4):
            full, cut = chong_ksp(g, src, k, w), chong_ksp(g, src, k, w, bound)
            failures += any(cut.dists(v) != [d for d in full.dists(v) if d <= bound]
                            for v in range(g.node_count))
    acceptance_log("C10 engine agreement", failures == 0, f"1000 instances, {failures} failures")
    assert failures == 0


def test_c11_pop_monotonicity(acceptance_log):
    rng = np.random.default_rng(11)
    engines = {
        "dijkstra": lambda g, s, w, b: [r.dist[v] for r in [dijkstra(g, s, w)] for v in r.settled],
        "bounded_dijkstra": lambda g, s, w, b: [r.dist[v] for r in [bounded_dijkstra(g, s, w, b)] for v in r.settled],
        "chong_ksp": lambda g, s, w, b: [r.label_dist[i] for r in [chong_ksp(g, s, 3, w)] for i in r.popped],
        "bounded_chong_ksp": lambda g, s, w, b: [r.label_dist[i] for r in [chong_ksp(g, s, 3, w, b)]
                                                 for i in r.popped],
    }
    bad = defaultdict(int)
    for name, run in engines.items():
        for _ in range(1000):
            g = random_graph(rng)
            keys = run(g, int(rng.integers(g.node_count)), WEIGHTS[int(rng.integers(len(WEIGHTS)))],
                       float(rng.uniform(0.1, 30.0)))
            bad[name] += any(a > b for a, b in zip(keys, keys[1:]))
    total = sum(bad.values())
    acceptance_log("C11 pop-order monotonicity", total == 0,
                   f"1000 searches x {len(engines)} engines, violations: {dict(bad)}")
    assert total == 0
