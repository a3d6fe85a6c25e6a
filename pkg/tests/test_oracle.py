import math

import numpy as np
import pytest
from hypothesis import assume, given, settings

from avoidance_markov import (
    AvoidanceQuery,
    Graph,
    GraphError,
    avoidance_fundamental,
    avoidance_hitting_cost,
    avoidance_hitting_time,
    build_chain,
    estimate_avoidance,
    fundamental_for,
    hitting_time,
    sample_walk,
    series_metrics,
)
from avoidance_markov.oracle import BLOCK, RNG_ALGORITHM, estimate_all, sample_walks
from conftest import idx, queries


def within(report, x, k=3.0, rel=0.02):
    return abs(report.estimate - x) <= max(k * report.standard_error, rel * abs(x))


def test_sample_walk_is_deterministic(ex1):
    _, c = ex1
    a = sample_walk(c, 0, [3], rng_seed=9)
    b = sample_walk(c, 0, [3], rng_seed=9)
    assert a == b
    assert a.outcome == "hit-target" and a.states[0] == 0 and a.states[-1] == 3


def test_sample_walk_truncation_and_errors(ex1):
    _, c = ex1
    w = sample_walk(c, 0, [3], max_steps=1, rng_seed=0)
    assert w.outcome == "truncated" and w.steps == 1
    assert sample_walk(c, 0, [0]).steps == 0
    with pytest.raises(GraphError):
        sample_walk(c, 0, [])


def test_example1_leg(ex1):
    g, c = ex1
    q = AvoidanceQuery(*idx(g, "1", "5"), frozenset(idx(g, "4")))
    est = estimate_all(c, q, 20000, rng_seed=1)
    assert est["hitting-time"].estimate == 1.0
    assert est["hitting-time"].standard_error == 0.0
    assert est["feasibility"].acceptance_rate == pytest.approx(0.5, abs=0.02)
    assert within(est["feasibility"], 0.5)
    assert est["feasibility"].rng == RNG_ALGORITHM and est["feasibility"].seed == 1


def test_no_rejection_matches_classical(ex1):
    g, c = ex1
    q = AvoidanceQuery(*idx(g, "1", "4"))
    est = estimate_all(c, q, 50000, rng_seed=2)
    assert est["feasibility"].acceptance_rate == 1.0
    f = fundamental_for(c, [q.target])
    assert within(est["hitting-time"], hitting_time(f)[0], rel=0.0)
    for m in f.partition.transient:
        assert within(est[f"visits:{m}"], f.entry(q.source, m), rel=0.0)


def test_zero_probability_event(ex3b):
    g, c = ex3b
    q = AvoidanceQuery(*idx(g, "1", "3"), frozenset(idx(g, "2")))
    rep = estimate_avoidance(c, q, "hitting-time", 200000, rng_seed=0)
    assert rep.samples_accepted == 0 and rep.samples_total == 200000
    assert rep.infeasible_evidence
    assert math.isnan(rep.estimate)


def test_worker_count_does_not_change_the_sample(ex1):
    _, c = ex1
    a = sample_walks(c, 0, [3], 3 * BLOCK + 17, rng_seed=5, workers=1)
    b = sample_walks(c, 0, [3], 3 * BLOCK + 17, rng_seed=5, workers=3)
    for x, y in zip((a.steps, a.cost, a.terminal, a.visits), (b.steps, b.cost, b.terminal, b.visits)):
        np.testing.assert_array_equal(x, y)


def test_top_up_reaches_the_accepted_target(ex1):
    g, c = ex1
    q = AvoidanceQuery(*idx(g, "1", "5"), frozenset(idx(g, "4")))
    est = estimate_all(c, q, 1000, rng_seed=3, min_accepted=30000)
    assert est["feasibility"].samples_accepted >= 30000


def test_unknown_quantity(ex1):
    _, c = ex1
    with pytest.raises(GraphError):
        estimate_avoidance(c, AvoidanceQuery(0, 3), "bogus", 10)


@settings(max_examples=8, deadline=None)
@given(queries(max_n=7))
def test_sampler_matches_closed_forms(args):
    c, s, t, o = args
    q = AvoidanceQuery(s, t, frozenset({o}))
    r = avoidance_hitting_time(c, q)
    assume(r.feasibility > 0.05)
    est = estimate_all(c, q, 20000, rng_seed=s + 7 * t, min_accepted=20000)
    # a loose 4-sigma band: this runs on many random queries
    assert within(est["feasibility"], r.feasibility, k=4)
    assert within(est["hitting-time"], r.value, k=4)
    assert within(est["hitting-cost"], avoidance_hitting_cost(c, q).value, k=4)
    af = avoidance_fundamental(c, q)
    for m, v in zip(af.transient, af.source_row):
        assert within(est[f"visits:{m}"], v, k=4)


def test_series_single_step():
    c = build_chain(Graph.from_edges(["s", "t"], [("s", "t", 1), ("t", "s", 1)]))
    sr = series_metrics(c, AvoidanceQuery(0, 1), K=1)
    assert sr.feasibility == 1.0 and sr.hitting_time == 1.0 and sr.converged


def test_series_example1_single_surviving_walk(ex1):
    g, c = ex1
    sr = series_metrics(c, AvoidanceQuery(*idx(g, "1", "4"), frozenset(idx(g, "5"))), K=10)
    assert sr.hitting_time == pytest.approx(3.0, abs=1e-12)
    assert sr.feasibility == pytest.approx(0.5, abs=1e-12)


def test_series_path_hitting_time(ex3b):
    g, c = ex3b
    sr = series_metrics(c, AvoidanceQuery(*idx(g, "1", "3")), K=60)
    assert abs(sr.hitting_time - 4.0) <= 1e-6
    assert abs(sr.hitting_time - 4.0) <= sr.hitting_time_tail


def test_series_reports_unconverged(ex3b):
    g, c = ex3b
    sr = series_metrics(c, AvoidanceQuery(*idx(g, "1", "3")), K=5)
    assert not sr.converged and sr.envelope > 1e-8
    with pytest.raises(GraphError):
        series_metrics(c, AvoidanceQuery(0, 2), K=0)


@settings(max_examples=40, deadline=None)
@given(queries(max_n=9))
def test_series_agrees_with_closed_form(args):
    c, s, t, o = args
    q = AvoidanceQuery(s, t, frozenset({o}))
    sr = series_metrics(c, q, K=200)
    assume(sr.converged)
    r = avoidance_hitting_time(c, q)
    assert abs(sr.feasibility - r.feasibility) <= sr.feasibility_tail + 1e-6
    if r.feasible:
        assert abs(sr.hitting_time - r.value) <= sr.hitting_time_tail + 1e-6
        af = avoidance_fundamental(c, q)
        assert (np.abs(sr.visits - af.source_row) <= sr.visits_tail + 1e-6).all()
