import warnings

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avoidance_markov import (
    Graph,
    IllConditionedWarning,
    SingularChainError,
    absorption_from_fundamental,
    absorption_probabilities,
    build_chain,
    fundamental_for,
    hitting_cost,
    hitting_time,
    incremental_fundamental,
    load_graph,
    on_all_states,
    random_graph,
)
from conftest import assert_close, chains


def path_chain(w12=1.0, w23=1.0):
    g = Graph.from_edges(["1", "2", "3"], [("1", "2", 1, w12), ("2", "3", 1, w23)], directed=False)
    return build_chain(g)


def test_path_fundamental_and_hitting_time():
    f = fundamental_for(path_chain(), [2])
    assert_close(f.values, [[2, 2], [1, 2]])
    assert_close(hitting_time(f), [4, 3])
    assert_close(f.values @ (np.eye(2) - f.partition.p_tt), np.eye(2))


def test_path_hitting_cost_with_costs():
    c = path_chain(w12=2.0, w23=1.0)
    f = fundamental_for(c, [2])
    assert_close(c.out_cost[:2], [2, 1.5])
    assert_close(hitting_cost(f), [7, 5])


def test_example1_hitting_times(ex1):
    g, c = ex1
    s = g.index("1")
    for target, h in [("4", 2.5), ("2", 4.0), ("3", 5.0), ("5", 5.0)]:
        f = fundamental_for(c, [g.index(target)])
        assert hitting_time(f)[f.partition.position(s)] == pytest.approx(h, abs=1e-12)


def test_single_absorbing_state_absorbs_everything(ex1):
    g, c = ex1
    q = absorption_probabilities(fundamental_for(c, [g.index("3")]))
    assert_close(q.values, np.ones((4, 1)))


def test_on_all_states_fills_absorbing(ex1):
    g, c = ex1
    f = fundamental_for(c, [g.index("4")])
    h = on_all_states(f, hitting_time(f))
    assert h[g.index("4")] == 0 and h[g.index("1")] == pytest.approx(2.5)


def sticky_chain(loop):
    edges = [("a", "a", loop), ("a", "b", 1), ("b", "a", 1), ("b", "t", 1), ("t", "b", 1)]
    return build_chain(Graph.from_edges(["a", "b", "t"], edges, directed=True))


def test_ill_conditioned_chain_warns():
    # a nearly closed self-loop makes I - P_TT nearly singular
    with pytest.warns(IllConditionedWarning):
        f = fundamental_for(sticky_chain(1e13), [2])
    assert f.ill_conditioned


def test_numerically_singular_chain_is_rejected():
    with pytest.raises(SingularChainError):
        fundamental_for(sticky_chain(1e17), [2])


@settings(max_examples=60, deadline=None)
@given(chains(max_n=12), st.data())
def test_fundamental_matrix_invariants(c, data):
    k = data.draw(st.integers(1, c.n - 1))
    absorbing = data.draw(st.permutations(list(range(c.n))))[:k]
    f = fundamental_for(c, absorbing)
    m = np.eye(len(f.partition.transient)) - f.partition.p_tt
    assert np.abs(f.values @ m - np.eye(m.shape[0])).max() <= 1e-9
    assert (f.values >= 0).all()
    assert (hitting_time(f) >= 1 - 1e-12).all()
    q = absorption_probabilities(f)
    assert_close(q.values.sum(axis=1), 1.0)
    # unit costs: cost equals time
    assert_close(hitting_cost(f), hitting_time(f))


@settings(max_examples=40, deadline=None)
@given(chains(max_n=10), st.data())
def test_incremental_matches_direct(c, data):
    order = data.draw(st.permutations(list(range(c.n))))
    k1 = data.draw(st.integers(1, c.n - 2))
    k2 = data.draw(st.integers(k1 + 1, c.n - 1))
    first, both = order[:k1], order[:k2]
    inc = incremental_fundamental(fundamental_for(c, first), order[k1:k2])
    direct = fundamental_for(c, both)
    assert inc.partition.transient == direct.partition.transient
    scale = np.maximum(1.0, np.abs(direct.values))
    assert (np.abs(inc.values - direct.values) / scale).max() <= 1e-8


@settings(max_examples=40, deadline=None)
@given(chains(max_n=10), st.data())
def test_normalized_column_matches_absorption(c, data):
    t, j = data.draw(st.permutations(list(range(c.n))))[:2]
    f_t = fundamental_for(c, [t])
    via_f = absorption_from_fundamental(f_t, j)
    q = absorption_probabilities(fundamental_for(c, [t, j]))
    rows = [f_t.partition.position(i) for i in q.partition.transient]
    assert np.abs(via_f[rows] - q.values[:, 1]).max() <= 1e-9
    assert via_f[f_t.partition.position(j)] == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**31 - 1))
def test_commute_time_equals_volume_times_resistance(n, seed):
    # independent oracle for undirected graphs: H_i^j + H_j^i = vol(G) * R_ij
    g = random_graph(n, 0.4, seed, directed=False)
    c = build_chain(g)
    ng = nx.Graph()
    ng.add_edges_from((e.src, e.dst) for e in g.edges)
    vol = float(c.out_degree.sum())
    i, j = 0, n - 1
    fi = fundamental_for(c, [j])
    fj = fundamental_for(c, [i])
    commute = hitting_time(fi)[fi.partition.position(i)] + hitting_time(fj)[fj.partition.position(j)]
    assert commute == pytest.approx(vol * nx.resistance_distance(ng, i, j), rel=1e-8)


def test_no_warning_on_well_conditioned(ex1):
    _, c = ex1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fundamental_for(c, [3])
