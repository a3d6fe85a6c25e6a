import numpy as np
import pytest
from hypothesis import strategies as st

from avoidance_markov import build_chain, example1, example3b, random_graph


@st.composite
def chains(draw, max_n=9, min_n=3):
    """Random strongly connected (directed) or connected (undirected) chains."""
    n = draw(st.integers(min_n, max_n))
    directed = draw(st.booleans())
    p = draw(st.sampled_from([0.25, 0.4, 0.7]))
    seed = draw(st.integers(0, 2**31 - 1))
    return build_chain(random_graph(n, p, seed, directed))


@st.composite
def queries(draw, max_n=9):
    """A chain with a distinct (s, t, o) triple."""
    c = draw(chains(max_n=max_n))
    s, t, o = draw(st.permutations(list(range(c.n))))[:3]
    return c, int(s), int(t), int(o)


@pytest.fixture
def ex1():
    g = example1()
    return g, build_chain(g)


@pytest.fixture
def ex3b():
    g = example3b()
    return g, build_chain(g)


def idx(g, *labels):
    return [g.index(x) for x in labels]


def assert_close(a, b, tol=1e-9):
    np.testing.assert_allclose(a, b, rtol=tol, atol=tol)
