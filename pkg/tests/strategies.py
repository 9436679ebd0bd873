"""Hypothesis strategies shared by the property tests."""
from hypothesis import assume
from hypothesis import strategies as st

from ampcg.synth import GenConfig, random_amp_cg


@st.composite
def amp_graphs(draw, min_p=3, max_p=7):
    p = draw(st.integers(min_p, max_p))
    N = draw(st.sampled_from([1.0, 1.5, 2.0, 3.0]))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_amp_cg(GenConfig(p, min(N, p - 1), seed))


@st.composite
def graphs_with_pair(draw, min_p=3, max_p=7):
    """A random graph together with two non-adjacent vertices."""
    g = draw(amp_graphs(min_p, max_p))
    pairs = [(u, v) for i, u in enumerate(g.vertices) for v in g.vertices[i + 1:] if not g.is_adjacent(u, v)]
    assume(pairs)
    u, v = draw(st.sampled_from(pairs))
    return g, u, v
