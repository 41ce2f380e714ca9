import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bvgf.graphs import (Graph, GraphBoundError, automorphism_order, canonical, enumerate_graphs,
                         enumerate_link_graphs, loop_number, matchings, wick_sum_oracle)


def codes(n, k, **kw):
    return [(g.encoding(), g.aut_order) for g in enumerate_graphs(n, k, **kw)]


def test_frozen_small_classes():
    assert codes(1, 3) == [("T1|U|E|L3", 6)]
    assert codes(1, 1) == [("T1|U|E0-0|L1", 2)]
    assert codes(2, 0) == [("T2|U|E0-0,0-1,1-1|L0,0", 8), ("T2|U|E0-1,0-1,0-1|L0,0", 12)]
    assert codes(2, 2) == [("T2|U|E0-0,0-1|L0,2", 4), ("T2|U|E0-1,0-1|L1,1", 4)]


def test_frozen_counts():
    # connected cubic vacuum multigraphs on 4 vertices: 5 with loops, 2 without
    assert len(enumerate_graphs(4, 0)) == 5
    assert len(enumerate_graphs(4, 0, allow_tadpoles=False)) == 2
    k4 = [g for g in enumerate_graphs(4, 0, allow_tadpoles=False) if len(set(g.edges)) == 6]
    assert [g.aut_order for g in k4] == [24]


def test_loop_numbers():
    assert all(g.loop_count == 2 for g in enumerate_graphs(2, 0))
    assert all(g.loop_count == 0 for g in enumerate_graphs(1, 3))


def test_parity_and_bounds():
    assert enumerate_graphs(1, 2) == []
    assert enumerate_graphs(0, 0) == []
    with pytest.raises(GraphBoundError):
        enumerate_graphs(9, 0, max_trivalent=8)
    with pytest.raises(GraphBoundError):
        wick_sum_oracle(5, 1)


def test_matchings_count():
    for n in range(0, 9, 2):
        expected = math.prod(range(n - 1, 0, -2)) if n else 1
        assert sum(1 for _ in matchings(range(n))) == expected


@pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 5) for k in range(4) if (3 * n - k) % 2 == 0])
def test_class_sum_matches_wick(n, k):
    lhs = sum((Fraction(1, g.aut_order) for g in enumerate_graphs(n, k, connected_only=False)), Fraction(0))
    assert lhs == wick_sum_oracle(n, k)


@pytest.mark.parametrize("n,k", [(2, 0), (2, 2), (3, 1), (3, 3)])
def test_connected_sums_match_wick(n, k):
    lhs = sum((Fraction(1, g.aut_order) for g in enumerate_graphs(n, k)), Fraction(0))
    assert lhs == wick_sum_oracle(n, k, connected_only=True)


@pytest.mark.parametrize("n,k", [(2, 0), (3, 1), (4, 0)])
def test_tadpole_free_sums(n, k):
    lhs = sum((Fraction(1, g.aut_order) for g in enumerate_graphs(n, k, allow_tadpoles=False,
                                                                  connected_only=False)), Fraction(0))
    rhs = wick_sum_oracle(n, k, amplitude=lambda g: 0 if g.has_tadpole() else 1)
    assert lhs == rhs


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 3), st.permutations(range(n)))))
def test_canonical_form_is_relabel_invariant(data):
    n, k, perm = data
    if (3 * n - k) % 2:
        return
    for g in enumerate_graphs(n, k, connected_only=False):
        h = g.relabel(list(perm))
        assert canonical(h).encoding() == g.encoding()
        assert automorphism_order(h) == g.aut_order


def test_link_graphs_rotation_quotient():
    fixed = enumerate_link_graphs(1, [3], 1, 0, rotations=False)
    rot = enumerate_link_graphs(1, [3], 1, 0, rotations=True)
    # a tripod on the circle, or a tadpole vertex plus a chord between two marks
    assert len(fixed) == 4 and len(rot) == 2
    tripod = "T1|U0.0,0.1,0.2|E0-1,0-2,0-3|L0,0,0,0"
    assert {g.encoding(): g.aut_order for g in fixed}[tripod] == 1
    assert {g.encoding(): g.aut_order for g in rot}[tripod] == 3
    assert all(loop_number(g) == 2 for g in rot)


def test_link_graphs_need_marks():
    with pytest.raises(ValueError):
        enumerate_link_graphs(1, [0], 1, 1)
