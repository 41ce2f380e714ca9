import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bvgf import dgla
from bvgf import linalg as la
from bvgf.action import effective_action, make_context
from bvgf.homotopy import shifted_splitting
from bvgf.links import (Component, LinkError, LinkWord, adjoint, casimir_check, conjugated, holonomy_trace,
                        link_graph_amplitude, link_wick_oracle, observable, observable_defect, rational_rotation,
                        _window_graphs)
from bvgf.superpoly import SuperPolynomial

MODELS = dgla.shipped_models()
REP = dgla.so3().rep

small = st.fractions(min_value=-2, max_value=2, max_denominator=3)
rotations = st.builds(rational_rotation, st.lists(st.integers(-2, 2), min_size=3, max_size=3), small)
lie_vectors = st.lists(small, min_size=3, max_size=3)


@st.composite
def words(draw):
    n = draw(st.integers(1, 4))
    segs = [draw(rotations) for _ in range(n)]
    ins = [draw(st.one_of(st.none(), lie_vectors)) for _ in range(n)]
    return Component(segs), ins


def test_rational_rotation_is_orthogonal():
    R = rational_rotation([1, 2, 0], Fraction(1, 3))
    assert la.is_zero(R.T @ R - la.eye(3))
    assert R[0, 0] != 1


def test_trace_frozen():
    comp = Component([la.eye(3)])
    assert holonomy_trace(comp, []) == 3
    # tr(rho(e1)^2) = -2 for the defining representation of so(3)
    comp2 = Component([la.eye(3), la.eye(3)])
    assert holonomy_trace(comp2, [[1, 0, 0], [1, 0, 0]], REP) == -2


@settings(max_examples=50, deadline=None)
@given(words(), st.integers(0, 3))
def test_cyclic_invariance(word, k):
    comp, ins = word
    k %= comp.n_marks
    assert holonomy_trace(comp.rotated(k), ins[k:] + ins[:k], REP) == holonomy_trace(comp, ins, REP)


@settings(max_examples=50, deadline=None)
@given(words(), st.data())
def test_gauge_covariance(word, data):
    comp, ins = word
    n = comp.n_marks
    gs = [data.draw(rotations) for _ in range(n)]
    # segment k runs from mark k to mark k+1; insertion k sits at its end
    segs = [gs[(k + 1) % n] @ comp.segments[k] @ la.inverse(gs[k]) for k in range(n)]
    new_ins = [None if X is None else adjoint(gs[(k + 1) % n], dgla.so3().rep_matrix(X))
               for k, X in enumerate(ins)]
    mats = [None if X is None else dgla.so3().rep_matrix(X) for X in ins]
    assert holonomy_trace(Component(segs), new_ins) == holonomy_trace(comp, mats)
    g = gs[0]
    assert holonomy_trace(conjugated(comp, g), [None if X is None else adjoint(g, X) for X in mats]) == \
        holonomy_trace(comp, mats)


def test_bad_segments():
    with pytest.raises(LinkError):
        Component([la.zeros(3, 3)])
    with pytest.raises(LinkError):
        Component([])
    with pytest.raises(LinkError):
        holonomy_trace(Component([la.eye(3)]), [None, None])


def test_odd_mark_vector_rejected():
    m = MODELS["twisted_torus"]
    k = len(m.factors["algebra"])
    mu = [0] * k
    mu[1] = 1
    link = LinkWord([Component([la.eye(3)], [mu])])
    with pytest.raises(LinkError):
        link.mark_vector(m, (0, 0))


def test_casimir_identity():
    assert casimir_check(dgla.so3())
    assert casimir_check(dgla.u1())


def test_defect_of_constant():
    m = MODELS["so3_lambda"]
    ctx = make_context(m, truncation=(4, 1))
    S = effective_action(ctx, 2)
    assert observable_defect(S, 1) == 0


def test_abelian_trivalent_vanishing():
    m = MODELS["u1_lambda"]
    ctx = make_context(m, truncation=(3, 1))
    link = LinkWord([Component([la.eye(1), la.eye(1), la.eye(1)])])
    seen = 0
    for marks in [((0, 0),), ((0, 0), (0, 1)), ((0, 0), (0, 1), (0, 2))]:
        for g in _window_graphs(marks, (3, 1), 2):
            if g.n_tri:
                seen += 1
                assert link_graph_amplitude(ctx, link, g) == 0
    assert seen > 0


def _link():
    h = rational_rotation([1, 2, 0], Fraction(1, 3))
    return LinkWord([Component([h, h @ h])])


def test_observable_bare_term_is_trace():
    m = MODELS["twisted_torus"]
    ctx = make_context(m, truncation=(2, 1))
    O = observable(ctx, _link(), 1)
    link = _link()
    assert O.value.coefficient((), 0) == holonomy_trace(link.components[0], [])
    assert O.value.parity == 0


@pytest.mark.parametrize("marks,nt,k", [(((0, 0), (0, 1)), 0, 0), (((0, 0),), 1, 2), (((0, 0), (0, 1)), 1, 1)])
def test_link_oracle(marks, nt, k):
    m = MODELS["twisted_torus"]
    ctx = make_context(m, shifted_splitting(dgla.cohomology_splitting(m)), truncation=(3, 1))
    link = _link()
    lhs = link_wick_oracle(ctx, link, marks, nt, k)
    rhs = SuperPolynomial(ctx.base_space, {})
    for g in _window_graphs(marks, (k, 9), nt):
        if g.n_tri == nt and sum(g.legs) == k:
            rhs = rhs + link_graph_amplitude(ctx, link, g).scale(Fraction(1, g.aut_order)).times_hbar(g.loop_count)
    assert lhs == rhs
