import random
from fractions import Fraction

import pytest

from bvgf import dgla
from bvgf.action import (certified_window, classical_action, effective_action, field_polynomials, graph_amplitude,
                         make_context, random_symplectic_change, symplectic_change, tadpole_contraction,
                         verify_qme, wick_expectation)
from bvgf.graphs import enumerate_graphs
from bvgf.homotopy import shifted_splitting
from bvgf.oracle import class_sum, matching_sum
from bvgf.superpoly import SuperPolynomial

MODELS = dgla.shipped_models()
TT = MODELS["twisted_torus"]
TT_SHIFT = shifted_splitting(dgla.cohomology_splitting(TT), Fraction(1, 10))


def test_d_zero_model_is_tree_level_star():
    m = MODELS["so3_lambda"]
    ctx = make_context(m, truncation=(6, 2))
    S = effective_action(ctx, 4)
    V3, _ = field_polynomials(m)
    star = V3.scale(Fraction(1, 6)).substitute(dict(enumerate(ctx.psi)), target=SuperPolynomial(ctx.base_space, {}))
    assert S == star.with_truncation((6, 2))
    assert len(S.terms) == 27


def test_classical_action_has_kinetic_term():
    assert classical_action(TT) != field_polynomials(TT)[0].scale(Fraction(1, 6))


def test_abelian_action_vanishes():
    ctx = make_context(MODELS["u1_lambda"], truncation=(4, 2))
    assert effective_action(ctx, 4) == 0


def test_twisted_torus_default_representatives_give_zero():
    ctx = make_context(TT, truncation=(4, 2))
    assert effective_action(ctx, 3) == 0


def test_shifted_representatives_give_nonzero_action():
    ctx = make_context(TT, TT_SHIFT, truncation=(4, 1))
    S = effective_action(ctx, 2)
    assert len(S.terms) > 0
    assert S.parity == 0


def test_frames_agree():
    a = effective_action(make_context(TT, TT_SHIFT, (3, 1)), 2)
    b = effective_action(make_context(TT, TT_SHIFT, (3, 1), frame="model"), 2)
    assert a == b


@pytest.mark.parametrize("n,k", [(1, 1), (2, 0), (2, 2), (3, 1)])
def test_amplitude_weighted_oracles(n, k):
    ctx = make_context(TT, TT_SHIFT, (3, 9))
    cs = class_sum(ctx, n, k)
    assert cs == matching_sum(ctx, n, k)
    assert cs == wick_expectation(ctx, n, (3 * n - k) // 2)


def test_isomorphism_invariance():
    ctx = make_context(TT, TT_SHIFT, (3, 2))
    for g in enumerate_graphs(2, 2) + enumerate_graphs(3, 1):
        h = g.relabel(list(reversed(range(g.n_tri))))
        assert graph_amplitude(ctx, h) == graph_amplitude(ctx, g)


def test_tadpole_value_only_on_shifted_twisted_torus():
    for name, m in MODELS.items():
        P = dgla.build_propagator(dgla.cohomology_splitting(m)).matrix
        assert tadpole_contraction(m, P) == 0
    assert tadpole_contraction(TT, dgla.build_propagator(TT_SHIFT).matrix) != 0


def test_tadpole_policies():
    with pytest.raises(ValueError):
        make_context(TT, TT_SHIFT, tadpoles="half")
    zero = make_context(TT, TT_SHIFT, (4, 2), tadpoles="zero")
    genuine = make_context(TT, TT_SHIFT, (4, 2))
    assert verify_qme(genuine, effective_action(genuine, 3), 3).passed
    # self-loops dropped: the master equation breaks at one leg, hbar^2
    rep = verify_qme(zero, effective_action(zero, 3), 3)
    assert not rep.passed
    assert {(len(m), h) for m, h, _ in rep.offending} == {(1, 2)}


@pytest.mark.parametrize("name", ["so3_lambda", "u1_lambda"])
def test_qme_shipped(name):
    ctx = make_context(MODELS[name], truncation=(6, 2))
    assert verify_qme(ctx, effective_action(ctx, 4), 4).passed


def test_qme_negative_control():
    ctx = make_context(TT, TT_SHIFT, (4, 1))
    S = effective_action(ctx, 2)
    bad = S + ctx.base_space.gen("x1", ctx.truncation).scale(Fraction(1, 1000))
    rep = verify_qme(ctx, bad, 2)
    assert not rep.passed and rep.offending


def test_window_grows_with_vertices():
    w = [certified_window((6, 2), v) for v in range(1, 5)]
    assert all(a < b for a, b in zip(w, w[1:]))
    assert certified_window((4, 1), 2) == {(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)}


@pytest.mark.parametrize("name,split", [("so3_lambda", None), ("twisted_torus", TT_SHIFT)])
def test_darboux_independence(name, split):
    m = MODELS[name]
    split = split or dgla.cohomology_splitting(m)
    tr = (4, 1)
    S = effective_action(make_context(m, split, tr), 2)
    rng = random.Random(7)
    for _ in range(3):
        G = random_symplectic_change(split, rng)
        new, images = symplectic_change(split, G)
        S2 = effective_action(make_context(m, new, tr), 2)
        assert S2 == S.substitute(images, target=SuperPolynomial(new.space, {})).with_truncation(tr)


def test_thread_count_does_not_change_result(monkeypatch):
    ctx = make_context(TT, TT_SHIFT, (4, 1))
    monkeypatch.setenv("BVGF_THREADS", "1")
    a = effective_action(ctx, 2)
    monkeypatch.setenv("BVGF_THREADS", "3")
    b = effective_action(ctx, 2)
    assert a == b and a.to_json() == b.to_json()
