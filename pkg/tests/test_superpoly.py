from fractions import Fraction

import pytest
from hypothesis import given, settings

from bvgf.superpoly import (IncompatibleOperands, OddSymplecticSpace, ParityError, SuperPolynomial,
                            SuperSpace, bracket, delta, homotopy_residual, qme_residual, time_derivative)
from strategies import SPACE, homogeneous, polys

S2 = OddSymplecticSpace.standard(2)
x1, x2, y1, y2 = (S2.gen(n) for n in ("x1", "x2", "y1", "y2"))


def sgn(k):
    return -1 if k % 2 else 1


# --- frozen values --------------------------------------------------------

def test_delta_frozen():
    assert delta(x1 * y1) == S2.one()
    assert delta(x1 * x1 * y1) == x1.scale(2)
    assert delta(y1 * y2 * x1 * x2) == x2 * y2 - x1 * y1
    assert delta(x1 * x2) == 0


def test_bracket_frozen():
    assert bracket(x1, y1) == S2.one()
    assert bracket(y1, x1) == S2.one()
    assert bracket(x1, x2) == 0
    assert bracket(x1 * x1, y1) == x1.scale(2)


def test_odd_square_vanishes():
    assert y1 * y1 == 0
    assert (y1 * y2) == -(y2 * y1)


def test_from_terms_sorts_with_sign():
    p = SuperPolynomial.from_terms(S2, [((3, 2), 0, Fraction(1))])
    assert p == -(y1 * y2)


def test_truncation_drops_terms():
    tr = (2, 1)
    a = S2.gen("x1", tr)
    p = a * a * a
    assert p == 0
    assert (a.times_hbar(2)) == 0
    assert a.times_hbar(1).coefficient((0,), 1) == 1


def test_incompatible_operands():
    with pytest.raises(IncompatibleOperands):
        _ = x1 + S2.gen("x1", (3, 1))
    with pytest.raises(IncompatibleOperands):
        delta(SuperSpace((("a", 0, 0),)).gen("a"))


def test_qme_needs_even():
    with pytest.raises(ParityError):
        qme_residual(y1)


def test_json_roundtrip():
    p = (x1 * x2 * y1).scale(Fraction(-3, 7)) + y2.times_hbar()
    obj = p.to_json_obj()
    assert obj["terms"][0]["coeff"].count("/") == 1
    assert SuperPolynomial.from_json_obj(obj, S2) == p


def test_time_derivative_exact_on_quadratics():
    ts = [Fraction(i, 4) for i in range(5)]
    samples = [x1.scale(t * t) for t in ts]
    d = time_derivative(samples, Fraction(1, 4))
    assert all(di == x1.scale(2 * t) for di, t in zip(d, ts))


def test_homotopy_residual_constant_family():
    S = (x1 * x2).scale(3) + (x1 * y1 * y2)
    r1, r2 = homotopy_residual([S] * 3, [S2.zero()] * 3)
    assert all(r == qme_residual(S) for r in r1)
    assert all(r == 0 for r in r2)


# --- laws -----------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(polys())
def test_delta_squares_to_zero(f):
    assert delta(delta(f)) == 0


@settings(max_examples=100, deadline=None)
@given(homogeneous(), homogeneous())
def test_bracket_symmetry(F, G):
    (p, f), (q, g) = F, G
    assert bracket(f, g) == bracket(g, f).scale(sgn(p * q))


@settings(max_examples=100, deadline=None)
@given(homogeneous(), homogeneous())
def test_delta_derivation_of_bracket(F, G):
    (p, f), (q, g) = F, G
    assert delta(bracket(f, g)) == -bracket(delta(f), g) + bracket(f, delta(g)).scale(sgn(p + 1))


@settings(max_examples=100, deadline=None)
@given(homogeneous(), homogeneous(), homogeneous())
def test_jacobi(F, G, H):
    (p, f), (q, g), (_, h) = F, G, H
    lhs = bracket(f, bracket(g, h))
    rhs = bracket(bracket(f, g), h).scale(sgn(p + 1)) + bracket(g, bracket(f, h)).scale(sgn((p + 1) * (q + 1)))
    assert lhs == rhs


@settings(max_examples=100, deadline=None)
@given(homogeneous(), homogeneous(), homogeneous())
def test_bracket_leibniz(F, G, H):
    (p, f), (q, g), (_, h) = F, G, H
    assert bracket(f, g * h) == bracket(f, g) * h + (g * bracket(f, h)).scale(sgn((p + 1) * q))


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(f, g, h):
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f - f == 0


@settings(max_examples=60, deadline=None)
@given(polys())
def test_json_roundtrip_property(f):
    assert SuperPolynomial.from_json_obj(f.to_json_obj(), SPACE) == f
