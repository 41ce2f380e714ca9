"""Wilson-loop observables in the finite model.

A point on the link is a mark slot.  It carries a position in the cyclic
order of its component and a vector ``mu`` of the commutative factor (default:
the unit).  A model basis vector ``X_a (x) w_p`` seen from a mark evaluates to
``tr(mu w_p) X_a`` with the degree-3 trace of the commutative factor, so the
unit picks out top forms.  Univalent vertices are therefore the linear
polynomials ``L_a = sum_p tr(mu w_p) c_(a,p)`` tensored with the insertion
``e_a``.  Mark vectors must have even degree, which keeps observables even.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import dgla
from . import linalg as la
from .action import AmplitudeContext, _falling, contract, model_frame
from .graphs import Graph, _link_graphs, graph_of_matching, partial_matchings
from .superpoly import SuperPolynomial, bracket, delta


class LinkError(ValueError):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(eq=False)
class Component:
    """Cyclic sequence of holonomy segments; segment k runs from mark k to mark k+1."""

    segments: list
    mark_vectors: list = field(default_factory=list)

    def __post_init__(self):
        if not self.segments:
            raise LinkError("E_LINK", "a component needs at least one mark")
        self.segments = [la.qarray(s) for s in self.segments]
        for s in self.segments:
            if s.shape[0] != s.shape[1] or la.rank(s) != s.shape[0]:
                raise LinkError("E_LINK", "holonomy segments must be invertible square matrices")
        if not self.mark_vectors:
            self.mark_vectors = [None] * len(self.segments)
        if len(self.mark_vectors) != len(self.segments):
            raise LinkError("E_LINK", "one mark vector (or None) per segment")

    @property
    def n_marks(self):
        return len(self.segments)

    def total_holonomy(self):
        out = la.eye(self.segments[0].shape[0])
        for s in self.segments:
            out = s @ out
        return out

    def rotated(self, k: int) -> "Component":
        k %= self.n_marks
        return Component(self.segments[k:] + self.segments[:k], self.mark_vectors[k:] + self.mark_vectors[:k])


@dataclass(eq=False)
class LinkWord:
    components: list
    representation: tuple = ()

    def __post_init__(self):
        if not self.components:
            raise LinkError("E_LINK", "a link needs at least one component")

    @property
    def marks(self):
        return tuple((c, p) for c, comp in enumerate(self.components) for p in range(comp.n_marks))

    def mark_vector(self, model: dgla.CyclicDGLA, mark):
        mu = self.components[mark[0]].mark_vectors[mark[1]]
        k = len(model.factors.get("algebra", [None]))
        if mu is None:
            v = la.zeros(k)
            v[model.factors.get("unit", 0)] = Fraction(1)
            return v
        v = la.qarray(mu)
        if len(v) != k:
            raise LinkError("E_LINK", f"mark vector must have {k} entries")
        degs = model.factors.get("algebra_degrees")
        if degs and any(v[p] != 0 and degs[p] % 2 for p in range(k)):
            raise LinkError("E_LINK", "mark vectors must have even degree")
        return v

    @classmethod
    def from_document(cls, doc: dict) -> "LinkWord":
        comps = []
        for comp in doc["components"]:
            segs = [s["holonomy"] for s in comp]
            mus = [(s.get("mark") or {}).get("vector") for s in comp]
            comps.append(Component(segs, mus))
        return cls(comps)


def holonomy_trace(component: Component, insertions, representation=None):
    """Tr(X_n hol_n ... X_1 hol_1), X_k the insertion at mark k (``None`` = none).

    Insertions are matrices, or Lie coefficient vectors when ``representation``
    (a sequence of matrices rho(e_a)) is given.  An empty list means no
    insertion anywhere.
    """
    n = component.n_marks
    if not insertions:
        insertions = [None] * n
    if len(insertions) != n:
        raise LinkError("E_ARITY", f"{len(insertions)} insertions for {n} marks")
    out = la.eye(component.segments[0].shape[0])
    for X, hol in zip(insertions, component.segments):
        out = hol @ out
        if X is not None:
            out = _as_matrix(X, representation) @ out
    return sum((out[i, i] for i in range(out.shape[0])), Fraction(0))


def _as_matrix(X, representation):
    X = np.asarray(X, dtype=object)
    if X.ndim == 2:
        return X
    out = la.zeros(*representation[0].shape)
    for a, c in enumerate(X):
        if c != 0:
            out = out + c * representation[a]
    return out


def adjoint(g: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Ad_g on a representation matrix."""
    return g @ X @ la.inverse(g)


def conjugated(component: Component, g: np.ndarray) -> Component:
    gi = la.inverse(g)
    return Component([g @ s @ gi for s in component.segments], list(component.mark_vectors))


# ---------------------------------------------------------------------------
# observables

@dataclass
class Observable:
    value: SuperPolynomial
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value.parity != 0:
            raise LinkError("E_PARITY", "observables are even")


def _lie_layout(model):
    m = model.lie.dim if model.lie is not None else 1
    k = model.dim // m
    return m, k


def _trace_functional(model, mu):
    """p -> tr(mu w_p), read off the a = 0 block of the model pairing."""
    _, k = _lie_layout(model)
    f00 = model.lie.form[0, 0] if model.lie is not None else 1
    w = model.pairing
    return [sum((mu[q] * w[q, p] for q in range(k) if mu[q] != 0), Fraction(0)) / f00 for p in range(k)]


def _univalent_poly(coord, model, a, mu):
    _, k = _lie_layout(model)
    ev = _trace_functional(model, mu)
    items = [((a * k + p,), 0, ev[p]) for p in range(k) if ev[p] != 0]
    return SuperPolynomial.from_terms(coord, items)


def link_graph_amplitude(ctx: AmplitudeContext, link: LinkWord, g: Graph, fixed=None,
                         special_loop: int = 0) -> SuperPolynomial:
    """Sum over Lie labels of the univalent vertices of (graph factor) x (traces).

    ``fixed`` maps marks not hosting a vertex to fixed insertion vectors.
    """
    model = ctx.model
    if model.lie is None or not model.lie.rep:
        raise LinkError("E_LINK", "model has no Lie representation")
    rep = model.lie.rep
    fr = model_frame(model, ctx.psi)
    base = ctx.base_space
    P = ctx.propagator.matrix
    edges = []
    for u, v in g.edges:
        if u == v and ctx.tadpoles == "zero":
            return SuperPolynomial(base, {})
        edges.append((u, v, P))
    m, _ = _lie_layout(model)
    n = g.n_vertices
    divisors = [_falling(g.internal_degree(v)) for v in range(g.n_tri)] + [1] * g.n_uni
    fixed = fixed or {}
    total = SuperPolynomial(base, {})
    mus = [link.mark_vector(model, mk) for mk in g.marks]
    for labels in itertools.product(range(m), repeat=g.n_uni):
        per_comp = [[None] * comp.n_marks for comp in link.components]
        for mk, vec in fixed.items():
            per_comp[mk[0]][mk[1]] = vec
        for (c, p), a in zip(g.marks, labels):
            e = la.zeros(m)
            e[a] = Fraction(1)
            per_comp[c][p] = e
        tr = Fraction(1)
        for comp, ins in zip(link.components, per_comp):
            tr *= holonomy_trace(comp, ins, rep)
            if tr == 0:
                break
        if tr == 0:
            continue
        polys = {v: fr.vertex for v in range(g.n_tri)}
        for j, a in enumerate(labels):
            polys[g.n_tri + j] = _univalent_poly(fr.coord, model, a, mus[j])
        factors = [([v], (lambda work, v=v: work.copy(polys[v], v))) for v in range(n)]
        amp = contract(base, fr.coord, n, factors, edges, list(g.legs), fr.legs, divisors)
        total = total + amp.scale(tr)
    return total


def _mark_subsets(link: LinkWord, excluded=()):
    avail = [mk for mk in link.marks if mk not in excluded]
    for r in range(len(avail) + 1):
        yield from itertools.combinations(avail, r)


def _window_graphs(marks, truncation, max_vertices):
    D, L = truncation
    u = len(marks)
    for t in range(max_vertices + 1):
        for k in range(D + 1):
            if (3 * t + u - k) % 2 or k > 3 * t + u:
                continue
            loops = (3 * t + u - k) // 2 - t
            if loops < 0 or loops > L:
                continue
            if t == 0 and u == 0:
                continue
            for g in _link_graphs(t, tuple(marks), k, False):
                yield _at_marks(g, marks)


def _at_marks(g: Graph, marks) -> Graph:
    """Enumeration renumbers slots per component; put the actual marks back."""
    actual = tuple(sorted(marks))
    return Graph(g.n_tri, g.edges, g.legs, actual, g.aut_order, g.loop_count)


def _expansion(ctx, link, max_vertices, excluded=(), fixed=None, framing=1):
    base = ctx.base_space
    total = SuperPolynomial(base, {})
    for marks in _mark_subsets(link, excluded):
        if not marks:
            bare = Fraction(1)
            per_comp = [[None] * comp.n_marks for comp in link.components]
            for mk, vec in (fixed or {}).items():
                per_comp[mk[0]][mk[1]] = vec
            for comp, ins in zip(link.components, per_comp):
                bare *= holonomy_trace(comp, ins, ctx.model.lie.rep)
            total = total + SuperPolynomial(base, {((), 0): bare})
            continue
        for g in _window_graphs(marks, ctx.truncation, max_vertices):
            amp = link_graph_amplitude(ctx, link, g, fixed)
            if amp.terms:
                total = total + amp.scale(Fraction(1, g.aut_order)).times_hbar(g.loop_count)
    return total.with_truncation(ctx.truncation).scale(framing)


def observable(ctx: AmplitudeContext, link: LinkWord, max_vertices: int = 2, framing=1) -> Observable:
    """Sum over link graphs: marks host univalent vertices, weights hbar^(E - V_t) / |Aut|.

    ``framing`` is an optional user-supplied scalar multiplying the result.
    """
    value = _expansion(ctx, link, max_vertices, framing=Fraction(framing))
    return Observable(value, {"kind": "wilson", "marks": len(link.marks), "truncation": list(ctx.truncation),
                              "max_vertices": max_vertices})


def intersection_observable(ctx: AmplitudeContext, link: LinkWord, special_points, max_vertices: int = 2,
                            framing=1) -> Observable:
    """Like :func:`observable` with one extra edge between the two special marks,
    weighted by the Casimir tensor and not counted as a loop."""
    p, q = (tuple(s) for s in special_points)
    if p == q:
        raise LinkError("E_CONFLICT", "special marks coincide")
    for mk in (p, q):
        if mk not in link.marks:
            raise LinkError("E_CONFLICT", f"mark {mk} is not on the link")
    lie = ctx.model.lie
    I = lie.casimir()
    total = SuperPolynomial(ctx.base_space, {})
    for a in range(lie.dim):
        for b in range(lie.dim):
            if I[a, b] == 0:
                continue
            ea, eb = la.zeros(lie.dim), la.zeros(lie.dim)
            ea[a] = Fraction(1)
            eb[b] = Fraction(1)
            part = _expansion(ctx, link, max_vertices, excluded=(p, q), fixed={p: ea, q: eb},
                              framing=Fraction(framing))
            total = total + part.scale(I[a, b])
    return Observable(total, {"kind": "intersection", "special": [list(p), list(q)],
                              "truncation": list(ctx.truncation), "max_vertices": max_vertices})


def observable_defect(S: SuperPolynomial, O) -> SuperPolynomial:
    """hbar Delta O + {S, O}; ``O`` may be an Observable, a polynomial or a scalar."""
    if isinstance(O, Observable):
        O = O.value
    elif not isinstance(O, SuperPolynomial):
        O = SuperPolynomial(S.space, {((), 0): Fraction(O)}, S.truncation)
    return delta(O).times_hbar() + bracket(S, O)


def casimir_check(lie: dgla.LieData) -> bool:
    """I_g contracted with the pairing is the identity."""
    return la.is_zero(lie.casimir() @ lie.form - la.eye(lie.dim))


def link_wick_oracle(ctx: AmplitudeContext, link: LinkWord, marks, n_trivalent: int, n_external: int):
    """Half-edge matching sum for univalent vertices at ``marks`` (fixed slots),
    divided by ``n! 6^n``; each matching is evaluated directly."""
    marks = tuple(marks)
    total = SuperPolynomial(ctx.base_space, {})
    for ext, m in partial_matchings(n_trivalent, n_external, len(marks)):
        g = graph_of_matching(n_trivalent, ext, m, marks)
        if not all(any(v >= g.n_tri for v in comp) for comp in g.components()):
            continue
        amp = link_graph_amplitude(ctx, link, g)
        total = total + amp.times_hbar(len(g.edges) - g.n_tri)
    norm = 1
    for i in range(2, n_trivalent + 1):
        norm *= i
    return total.scale(Fraction(1, norm * 6 ** n_trivalent))


def rational_rotation(axis, t) -> np.ndarray:
    """Cayley transform of t * (axis as a skew matrix): a rational element of SO(3)."""
    a = la.qarray(axis)
    K = la.zeros(3, 3)
    K[0, 1], K[0, 2], K[1, 2] = -a[2], a[1], -a[0]
    K[1, 0], K[2, 0], K[2, 1] = a[2], -a[1], a[0]
    K = K * Fraction(t)
    return (la.eye(3) + K) @ la.inverse(la.eye(3) - K)
