"""Graph amplitudes and the effective action on cohomology.

Amplitudes are computed with the field written in the model's own basis,
``a = sum_i c_i e_i`` with coordinates ``c_i`` of parity ``|e_i| + 1``.  Each
vertex gets a private copy of the coordinates; an internal edge is the second
order operator ``sum T^{ab} d/dc^u_a d/dc^v_b`` and the remaining coordinates
of a finished vertex are replaced by the restricted field ``psi``.  All edge
operators are even, so no vertex ordering enters the result.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from . import dgla
from . import linalg as la
from .graphs import Graph, enumerate_graphs
from .superpoly import SuperPolynomial, SuperSpace, qme_residual


class ResourceBoundError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# polynomials in the model basis

def coordinate_space(model: dgla.CyclicDGLA) -> SuperSpace:
    return SuperSpace(tuple((f"c{i}", (g + 1) % 2, g - 1) for i, g in enumerate(model.degrees)))


def field_polynomials(model: dgla.CyclicDGLA):
    """``(V3, S_kin)`` on :func:`coordinate_space`: V3 = <a,[a,a]>, S_kin = 1/2 <a, da>."""
    space = coordinate_space(model)
    deg = model.degrees
    par = [(g + 1) % 2 for g in deg]
    w = model.pairing
    n = model.dim
    items = []
    for (j, k), vec in sorted(model.bracket.items()):
        for m, c in sorted(vec.items()):
            for i in range(n):
                if w[i, m] == 0:
                    continue
                s = (par[j] * deg[i] + par[k] * (deg[i] + deg[j])) % 2
                v = w[i, m] * c
                items.append(((i, j, k), 0, -v if s else v))
    V3 = SuperPolynomial.from_terms(space, items)
    items = []
    wd = w @ model.d
    for i in range(n):
        for j in range(n):
            if wd[i, j] == 0:
                continue
            s = (par[j] + par[j] * deg[i]) % 2
            v = wd[i, j] / 2
            items.append(((i, j), 0, -v if s else v))
    return V3, SuperPolynomial.from_terms(space, items)


def classical_action(model: dgla.CyclicDGLA) -> SuperPolynomial:
    V3, kin = field_polynomials(model)
    return kin + V3.scale(Fraction(1, 6))


def adapted_coordinates(split: dgla.Splitting) -> dict:
    """Images of the model coordinates ``c_a = sum_i T[a, i] c'_i`` in the adapted space."""
    space = split.full_space
    T = split.basis
    n = T.shape[0]
    out = {}
    for a in range(n):
        out[a] = SuperPolynomial.from_terms(space, [((i,), 0, T[a, i]) for i in range(n) if T[a, i] != 0])
    return out


def to_adapted(poly: SuperPolynomial, split: dgla.Splitting) -> SuperPolynomial:
    """Rewrite a polynomial on the model coordinates in Darboux coordinates (x, y, u, w)."""
    return poly.substitute(adapted_coordinates(split), target=split.full_space.zero())


def second_order(poly: SuperPolynomial, T: np.ndarray, half: bool = True) -> SuperPolynomial:
    """``(1/2) sum T^{ab} d_a d_b`` acting on ``poly`` (model coordinates)."""
    out = poly._new({})
    n = T.shape[0]
    for b in range(n):
        col = [a for a in range(n) if T[a, b] != 0]
        if not col:
            continue
        db = poly.derivative(b)
        if not db.terms:
            continue
        for a in col:
            c = T[a, b] / 2 if half else T[a, b]
            out = out + db.derivative(a).scale(c)
    return out


# ---------------------------------------------------------------------------
# amplitude context

@dataclass(eq=False)
class Frame:
    """Coordinates used for one vertex copy.

    ``rows`` maps model-basis tensors into this frame (T' = rows T rows^T);
    ``legs`` are the images of the frame coordinates on the base space.
    """

    coord: SuperSpace
    vertex: SuperPolynomial
    rows: np.ndarray | None
    legs: list
    lift: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def tensor(self, T):
        if self.rows is None:
            return T
        key = id(T)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is T:
            return hit[1]
        R = self.rows
        out = R @ T @ R.T
        self._cache[key] = (T, out)
        return out


def model_frame(model: dgla.CyclicDGLA, psi: list) -> Frame:
    V3, _ = field_polynomials(model)
    return Frame(coordinate_space(model), V3, None, list(psi))


def adapted_frame(split: dgla.Splitting, tensors=(), gauge_legs: dict | None = None, base=None) -> Frame:
    """Darboux coordinates (x, y, u, w) restricted to the directions that carry a
    leg or an end of one of ``tensors``; the others are set to zero.

    Legs: x_i -> x_i, y_i -> y_i on the base space, gauge/exact coordinates ->
    ``gauge_legs[index]`` (default 0).
    """
    model = split.model
    r = split.rank
    n = model.dim
    full = split.full_space
    gauge_legs = gauge_legs or {}
    Ti = split.basis_inv
    touched = set(range(2 * r)) | set(gauge_legs)
    for T in tensors:
        Tad = Ti @ T @ Ti.T
        for i in range(n):
            if any(v != 0 for v in Tad[i, :]) or any(v != 0 for v in Tad[:, i]):
                touched.add(i)
    keep = sorted(touched)
    coord = SuperSpace(tuple(full.generators[i] for i in keep))
    T = split.basis
    images = {a: SuperPolynomial.from_terms(coord, [((j,), 0, T[a, i]) for j, i in enumerate(keep) if T[a, i] != 0])
              for a in range(n)}
    V3, _ = field_polynomials(model)
    vertex = V3.substitute(images, target=coord.zero())
    base = base or split.space
    legs = []
    for i in keep:
        if i < 2 * r:
            legs.append(SuperPolynomial(base, {((i,), 0): Fraction(1)}))
        else:
            legs.append(gauge_legs.get(i, SuperPolynomial(base, {})))
    return Frame(coord, vertex, Ti[keep, :], legs, T[:, keep])


def frame_supports(fr: Frame, T) -> bool:
    """Whether every part of the tensor T (model basis) lies inside the frame."""
    if fr.rows is None:
        return True
    parts = T if isinstance(T, list) else [(None, T)]
    for _, M in parts:
        back = fr.lift @ fr.tensor(M) @ fr.lift.T
        if not np.all(back == M):
            return False
    return True


@dataclass(eq=False)
class AmplitudeContext:
    model: dgla.CyclicDGLA
    propagator: dgla.Propagator
    splitting: dgla.Splitting
    psi: list
    truncation: tuple = (6, 2)
    vertex_order: tuple = ()
    frame: Frame = field(default=None, repr=False)
    tadpoles: str = "genuine"

    @property
    def base_space(self):
        return self.frame.legs[0].space if self.frame.legs else self.splitting.space

    @property
    def vertex(self):
        return self.frame.vertex


def make_context(model: dgla.CyclicDGLA, split: dgla.Splitting | None = None, truncation=(6, 2),
                 propagator: dgla.Propagator | None = None, psi=None, frame: str = "adapted",
                 tadpoles: str = "genuine") -> AmplitudeContext:
    """``frame``: "adapted" (reduced Darboux coordinates, fast) or "model"
    (the model basis with psi substituted at the legs; used as a cross-check).
    ``tadpoles``: "zero" (self-loops vanish) or "genuine" (self-loops carry P)."""
    if tadpoles not in ("zero", "genuine"):
        raise ValueError(f"unknown tadpole policy {tadpoles!r}")
    split = split or dgla.cohomology_splitting(model)
    prop = propagator or dgla.build_propagator(split)
    psi = psi if psi is not None else dgla.psi_field(split)
    if frame == "adapted":
        fr = adapted_frame(split, [prop.matrix], base=psi[0].space if psi else None)
    else:
        fr = model_frame(model, psi)
    return AmplitudeContext(model, prop, split, psi, tuple(truncation), (), fr, tadpoles)


class _Work:
    """Scratch space: base generators followed by one coordinate copy per vertex."""

    def __init__(self, base: SuperSpace, coord: SuperSpace, n_vertices: int):
        self.base = base
        self.nb = len(base.generators)
        self.n = len(coord.generators)
        gens = list(base.generators)
        for v in range(n_vertices):
            gens.extend((f"{name}_{v}", p, dg) for name, p, dg in coord.generators)
        self.space = SuperSpace(tuple(gens))

    def offset(self, v):
        return self.nb + v * self.n

    def copy(self, poly: SuperPolynomial, v) -> SuperPolynomial:
        off = self.offset(v)
        terms = {(tuple(g + off for g in mono), h): c for (mono, h), c in poly.terms.items()}
        return SuperPolynomial(self.space, terms)

    def lift(self, poly: SuperPolynomial) -> SuperPolynomial:
        return SuperPolynomial(self.space, dict(poly.terms))

    def lower(self, poly: SuperPolynomial) -> SuperPolynomial:
        for (mono, _h) in poly.terms:
            if any(g >= self.nb for g in mono):
                raise AssertionError("uncontracted vertex coordinates remain")
        return SuperPolynomial(self.base, dict(poly.terms))


def _fast(poly: SuperPolynomial) -> SuperPolynomial:
    return SuperPolynomial(poly.space, {k: mpq(c) for k, c in poly.terms.items()})


def _slow(poly: SuperPolynomial) -> SuperPolynomial:
    return SuperPolynomial(poly.space, {k: Fraction(int(c.numerator), int(c.denominator))
                                        for k, c in poly.terms.items()}, poly.truncation)


def _apply_edge(work: _Work, F: SuperPolynomial, u, v, T) -> SuperPolynomial:
    """Apply the edge operator between vertex copies u and v (u == v: loop).

    ``T`` is a matrix, or a list of ``(factor, matrix)`` parts where ``factor``
    is None or a polynomial on the base space multiplying that part from the left.
    """
    if isinstance(T, list):
        out = F._new({})
        for factor, M in T:
            part = _apply_edge(work, F, u, v, M)
            if factor is not None and part.terms:
                part = _fast(work.lift(factor)) * part
            out = out + part
        return out
    ou, ov = work.offset(u), work.offset(v)
    n = work.n
    par = work.space.parities
    cols: dict = {}
    for aa in range(n):
        for bb in range(n):
            c = T[aa, bb]
            if c != 0:
                cols.setdefault(bb, []).append((aa, mpq(c)))
    if u == v:
        plan = [(ou, ou, 1)]
    else:
        # 1/2 (d^u_a d^v_b + d^v_a d^u_b): the cross terms of 1/2 T^{ab} d_a d_b
        half = mpq(1, 2)
        plan = [(ov, ou, half), (ou, ov, half)]
    out: dict = {}
    get = out.get
    for (mono, h), c in F.terms.items():
        for inner, outer, w in plan:
            for g1 in set(mono):
                col = cols.get(g1 - inner)
                if col is None or not inner <= g1 < inner + n:
                    continue
                m1, c1 = _left_derivative(mono, c, g1, par)
                cw = w * c1
                for aa, t in col:
                    g2 = outer + aa
                    if g2 not in m1:
                        continue
                    m2, c2 = _left_derivative(m1, cw, g2, par)
                    key = (m2, h)
                    out[key] = get(key, 0) + t * c2
    return F._new(out)


def _left_derivative(mono, c, g, par):
    pos = mono.index(g)
    if par[g]:
        odd = 0
        for x in mono[:pos]:
            odd ^= par[x]
        if odd:
            c = -c
    else:
        k = mono.count(g)
        if k > 1:
            c = c * k
    return mono[:pos] + mono[pos + 1:], c


def contract(base: SuperSpace, coord: SuperSpace, n_vertices: int, factors: list, edges: list,
             legs: list, psi: list, divisors: list) -> SuperPolynomial:
    """Core contraction.

    factors: list of ``(vertices, builder)`` where ``builder(work)`` returns a
    polynomial in the copies of ``vertices``; edges: ``(u, v, T)``; psi: images
    of the model coordinates on ``base``.  Vertex copies are replaced by psi as
    soon as all their edges are applied.
    """
    work = _Work(base, coord, n_vertices)
    pending = {v: 0 for v in range(n_vertices)}
    for u, v, _ in edges:
        pending[u] += 1
        if v != u:
            pending[v] += 1
    # the inner loops run on gmpy2 rationals; results come back as Fractions
    psi_w = [_fast(work.lift(p)) for p in psi]
    F = SuperPolynomial(work.space, {((), 0): mpq(1)})
    added: set = set()
    done_edges: set = set()
    for verts, builder in factors:
        F = F * _fast(builder(work))
        added.update(verts)
        for idx, (u, v, T) in enumerate(edges):
            if idx in done_edges or u not in added or v not in added:
                continue
            F = _apply_edge(work, F, u, v, T)
            done_edges.add(idx)
            pending[u] -= 1
            if v != u:
                pending[v] -= 1
        finished = [w for w in sorted(added) if pending[w] == 0]
        images = {}
        for w in finished:
            off = work.offset(w)
            for a in range(work.n):
                images[off + a] = psi_w[a]
            pending[w] = -1
        if images:
            F = F.substitute(images)
        if not F.terms:
            return SuperPolynomial(base, {})
    out = _slow(work.lower(F))
    div = 1
    for d in divisors:
        div *= d
    return out.scale(Fraction(1, div)) if div != 1 else out


def _falling(k):
    return {0: 1, 1: 3, 2: 6, 3: 6}[k]


def graph_amplitude(ctx: AmplitudeContext, g: Graph, edge_tensors: dict | None = None) -> SuperPolynomial:
    """Amplitude of an action graph: P on every internal edge (or ``edge_tensors[i]``
    for edge index i), psi on every leg, <X,[Y,Z]> at every vertex.  Tadpoles
    carry the diagonal value, which is zero."""
    base = ctx.base_space
    if g.link_mode:
        raise ValueError("link graphs are evaluated by the links module")
    edge_tensors = edge_tensors or {}
    edges = []
    for i, (u, v) in enumerate(g.edges):
        T = edge_tensors.get(i)
        if T is None:
            if u == v and ctx.tadpoles == "zero":
                return SuperPolynomial(base, {})
            T = ctx.propagator.matrix
        edges.append((u, v, T))
    order = list(ctx.vertex_order) if ctx.vertex_order else list(range(g.n_tri))
    fr = ctx.frame
    if edge_tensors and not all(frame_supports(fr, T) for _, _, T in edges):
        fr = model_frame(ctx.model, ctx.psi)
    edges = [(u, v, _in_frame(fr, T)) for u, v, T in edges]
    must_diff, never_diff = _coordinate_classes(fr, [T for _, _, T in edges])
    vertices = {}
    for v in range(g.n_tri):
        k = g.internal_degree(v)
        vertices[v] = _prefilter(fr.vertex, k, 3 - k, must_diff, never_diff)
    factors = [([v], (lambda work, v=v: work.copy(vertices[v], v))) for v in _contraction_order(g, order)]
    divisors = [_falling(g.internal_degree(v)) for v in range(g.n_tri)]
    return contract(base, fr.coord, g.n_tri, factors, edges, list(g.legs), fr.legs, divisors)


def _coordinate_classes(fr: Frame, tensors):
    """Coordinates with no leg image (must be differentiated) and coordinates no
    edge tensor touches (must become legs)."""
    n = len(fr.coord.generators)
    must = frozenset(i for i in range(n) if not fr.legs[i].terms)
    touched = set()
    for T in tensors:
        for _, M in (T if isinstance(T, list) else [(None, T)]):
            for a in range(n):
                for b in range(n):
                    if M[a, b] != 0:
                        touched.add(a)
                        touched.add(b)
    never = frozenset(i for i in range(n) if i not in touched)
    return must, never


def _prefilter(V: SuperPolynomial, k: int, legs: int, must, never) -> SuperPolynomial:
    keep = {}
    for (mono, h), c in V.terms.items():
        if sum(1 for g in mono if g in must) <= k and sum(1 for g in mono if g in never) <= legs:
            keep[(mono, h)] = c
    return V._new(keep)


def _in_frame(fr: Frame, T):
    if isinstance(T, list):
        return [(f, fr.tensor(M)) for f, M in T]
    return fr.tensor(T)


def _contraction_order(g: Graph, order):
    """Greedy order keeping the set of open vertex copies small."""
    if len(order) <= 2:
        return order
    adj = {v: set() for v in order}
    for u, v in g.edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    seq = [order[0]]
    rest = [v for v in order[1:]]
    while rest:
        best = max(rest, key=lambda v: (len(adj[v] & set(seq)), -order.index(v)))
        seq.append(best)
        rest.remove(best)
    return seq


# ---------------------------------------------------------------------------
# effective action

def _threads():
    try:
        return max(1, int(os.environ.get("BVGF_THREADS", "1")))
    except ValueError:
        return 1


def graph_window(truncation, max_vertices):
    """All (vertices, legs, loops) triples contributing at truncation (D, L)."""
    D, L = truncation
    out = []
    for l in range(L + 1):
        for k in range(D + 1):
            n = k + 2 * l - 2
            if 1 <= n <= max_vertices:
                out.append((n, k, l))
    return out


def effective_action(ctx: AmplitudeContext, max_vertices: int = 4, include_vacuum: bool = False,
                     max_graphs: int = 100000) -> SuperPolynomial:
    """S = sum over connected graph classes of hbar^loops A(g) / |Aut g|."""
    D, L = ctx.truncation
    jobs = []
    for n, k, l in graph_window(ctx.truncation, max_vertices):
        if k == 0 and not include_vacuum:
            continue
        jobs.extend(enumerate_graphs(n, k, max_trivalent=max(max_vertices, 1)))
        if len(jobs) > max_graphs:
            raise ResourceBoundError(f"more than {max_graphs} graphs requested")
    if ctx.tadpoles == "zero":
        jobs = [g for g in jobs if not g.has_tadpole()]
    jobs.sort(key=lambda g: g.encoding())

    def one(g):
        return graph_amplitude(ctx, g).scale(Fraction(1, g.aut_order)).times_hbar(g.loop_count)

    threads = _threads()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(g) for g in jobs]
    total = SuperPolynomial(ctx.base_space, {}, ctx.truncation)
    for p in parts:
        total = total + p.with_truncation(ctx.truncation)
    return total


def certified_window(truncation, max_vertices):
    """Residual coefficients (degree k, hbar^l) that cannot see omitted graphs.

    A residual coefficient with k legs and hbar^l comes from pairs of action
    terms glued along one edge, i.e. from graphs with k + 2l - 2 vertices and
    k + 2 <= D legs on each side of the gluing.
    """
    D, L = truncation
    return {(k, l) for k in range(D + 1) for l in range(L + 1)
            if k + 2 <= D and k + 2 * l - 2 <= max_vertices}


@dataclass
class QMEReport:
    residual: SuperPolynomial
    window: set
    offending: list
    passed: bool

    def to_json_obj(self):
        return {
            "passed": self.passed,
            "window": sorted([list(w) for w in self.window]),
            "offending": [{"monomial": list(m), "hbar": h, "coefficient": str(c)} for m, h, c in self.offending],
            "residual_terms": len(self.residual.terms),
        }


def verify_qme(ctx: AmplitudeContext, S: SuperPolynomial, max_vertices: int = 4) -> QMEReport:
    res = qme_residual(S)
    window = certified_window(ctx.truncation, max_vertices)
    bad = [(m, h, c) for (m, h), c in sorted(res.terms.items()) if (len(m), h) in window and c != 0]
    return QMEReport(res, window, bad, not bad)


# ---------------------------------------------------------------------------
# independent Gaussian-expectation oracle

def wick_expectation(ctx: AmplitudeContext, n_vertices: int, n_edges: int) -> SuperPolynomial:
    """``p[ (d_P)^E / E! (V3/6)^n / n! ]`` with ``d_P = 1/2 sum P^{ab} d_a d_b``.

    Single coordinate copy, no graphs; ``p`` replaces coordinates by psi.  Equals
    the sum over all (possibly disconnected) graphs with n vertices and E edges
    of A/|Aut|, tadpoles evaluated with P itself.
    """
    V3, _ = field_polynomials(ctx.model)
    V = V3.scale(Fraction(1, 6))
    F = V.space.one()
    for _ in range(n_vertices):
        F = F * V
    for _ in range(n_edges):
        F = second_order(F, ctx.propagator.matrix)
    F = F.scale(Fraction(1, _fact(n_vertices) * _fact(n_edges)))
    target = SuperPolynomial(ctx.base_space, {})
    return F.substitute(dict(enumerate(ctx.psi)), target=target)


def _fact(k):
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def tadpole_contraction(model: dgla.CyclicDGLA, P: np.ndarray) -> SuperPolynomial:
    """1/2 sum P^{ab} d_a d_b V3: the genuine value of a self-loop at one vertex."""
    V3, _ = field_polynomials(model)
    return second_order(V3, P)


# ---------------------------------------------------------------------------
# change of Darboux coordinates on cohomology

def symplectic_change(split: dgla.Splitting, G: np.ndarray):
    """alpha' = alpha G, beta' = beta G^{-T}; G must preserve degrees.

    Returns the new splitting and the images of the old coordinates
    (x = G x', y = G^{-T} y') as polynomials on the new space.
    """
    r = split.rank
    G = np.asarray(G, dtype=object)
    degs = [split.space.generators[i][2] for i in range(r)]
    if any(G[i, j] != 0 and degs[i] != degs[j] for i in range(r) for j in range(r)):
        raise ValueError("change of basis mixes degrees")
    Gi_T = la.inverse(G).T
    psi = np.concatenate([split.alpha @ G, split.beta @ Gi_T], axis=1)
    new = dgla.cohomology_splitting(split.model, complement_choice=split.gauge, psi=psi)
    sp = new.space
    images = {}
    for i in range(r):
        images[i] = SuperPolynomial.from_terms(sp, [((j,), 0, G[i, j]) for j in range(r) if G[i, j] != 0])
        images[r + i] = SuperPolynomial.from_terms(sp, [((r + j,), 0, Gi_T[i, j]) for j in range(r)
                                                        if Gi_T[i, j] != 0])
    return new, images


def random_symplectic_change(split: dgla.Splitting, rng) -> np.ndarray:
    """Random invertible integer matrix, block diagonal by degree (``rng``: random.Random)."""
    r = split.rank
    degs = [split.space.generators[i][2] for i in range(r)]
    G = la.zeros(r, r)
    for dg in sorted(set(degs)):
        idx = [i for i in range(r) if degs[i] == dg]
        while True:
            block = la.qarray([[rng.randint(-2, 2) for _ in idx] for _ in idx])
            if la.rank(block) == len(idx):
                break
        for a, i in enumerate(idx):
            for b, j in enumerate(idx):
                G[i, j] = block[a, b]
    return G
