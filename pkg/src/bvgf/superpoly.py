"""Polynomials on an odd symplectic space with coefficients in formal hbar-series.

Monomials are stored as ascending tuples of generator indices; an even
generator may repeat, an odd one appears at most once.  A term key is
``(monomial, hbar_power)``.  All operations return new objects.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number, Rational
from typing import Iterable, Mapping, Sequence

EVEN, ODD = 0, 1


class IncompatibleOperands(ValueError):
    pass


class ParityError(ValueError):
    pass


@dataclass(frozen=True)
class SuperSpace:
    """Graded generators ``(name, parity, degree)``; no symplectic data."""

    generators: tuple

    def __post_init__(self):
        gens = tuple((str(n), int(p) % 2, int(d)) for n, p, d in self.generators)
        object.__setattr__(self, "generators", gens)
        names = [g[0] for g in gens]
        if len(set(names)) != len(names):
            raise ValueError("generator names must be unique")
        object.__setattr__(self, "_parities", tuple(g[1] for g in gens))

    def __len__(self):
        return len(self.generators)

    @property
    def parities(self):
        return self._parities

    def index(self, name: str) -> int:
        for i, g in enumerate(self.generators):
            if g[0] == name:
                return i
        raise KeyError(name)

    def gen(self, name_or_index, truncation=(None, None)) -> "SuperPolynomial":
        i = name_or_index if isinstance(name_or_index, int) else self.index(name_or_index)
        return SuperPolynomial(self, {((i,), 0): Fraction(1)}, truncation)

    def one(self, truncation=(None, None)) -> "SuperPolynomial":
        return SuperPolynomial(self, {((), 0): Fraction(1)}, truncation)

    def zero(self, truncation=(None, None)) -> "SuperPolynomial":
        return SuperPolynomial(self, {}, truncation)


@dataclass(frozen=True)
class OddSymplecticSpace(SuperSpace):
    """Darboux coordinates ``x_i`` (even) paired with ``y_i`` (odd).

    ``degree`` is the degree of the dual basis vector in H[1]; the two
    degrees of a pair add up to ``pair_degree`` (1 for a 3-manifold).
    """

    darboux_pairs: tuple = ()
    pair_degree: int = 1

    def __post_init__(self):
        super().__post_init__()
        pairs = tuple((int(a), int(b)) for a, b in self.darboux_pairs)
        object.__setattr__(self, "darboux_pairs", pairs)
        seen = [i for p in pairs for i in p]
        if sorted(seen) != list(range(len(self.generators))):
            raise ValueError("every generator must belong to exactly one Darboux pair")
        for ix, iy in pairs:
            _, px, dx = self.generators[ix]
            _, py, dy = self.generators[iy]
            if px != EVEN or py != ODD:
                raise ValueError(f"pair ({ix}, {iy}) must be (even, odd)")
            if dx + dy != self.pair_degree:
                raise ValueError(f"pair ({ix}, {iy}) has degrees {dx}+{dy} != {self.pair_degree}")

    @classmethod
    def standard(cls, n_pairs: int, x_degrees: Sequence[int] | None = None):
        """Space with generators x1..xn, y1..yn."""
        x_degrees = list(x_degrees) if x_degrees is not None else [0] * n_pairs
        gens = [(f"x{i + 1}", EVEN, x_degrees[i]) for i in range(n_pairs)]
        gens += [(f"y{i + 1}", ODD, 1 - x_degrees[i]) for i in range(n_pairs)]
        pairs = [(i, n_pairs + i) for i in range(n_pairs)]
        return cls(tuple(gens), tuple(pairs))


def _canonical_product(m1, m2, parities):
    """Sorted product of two canonical monomials and its Koszul sign (0 if it vanishes)."""
    if not m1:
        return m2, 1
    if not m2:
        return m1, 1
    sign = 1
    odd1 = [a for a in m1 if parities[a]]
    if odd1:
        odd2 = [b for b in m2 if parities[b]]
        if odd2:
            s1 = set(odd1)
            inv = 0
            for b in odd2:
                if b in s1:
                    return None, 0
                inv += sum(1 for a in odd1 if a > b)
            if inv & 1:
                sign = -1
    return tuple(sorted(m1 + m2)), sign


class SuperPolynomial:
    """Truncated polynomial in super-commuting generators, coefficients in Q[hbar].

    ``truncation = (D, L)`` bounds the polynomial degree and the hbar power;
    ``None`` means unbounded.  Terms above the bounds are dropped silently.
    """

    __slots__ = ("space", "terms", "truncation")

    def __init__(self, space: SuperSpace, terms: Mapping | None = None, truncation=(None, None)):
        self.space = space
        self.truncation = (truncation[0], truncation[1])
        D, L = self.truncation
        clean = {}
        for (mono, h), c in (terms or {}).items():
            if c == 0:
                continue
            if (D is not None and len(mono) > D) or (L is not None and h > L):
                continue
            clean[(tuple(mono), int(h))] = c
        self.terms = clean

    # -- construction ---------------------------------------------------
    @classmethod
    def from_terms(cls, space, items: Iterable, truncation=(None, None)):
        """Build from ``(monomial, hbar, coeff)`` with monomials in any order."""
        par = space.parities
        acc: dict = {}
        for mono, h, c in items:
            sign = 1
            cur: tuple = ()
            for g in mono:
                cur, s = _canonical_product(cur, (g,), par)
                if s == 0:
                    break
                sign *= s
            else:
                key = (cur, h)
                acc[key] = acc.get(key, 0) + sign * c
        return cls(space, acc, truncation)

    def _new(self, terms):
        return SuperPolynomial(self.space, terms, self.truncation)

    def _check(self, other: "SuperPolynomial"):
        if other.space != self.space or other.truncation != self.truncation:
            raise IncompatibleOperands("operands live on different spaces or truncations")

    def with_truncation(self, truncation) -> "SuperPolynomial":
        return SuperPolynomial(self.space, self.terms, truncation)

    # -- inspection -----------------------------------------------------
    def __repr__(self):
        return f"SuperPolynomial({self.pretty()})"

    def pretty(self) -> str:
        if not self.terms:
            return "0"
        names = [g[0] for g in self.space.generators]
        out = []
        for (mono, h), c in sorted(self.terms.items()):
            factors = [str(c)]
            if h:
                factors.append("hbar" if h == 1 else f"hbar^{h}")
            factors += [names[i] for i in mono]
            out.append("*".join(factors))
        return " + ".join(out)

    def __eq__(self, other):
        if isinstance(other, SuperPolynomial):
            return self.space == other.space and self.terms == other.terms
        if isinstance(other, Number) and other == 0:
            return not self.terms
        return NotImplemented

    __hash__ = None

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def max_abs(self) -> float:
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    def coefficient(self, mono, hbar=0):
        return self.terms.get((tuple(mono), hbar), 0)

    def term_parity(self, mono) -> int:
        par = self.space.parities
        return sum(par[g] for g in mono) & 1

    @property
    def parity(self):
        """0 or 1 for homogeneous polynomials, None if mixed (0 for the zero polynomial)."""
        ps = {self.term_parity(m) for (m, _) in self.terms}
        if not ps:
            return EVEN
        return ps.pop() if len(ps) == 1 else None

    def parity_components(self):
        even, odd = {}, {}
        for key, c in self.terms.items():
            (odd if self.term_parity(key[0]) else even)[key] = c
        return self._new(even), self._new(odd)

    def filter(self, pred) -> "SuperPolynomial":
        """Keep terms for which ``pred(monomial, hbar)`` is true."""
        return self._new({k: c for k, c in self.terms.items() if pred(k[0], k[1])})

    # -- linear structure -----------------------------------------------
    def __add__(self, other):
        if isinstance(other, Number):
            other = self.space.one(self.truncation) * other if other else self.space.zero(self.truncation)
        self._check(other)
        t = dict(self.terms)
        for k, c in other.terms.items():
            t[k] = t.get(k, 0) + c
        return self._new(t)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "SuperPolynomial":
        return self._new({k: v * c for k, v in self.terms.items()})

    def times_hbar(self, k: int = 1) -> "SuperPolynomial":
        return self._new({(m, h + k): c for (m, h), c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    # -- calculus -------------------------------------------------------
    def derivative(self, i: int) -> "SuperPolynomial":
        """Left derivative: move generator ``i`` to the front, then remove it."""
        par = self.space.parities
        odd = par[i]
        out: dict = {}
        for (mono, h), c in self.terms.items():
            if i not in mono:
                continue
            pos = mono.index(i)
            if odd:
                before = sum(par[g] for g in mono[:pos])
                coef = -c if before & 1 else c
            else:
                coef = c * mono.count(i)
            key = (mono[:pos] + mono[pos + 1:], h)
            out[key] = out.get(key, 0) + coef
        return self._new(out)

    def substitute(self, images: Mapping[int, "SuperPolynomial"], target=None) -> "SuperPolynomial":
        """Replace generator ``i`` by ``images[i]`` (missing generators map to themselves
        when ``target`` is None, else to zero).  Images must have the parity of the
        generator they replace."""
        space = target.space if target is not None else self.space
        trunc = target.truncation if target is not None else self.truncation
        cache: dict = {}

        def image(g):
            if g not in cache:
                if g in images:
                    cache[g] = images[g].with_truncation(trunc)
                elif target is None:
                    cache[g] = SuperPolynomial(space, {((g,), 0): Fraction(1)}, trunc)
                else:
                    cache[g] = SuperPolynomial(space, {}, trunc)
            return cache[g]

        total = SuperPolynomial(space, {}, trunc)
        for (mono, h), c in self.terms.items():
            term = SuperPolynomial(space, {((), h): c}, trunc)
            for g in mono:
                term = multiply(term, image(g))
                if not term.terms:
                    break
            total = total + term
        return total

    # -- serialization --------------------------------------------------
    def to_json_obj(self, tolerance: float | None = None) -> dict:
        names = [g[0] for g in self.space.generators]
        rows = []
        for (mono, h), c in sorted(self.terms.items(), key=lambda kv: (len(kv[0][0]), kv[0][1], kv[0][0])):
            rows.append({"monomial": [names[i] for i in mono], "hbar": h, "coeff": _num_to_str(c)})
        obj = {
            "generators": [list(g) for g in self.space.generators],
            "truncation": {"degree": self.truncation[0], "hbar": self.truncation[1]},
            "terms": rows,
        }
        if tolerance is not None:
            obj["tolerance"] = tolerance
        return obj

    def to_json(self, tolerance: float | None = None) -> str:
        return json.dumps(self.to_json_obj(tolerance), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict, space: SuperSpace | None = None) -> "SuperPolynomial":
        if space is None:
            space = SuperSpace(tuple(tuple(g) for g in obj["generators"]))
        trunc = (obj["truncation"]["degree"], obj["truncation"]["hbar"])
        items = [([space.index(n) for n in r["monomial"]], r["hbar"], _str_to_num(r["coeff"]))
                 for r in obj["terms"]]
        return cls.from_terms(space, items, trunc)


def _num_to_str(c) -> str:
    if isinstance(c, Rational):
        return f"{c.numerator}/{c.denominator}"
    return repr(float(c))


def _str_to_num(s: str):
    if "/" in s:
        p, q = s.split("/")
        return Fraction(int(p), int(q))
    return float(s)


# ---------------------------------------------------------------------------
# BV operations

def multiply(f: SuperPolynomial, g: SuperPolynomial) -> SuperPolynomial:
    f._check(g)
    D, L = f.truncation
    par = f.space.parities
    out: dict = {}
    for (m1, h1), c1 in f.terms.items():
        for (m2, h2), c2 in g.terms.items():
            if L is not None and h1 + h2 > L:
                continue
            if D is not None and len(m1) + len(m2) > D:
                continue
            mono, sign = _canonical_product(m1, m2, par)
            if not sign:
                continue
            key = (mono, h1 + h2)
            c = c1 * c2
            out[key] = out.get(key, 0) + (c if sign > 0 else -c)
    return f._new(out)


def _require_pairs(space):
    pairs = getattr(space, "darboux_pairs", None)
    if not pairs:
        raise IncompatibleOperands("delta needs a space with Darboux pairs")
    return pairs


def delta(f: SuperPolynomial) -> SuperPolynomial:
    """BV Laplacian: sum over Darboux pairs of d/dx_i (d/dy_i f)."""
    total = f._new({})
    for ix, iy in _require_pairs(f.space):
        dy = f.derivative(iy)
        if dy.terms:
            total = total + dy.derivative(ix)
    return total


def bracket(f: SuperPolynomial, g: SuperPolynomial) -> SuperPolynomial:
    """{f, g} = delta(fg) - delta(f) g - (-1)^|f| f delta(g), split by parity of f."""
    f._check(g)
    _require_pairs(f.space)
    total = f._new({})
    dg = delta(g)
    for p, fp in enumerate(f.parity_components()):
        if not fp.terms:
            continue
        term = delta(multiply(fp, g)) - multiply(delta(fp), g)
        fdg = multiply(fp, dg)
        total = total + (term + fdg if p else term - fdg)
    return total


def qme_residual(S: SuperPolynomial) -> SuperPolynomial:
    """1/2 {S, S} + hbar delta(S)."""
    if S.parity != EVEN:
        raise ParityError("the master equation is defined for even S")
    return bracket(S, S).scale(Fraction(1, 2)) + delta(S).times_hbar()


def time_derivative(samples: Sequence[SuperPolynomial], dt) -> list:
    """Central differences inside, one-sided second order at the ends."""
    n = len(samples)
    if n < 2:
        raise ValueError("need at least two grid nodes")
    if n == 2:
        d = (samples[1] - samples[0]).scale(1 / dt)
        return [d, d]
    inv2 = 1 / (2 * dt)
    out = [(samples[0].scale(-3) + samples[1].scale(4) - samples[2]).scale(inv2)]
    for k in range(1, n - 1):
        out.append((samples[k + 1] - samples[k - 1]).scale(inv2))
    out.append((samples[-1].scale(3) - samples[-2].scale(4) + samples[-3]).scale(inv2))
    return out


def homotopy_residual(A: Sequence[SuperPolynomial], B: Sequence[SuperPolynomial], dt=None):
    """Residuals of the two component equations of a master homotopy on a uniform grid.

    Returns ``(r1, r2)`` with ``r1[k] = 1/2{A,A} + hbar delta A`` and
    ``r2[k] = dA/dt + {B, A} + hbar delta B``, both sampled at every node.
    ``dt`` defaults to ``1/(n-1)`` (grid over [0, 1]).
    """
    n = len(A)
    if n < 2 or len(B) != n:
        raise ValueError("need matching grids with at least two nodes")
    if dt is None:
        dt = Fraction(1, n - 1)
    r1 = [qme_residual(a) for a in A]
    adot = time_derivative(A, dt)
    r2 = [adot[k] + bracket(B[k], A[k]) + delta(B[k]).times_hbar() for k in range(n)]
    return r1, r2
