"""Finite cyclic DGLAs: the algebraic stand-in for forms on a 3-manifold with values in a Lie algebra.

A model is a graded vector space with basis ``e_0 .. e_{n-1}``, a differential
``d`` (column ``j`` holds ``d e_j``), a graded Lie bracket stored sparsely as
``[e_i, e_j] = sum_k c e_k`` and a graded-symmetric pairing of degree -3.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import linalg as la
from .superpoly import EVEN, ODD, OddSymplecticSpace, SuperPolynomial


class ModelError(ValueError):
    """Validation failure; ``code`` is one of the E_* names, ``witnesses`` locate it."""

    def __init__(self, code, message, witnesses=()):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.witnesses = list(witnesses)


class ModelErrors(ModelError):
    """Several axioms failed at once."""

    def __init__(self, errors):
        self.errors = list(errors)
        first = self.errors[0]
        ValueError.__init__(self, "; ".join(str(e) for e in self.errors))
        self.code = first.code
        self.witnesses = first.witnesses

    @property
    def codes(self):
        return [e.code for e in self.errors]


# ---------------------------------------------------------------------------
# sparse vectors

def _sv_add(acc, vec, scale=1):
    for k, c in vec.items():
        v = acc.get(k, 0) + scale * c
        if v:
            acc[k] = v
        else:
            acc.pop(k, None)
    return acc


@dataclass(frozen=True)
class LieData:
    """Matrix Lie algebra: structure constants ``f[a, b, c]`` with ``[X_a, X_b] = f_abc X_c``,
    invariant form ``form`` and representation matrices ``rep[a]``."""

    names: tuple
    structure_constants: np.ndarray
    form: np.ndarray
    rep: tuple = ()

    @property
    def dim(self):
        return len(self.names)

    def casimir(self) -> np.ndarray:
        """Tensor dual to the invariant form (inverse matrix)."""
        try:
            return la.inverse(self.form)
        except np.linalg.LinAlgError:
            raise ModelError("E_PAIRING_DEGENERATE", "Lie form is degenerate") from None

    def bracket(self, u, v):
        """Bracket of coefficient vectors."""
        f = self.structure_constants
        out = la.zeros(self.dim)
        for a, b in itertools.product(range(self.dim), repeat=2):
            if u[a] != 0 and v[b] != 0:
                out = out + u[a] * v[b] * f[a, b]
        return out

    def rep_matrix(self, u):
        n = self.rep[0].shape[0]
        out = la.zeros(n, n)
        for a in range(self.dim):
            if u[a] != 0:
                out = out + u[a] * self.rep[a]
        return out


def so3() -> LieData:
    """so(3) with [e1,e2]=e3 (cyclic), form delta_ab, defining representation."""
    f = np.empty((3, 3, 3), dtype=object)
    f.fill(Fraction(0))
    for a, b, c in itertools.permutations(range(3)):
        f[a, b, c] = Fraction(_perm_sign((a, b, c)))
    rep = []
    for a in range(3):
        m = la.zeros(3, 3)
        # (rho(e_a))_{cb} = f_{abc}: rho(e_a) e_b = [e_a, e_b]
        for b, c in itertools.product(range(3), repeat=2):
            m[c, b] = f[a, b, c]
        rep.append(m)
    return LieData(("e1", "e2", "e3"), f, la.eye(3), tuple(rep))


def u1() -> LieData:
    f = np.empty((1, 1, 1), dtype=object)
    f.fill(Fraction(0))
    return LieData(("t",), f, la.eye(1), (la.eye(1),))


def _perm_sign(p):
    s = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


@dataclass(frozen=True)
class CDGA:
    """Graded-commutative algebra with unit, differential and degree-3 trace."""

    names: tuple
    degrees: tuple
    product: dict          # (p, q) -> {r: coeff}
    differential: np.ndarray
    trace: tuple
    unit: int = 0

    @property
    def dim(self):
        return len(self.names)


def exterior_algebra(k: int = 3) -> CDGA:
    """Lambda(theta_1..theta_k), zero differential, trace = coefficient of the top form."""
    subsets = [s for r in range(k + 1) for s in itertools.combinations(range(k), r)]
    index = {s: i for i, s in enumerate(subsets)}
    product = {}
    for s, t in itertools.product(subsets, repeat=2):
        if set(s) & set(t):
            continue
        merged = s + t
        sign = _perm_sign(merged)
        product[(index[s], index[t])] = {index[tuple(sorted(merged))]: Fraction(sign)}
    names = tuple("1" if not s else "".join(f"th{i + 1}" for i in s) for s in subsets)
    trace = tuple(Fraction(1) if len(s) == k else Fraction(0) for s in subsets)
    return CDGA(names, tuple(len(s) for s in subsets), product, la.zeros(len(subsets), len(subsets)), trace)


@dataclass(eq=False)
class CyclicDGLA:
    names: tuple
    degrees: tuple
    d: np.ndarray
    bracket: dict
    pairing: np.ndarray
    lie: LieData | None = None
    factors: dict = field(default_factory=dict)
    name: str = ""

    @property
    def dim(self):
        return len(self.names)

    def parity(self, i):
        return self.degrees[i] & 1

    def bracket_basis(self, i, j) -> dict:
        return self.bracket.get((i, j), {})

    def bracket_sv(self, u: dict, v: dict) -> dict:
        out: dict = {}
        for i, a in u.items():
            for j, b in v.items():
                br = self.bracket.get((i, j))
                if br:
                    _sv_add(out, br, a * b)
        return out

    def bracket_tensor(self) -> np.ndarray:
        n = self.dim
        t = np.empty((n, n, n), dtype=object)
        t.fill(Fraction(0))
        for (i, j), vec in self.bracket.items():
            for k, c in vec.items():
                t[i, j, k] = c
        return t

    def d_sv(self, u: dict) -> dict:
        out: dict = {}
        for j, a in u.items():
            col = self.d[:, j]
            for i in range(self.dim):
                if col[i] != 0:
                    out[i] = out.get(i, 0) + a * col[i]
        return {k: c for k, c in out.items() if c}

    def pair_sv(self, u: dict, v: dict):
        return sum((a * b * self.pairing[i, j] for i, a in u.items() for j, b in v.items()), Fraction(0))

    def pair(self, u: np.ndarray, v: np.ndarray):
        return (u @ self.pairing @ v) if len(u) else Fraction(0)

    def pairing_inverse(self) -> np.ndarray:
        return la.inverse(self.pairing)

    # -- JSON -----------------------------------------------------------
    def to_document(self) -> dict:
        n = self.dim
        doc = {
            "name": self.name,
            "basis": [{"name": self.names[i], "degree": self.degrees[i]} for i in range(n)],
            "d": [[_q(self.d[i, j]) for j in range(n)] for i in range(n)],
            "bracket": [[i, j, k, _q(c)] for (i, j), vec in sorted(self.bracket.items())
                        for k, c in sorted(vec.items())],
            "pairing": [[_q(self.pairing[i, j]) for j in range(n)] for i in range(n)],
        }
        if self.lie is not None:
            m = self.lie.dim
            f = self.lie.structure_constants
            doc["lie"] = {
                "names": list(self.lie.names),
                "structure_constants": [[a, b, c, _q(f[a, b, c])] for a, b, c in
                                        itertools.product(range(m), repeat=3) if f[a, b, c] != 0],
                "form": [[_q(v) for v in row] for row in self.lie.form],
                "representation": [[[_q(v) for v in row] for row in r] for r in self.lie.rep],
            }
        if self.factors:
            doc["factors"] = self.factors
        return doc


def _q(c) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


# ---------------------------------------------------------------------------
# validation

def validate(model: CyclicDGLA) -> list:
    """All violated axioms as ModelError instances (empty list when valid)."""
    errors = []
    n = model.dim
    deg = model.degrees
    d = model.d
    # degrees of d
    bad = [(i, j) for i in range(n) for j in range(n) if d[i, j] != 0 and deg[i] != deg[j] + 1]
    if bad:
        errors.append(ModelError("E_SCHEMA", "differential does not raise degree by one", bad[:5]))
    dd = d @ d if n else d
    bad = [j for j in range(n) if any(dd[i, j] != 0 for i in range(n))]
    if bad:
        errors.append(ModelError("E_DIFFERENTIAL", "d o d != 0", [model.names[j] for j in bad]))
    # bracket degrees and graded antisymmetry
    bad = []
    for (i, j), vec in model.bracket.items():
        for k in vec:
            if deg[k] != deg[i] + deg[j]:
                bad.append((i, j, k))
    if bad:
        errors.append(ModelError("E_SCHEMA", "bracket is not degree preserving", bad[:5]))
    bad = []
    for i in range(n):
        for j in range(i, n):
            sign = -1 if (deg[i] * deg[j]) % 2 == 0 else 1
            lhs = model.bracket_basis(i, j)
            rhs = {k: sign * c for k, c in model.bracket_basis(j, i).items()}
            if lhs != rhs:
                bad.append((i, j))
    if bad:
        errors.append(ModelError("E_JACOBI", "bracket is not graded antisymmetric", bad[:5]))
    # Jacobi: [x,[y,z]] = [[x,y],z] + (-1)^{|x||y|} [y,[x,z]]
    bad = []
    unit = [{i: Fraction(1)} for i in range(n)]
    for i, j, k in itertools.product(range(n), repeat=3):
        x, y, z = unit[i], unit[j], unit[k]
        lhs = model.bracket_sv(x, model.bracket_sv(y, z))
        rhs = dict(model.bracket_sv(model.bracket_sv(x, y), z))
        _sv_add(rhs, model.bracket_sv(y, model.bracket_sv(x, z)), -1 if deg[i] * deg[j] % 2 else 1)
        if lhs != rhs:
            bad.append((i, j, k))
            if len(bad) >= 5:
                break
    if bad:
        errors.append(ModelError("E_JACOBI", "graded Jacobi identity fails", bad))
    # Leibniz: d[x,y] = [dx,y] + (-1)^{|x|}[x,dy]
    bad = []
    for i, j in itertools.product(range(n), repeat=2):
        x, y = unit[i], unit[j]
        lhs = model.d_sv(model.bracket_sv(x, y))
        rhs = dict(model.bracket_sv(model.d_sv(x), y))
        _sv_add(rhs, model.bracket_sv(x, model.d_sv(y)), -1 if deg[i] % 2 else 1)
        if lhs != rhs:
            bad.append((i, j))
    if bad:
        errors.append(ModelError("E_LEIBNIZ", "d is not a derivation of the bracket", bad[:5]))
    # pairing
    w = model.pairing
    zero_rows = [model.names[i] for i in range(n) if all(w[i, j] == 0 for j in range(n))]
    if zero_rows or la.rank(w) < n:
        errors.append(ModelError("E_PAIRING_DEGENERATE", "pairing is degenerate", zero_rows))
    bad = [(i, j) for i in range(n) for j in range(n)
           if w[i, j] != 0 and deg[i] + deg[j] != 3]
    bad += [(i, j) for i in range(n) for j in range(i + 1, n) if w[i, j] != w[j, i]]
    if bad:
        errors.append(ModelError("E_PAIRING_INVARIANCE", "pairing is not graded symmetric of degree -3", bad[:5]))
    # d-invariance: <dx,y> + (-1)^{|x|}<x,dy> = 0
    dw = d.T @ w
    wd = w @ d
    bad = [(i, j) for i in range(n) for j in range(n)
           if dw[i, j] + (-1 if deg[i] % 2 else 1) * wd[i, j] != 0]
    if bad:
        errors.append(ModelError("E_PAIRING_INVARIANCE", "pairing is not d-invariant", bad[:5]))
    # bracket invariance: <[x,y],z> = <x,[y,z]>
    bad = []
    for i, j, k in itertools.product(range(n), repeat=3):
        lhs = model.pair_sv(model.bracket_basis(i, j), unit[k])
        rhs = model.pair_sv(unit[i], model.bracket_basis(j, k))
        if lhs != rhs:
            bad.append((i, j, k))
            if len(bad) >= 5:
                break
    if bad:
        errors.append(ModelError("E_PAIRING_INVARIANCE", "pairing is not bracket invariant", bad))
    return errors


def check_model(model: CyclicDGLA) -> CyclicDGLA:
    errors = validate(model)
    if errors:
        raise errors[0] if len(errors) == 1 else ModelErrors(errors)
    return model


def load_model(document) -> CyclicDGLA:
    """Parse and validate a model document (dict, JSON string or path)."""
    if isinstance(document, (str, Path)) and not (isinstance(document, str) and document.lstrip().startswith("{")):
        document = json.loads(Path(document).read_text())
    elif isinstance(document, str):
        document = json.loads(document)
    try:
        basis = document["basis"]
        names = tuple(str(b["name"]) for b in basis)
        degrees = tuple(int(b["degree"]) for b in basis)
        n = len(names)
        d = la.qarray(document.get("d") or [[0] * n for _ in range(n)])
        pairing = la.qarray(document["pairing"])
        if d.shape != (n, n) or pairing.shape != (n, n):
            raise ModelError("E_SCHEMA", "matrix shapes do not match the basis")
        bracket: dict = {}
        for row in document.get("bracket", []):
            i, j, k, c = row
            c = la.to_fraction(c)
            if c:
                _sv_add(bracket.setdefault((int(i), int(j)), {}), {int(k): c})
        bracket = {key: vec for key, vec in bracket.items() if vec}
        lie = None
        if document.get("lie"):
            ld = document["lie"]
            m = len(ld["names"])
            f = np.empty((m, m, m), dtype=object)
            f.fill(Fraction(0))
            for a, b, c, v in ld["structure_constants"]:
                f[a, b, c] = la.to_fraction(v)
            rep = tuple(la.qarray(r) for r in ld.get("representation", []))
            lie = LieData(tuple(ld["names"]), f, la.qarray(ld["form"]), rep)
    except ModelError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError("E_SCHEMA", f"malformed model document ({exc})") from None
    model = CyclicDGLA(names, degrees, d, bracket, pairing, lie, document.get("factors", {}),
                       document.get("name", ""))
    return check_model(model)


# ---------------------------------------------------------------------------
# constructions

def tensor_model(lie: LieData, cdga: CDGA | None = None, name: str = "") -> CyclicDGLA:
    """g (x) A with [X(x)w, Y(x)v] = [X,Y](x)wv, pairing form(X,Y) tr(wv), d = 1 (x) d_A.

    Basis order: Lie index major, algebra index minor.
    """
    cdga = cdga or exterior_algebra(3)
    m, k = lie.dim, cdga.dim
    try:
        la.inverse(lie.form)
    except np.linalg.LinAlgError:
        raise ModelError("E_PAIRING_DEGENERATE", "Lie form is degenerate") from None
    idx = lambda a, p: a * k + p
    names = tuple(f"{lie.names[a]}*{cdga.names[p]}" for a in range(m) for p in range(k))
    degrees = tuple(cdga.degrees[p] for a in range(m) for p in range(k))
    n = m * k
    d = la.zeros(n, n)
    for a in range(m):
        for p, q in itertools.product(range(k), repeat=2):
            if cdga.differential[q, p] != 0:
                d[idx(a, q), idx(a, p)] = cdga.differential[q, p]
    f = lie.structure_constants
    bracket: dict = {}
    for a, b in itertools.product(range(m), repeat=2):
        for c in range(m):
            if f[a, b, c] == 0:
                continue
            for (p, q), prod in cdga.product.items():
                for r, coeff in prod.items():
                    _sv_add(bracket.setdefault((idx(a, p), idx(b, q)), {}), {idx(c, r): f[a, b, c] * coeff})
    bracket = {key: v for key, v in bracket.items() if v}
    pairing = la.zeros(n, n)
    for a, b in itertools.product(range(m), repeat=2):
        if lie.form[a, b] == 0:
            continue
        for (p, q), prod in cdga.product.items():
            t = sum((coeff * cdga.trace[r] for r, coeff in prod.items()), Fraction(0))
            if t:
                pairing[idx(a, p), idx(b, q)] = lie.form[a, b] * t
    factors = {"lie_dim": m, "algebra": list(cdga.names), "algebra_degrees": list(cdga.degrees),
               "unit": cdga.unit}
    return check_model(CyclicDGLA(names, degrees, d, bracket, pairing, lie, factors, name))


class NotFlatError(ModelError):
    pass


def twisted_torus_model(lie: LieData, a1, a2, a3, name: str = "") -> CyclicDGLA:
    """g (x) Lambda(th1, th2, th3) twisted by a constant flat connection (a1, a2, a3).

    d(X (x) w) = sum_i [a_i, X] (x) th_i w.
    """
    conn = [la.qarray(a) for a in (a1, a2, a3)]
    for i, j in itertools.combinations(range(3), 2):
        c = lie.bracket(conn[i], conn[j])
        if any(v != 0 for v in c):
            raise NotFlatError("E_NOT_FLAT", f"[a{i + 1}, a{j + 1}] != 0", [(i, j)])
    ext = exterior_algebra(3)
    base = tensor_model(lie, ext)
    m, k = lie.dim, ext.dim
    idx = lambda a, p: a * k + p
    theta = [ext.names.index(f"th{i + 1}") for i in range(3)]
    n = m * k
    d = la.zeros(n, n)
    for i in range(3):
        ad = la.zeros(m, m)
        for b in range(m):
            e_b = la.zeros(m)
            e_b[b] = Fraction(1)
            ad[:, b] = lie.bracket(conn[i], e_b)
        for b, c in itertools.product(range(m), repeat=2):
            if ad[c, b] == 0:
                continue
            for p in range(k):
                for r, coeff in ext.product.get((theta[i], p), {}).items():
                    d[idx(c, r), idx(b, p)] += ad[c, b] * coeff
    factors = dict(base.factors)
    factors["connection"] = [[_q(v) for v in a] for a in conn]
    model = CyclicDGLA(base.names, base.degrees, d, base.bracket, base.pairing, lie, factors, name)
    return check_model(model)


def shipped_models() -> dict:
    """The rational models exercised by the acceptance suite."""
    e3 = [0, 0, 1]
    return {
        "so3_lambda": tensor_model(so3(), exterior_algebra(3), name="so3_lambda"),
        "twisted_torus": twisted_torus_model(so3(), [0, 0, 0], [0, 0, 0], e3, name="twisted_torus"),
        "u1_lambda": tensor_model(u1(), exterior_algebra(3), name="u1_lambda"),
    }


# ---------------------------------------------------------------------------
# cohomology splitting


@dataclass(eq=False)
class Splitting:
    """Representatives Psi of cohomology and the pairing-orthogonal complement.

    ``basis`` is the adapted basis (columns): alpha_1..alpha_r, beta_1..beta_r,
    then complement Darboux pairs ``(u_k, w_k)`` where ``u_k`` span the gauge
    Lagrangian and ``w_k = d``-images dual to them.  The complement is
    ``Psi^perp = span(u, w)``.
    """

    model: CyclicDGLA
    alpha: np.ndarray
    beta: np.ndarray
    gauge: np.ndarray
    exact: np.ndarray
    space: OddSymplecticSpace
    full_space: OddSymplecticSpace
    basis: np.ndarray
    basis_inv: np.ndarray
    homotopy: np.ndarray

    @property
    def rank(self):
        return self.alpha.shape[1]

    @property
    def psi_basis(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta], axis=1)

    @property
    def complement(self) -> np.ndarray:
        return np.concatenate([self.gauge, self.exact], axis=1)

    def cohomology_projection(self) -> np.ndarray:
        """Projection onto Psi along the complement (original basis)."""
        r = 2 * self.rank
        n = self.model.dim
        sel = la.zeros(n, n)
        for i in range(r):
            sel[i, i] = Fraction(1)
        return self.basis @ sel @ self.basis_inv


def _vec_degree(model, v):
    ds = {model.degrees[i] for i in range(model.dim) if v[i] != 0}
    if len(ds) != 1:
        raise ModelError("E_RANK", "vector is not homogeneous")
    return ds.pop()


def _columns(vectors, n):
    if not vectors:
        return la.zeros(n, 0)
    return np.stack(vectors, axis=1)


def _euclid_complement_in(model, ambient: np.ndarray, sub: np.ndarray) -> np.ndarray:
    """Vectors of span(ambient) Euclid-orthogonal to span(sub), degree by degree."""
    out = []
    for p in sorted(set(model.degrees)):
        rows = [i for i in range(model.dim) if model.degrees[i] == p]
        amb = [ambient[:, j] for j in range(ambient.shape[1]) if any(ambient[i, j] != 0 for i in rows)]
        if not amb:
            continue
        A = np.stack(amb, axis=1)
        S = [sub[:, j] for j in range(sub.shape[1]) if any(sub[i, j] != 0 for i in rows)]
        if S:
            cons = np.stack(S, axis=1).T @ A
            coeffs = la.nullspace(cons)
        else:
            coeffs = la.eye(A.shape[1])
        for j in range(coeffs.shape[1]):
            out.append(A @ coeffs[:, j])
    return _columns(out, model.dim)


def _graded_basis(model, mat: np.ndarray) -> np.ndarray:
    """Homogeneous basis of the span of the columns of ``mat`` (which must be graded)."""
    out = []
    for p in sorted(set(model.degrees)):
        rows = [i for i in range(model.dim) if model.degrees[i] != p]
        part = mat.copy()
        part[rows, :] = Fraction(0)
        if part.shape[1]:
            cs = la.column_space(part)
            out.extend(cs[:, j] for j in range(cs.shape[1]))
    return _columns(out, model.dim)


class NotClosedError(ModelError):
    pass


def cohomology_splitting(model: CyclicDGLA, complement_choice="euclidean", psi=None) -> Splitting:
    """Choose closed representatives Psi and a gauge-fixing complement.

    ``psi``: optional user columns (homogeneous, closed) spanning Psi; by default
    Psi = ker d Euclid-orthogonal to im d.  ``complement_choice``: "euclidean"
    (gauge Lagrangian built from the Euclid-orthogonal complement of im d inside
    Psi^perp) or a matrix of user columns spanning a complement of im d in Psi^perp.
    """
    n = model.dim
    d = model.d
    Z = _graded_basis(model, la.nullspace(d)) if n else la.zeros(0, 0)
    B = _graded_basis(model, la.column_space(d)) if n else la.zeros(0, 0)
    h_dim = Z.shape[1] - B.shape[1]
    if psi is None:
        Psi = _euclid_complement_in(model, Z, B)
    else:
        Psi = la.qarray(psi)
        if Psi.ndim == 1:
            Psi = Psi.reshape(-1, 1)
        for j in range(Psi.shape[1]):
            if not la.is_zero(d @ Psi[:, j]):
                raise NotClosedError("E_NOT_CLOSED", "Psi vector is not closed", [j])
            _vec_degree(model, Psi[:, j])
    if Psi.shape[1] != h_dim or la.rank(np.concatenate([Psi, B], axis=1)) != Psi.shape[1] + B.shape[1]:
        raise ModelError("E_RANK", "Psi does not project isomorphically onto cohomology",
                         [Psi.shape[1], h_dim])
    w = model.pairing
    odd = [Psi[:, j] for j in range(Psi.shape[1]) if _vec_degree(model, Psi[:, j]) % 2]
    even = [Psi[:, j] for j in range(Psi.shape[1]) if _vec_degree(model, Psi[:, j]) % 2 == 0]
    odd.sort(key=lambda v: _vec_degree(model, v))
    if len(odd) != len(even):
        raise ModelError("E_RANK", "odd and even parts of Psi have different dimensions")
    alpha = _columns(odd, n)
    even_m = _columns(even, n)
    r = alpha.shape[1]
    if r:
        G = alpha.T @ w @ even_m
        try:
            beta = even_m @ la.inverse(G)
        except np.linalg.LinAlgError:
            raise ModelError("E_RANK", "pairing restricted to Psi is degenerate") from None
    else:
        beta = la.zeros(n, 0)
    psi_all = np.concatenate([alpha, beta], axis=1)
    # complement: pairing-orthogonal to Psi
    C = _graded_basis(model, la.nullspace(psi_all.T @ w)) if r else la.eye(n)
    # gauge Lagrangian inside C, complementary to im d
    if isinstance(complement_choice, str):
        if complement_choice != "euclidean":
            raise ValueError(f"unknown complement policy {complement_choice!r}")
        U0 = _euclid_complement_in(model, C, B)
    else:
        U0 = la.qarray(complement_choice)
        if U0.ndim == 1:
            U0 = U0.reshape(-1, 1)
        if la.rank(np.concatenate([U0, B], axis=1)) != C.shape[1] or U0.shape[1] + B.shape[1] != C.shape[1] \
                or not la.is_zero(psi_all.T @ w @ U0):
            raise ModelError("E_RANK", "supplied complement is not a complement of im d in Psi^perp")
    k = U0.shape[1]
    if k:
        Gub = U0.T @ w @ B
        A = U0.T @ w @ U0
        try:
            Ginv = la.inverse(Gub)
        except np.linalg.LinAlgError:
            raise ModelError("E_RANK", "im d is not paired with its complement") from None
        s = -(A @ Ginv.T) / 2
        U = U0 + B @ s.T
        W = B @ la.inverse(U.T @ w @ B)
    else:
        U = la.zeros(n, 0)
        W = la.zeros(n, 0)
    basis = np.concatenate([alpha, beta, U, W], axis=1)
    try:
        basis_inv = la.inverse(basis)
    except np.linalg.LinAlgError:
        raise ModelError("E_RANK", "adapted basis is singular") from None
    # homotopy: h(w) = u . M^{-1} where d u = w M
    H = la.zeros(n, n)
    if k:
        M = (basis_inv @ d @ U)[2 * r + k:, :]
        Minv = la.inverse(M)
        Had = la.zeros(n, n)
        for i in range(k):
            for j in range(k):
                Had[2 * r + i, 2 * r + k + j] = Minv[i, j]
        H = basis @ Had @ basis_inv
    space = _h_space(model, alpha, beta)
    full_space = _full_space(model, alpha, beta, U, W)
    return Splitting(model, alpha, beta, U, W, space, full_space, basis, basis_inv, H)


def _h_space(model, alpha, beta) -> OddSymplecticSpace:
    r = alpha.shape[1]
    gens = [(f"x{i + 1}", EVEN, _vec_degree(model, alpha[:, i]) - 1) for i in range(r)]
    gens += [(f"y{i + 1}", ODD, _vec_degree(model, beta[:, i]) - 1) for i in range(r)]
    return OddSymplecticSpace(tuple(gens), tuple((i, r + i) for i in range(r)))


def _full_space(model, alpha, beta, U, W) -> OddSymplecticSpace:
    """Coordinates on the whole model in the adapted basis (Darboux for the pairing)."""
    r, k = alpha.shape[1], U.shape[1]
    gens = [(f"x{i + 1}", EVEN, _vec_degree(model, alpha[:, i]) - 1) for i in range(r)]
    gens += [(f"y{i + 1}", ODD, _vec_degree(model, beta[:, i]) - 1) for i in range(r)]
    pairs = [(i, r + i) for i in range(r)]
    for j in range(k):
        du = _vec_degree(model, U[:, j])
        dw = _vec_degree(model, W[:, j])
        gens.append((f"u{j + 1}", (du - 1) % 2, du - 1))
        gens.append((f"w{j + 1}", (dw - 1) % 2, dw - 1))
    for j in range(k):
        a, b = 2 * r + 2 * j, 2 * r + 2 * j + 1
        pairs.append((a, b) if gens[a][1] == EVEN else (b, a))
    # generator order must follow the adapted basis: alpha, beta, u..., w...
    order = list(range(2 * r)) + [2 * r + 2 * j for j in range(k)] + [2 * r + 2 * j + 1 for j in range(k)]
    pos = {old: new for new, old in enumerate(order)}
    gens = [gens[o] for o in order]
    pairs = [(pos[a], pos[b]) for a, b in pairs]
    return OddSymplecticSpace(tuple(gens), tuple(pairs))


# ---------------------------------------------------------------------------
# propagator

def projection_kernel(split: Splitting) -> np.ndarray:
    """K = sum_i alpha_i (x) beta_i + beta_i (x) alpha_i as a matrix K[a, b]."""
    a, b = split.alpha, split.beta
    return a @ b.T + b @ a.T


def identity_kernel(model: CyclicDGLA) -> np.ndarray:
    """The tensor Id with d Id = 0 whose contraction gives the full BV Laplacian."""
    return model.pairing_inverse()


def degree_signs(model: CyclicDGLA) -> np.ndarray:
    return np.diag([Fraction((-1) ** g) for g in model.degrees]).astype(object)


def tensor_differential(model: CyclicDGLA, T: np.ndarray) -> np.ndarray:
    """(d (x) 1 + 1 (x) d) applied to T[a, b] with the Koszul sign on the second factor."""
    D = model.d
    S = degree_signs(model)
    return D @ T - S @ T @ D.T


def is_graded_antisymmetric(model: CyclicDGLA, T: np.ndarray) -> bool:
    deg = model.degrees
    return all(T[a, b] == -((-1) ** (deg[a] * deg[b])) * T[b, a]
               for a in range(model.dim) for b in range(model.dim))


@dataclass(eq=False)
class Propagator:
    """P = h . omega^{-1} so that dP = Id - K; contracts to zero on Psi (x) Psi."""

    split: Splitting
    matrix: np.ndarray
    kernel: np.ndarray
    identity: np.ndarray
    diag_part: Fraction = Fraction(0)

    @property
    def model(self):
        return self.split.model


def build_propagator(split: Splitting) -> Propagator:
    model = split.model
    try:
        winv = model.pairing_inverse()
    except np.linalg.LinAlgError:
        raise ModelError("E_SINGULAR", "pairing is singular; no propagator") from None
    P = split.homotopy @ winv
    return Propagator(split, P, projection_kernel(split), winv)


def propagator_axioms(prop: Propagator) -> dict:
    """Named boolean checks: dP = Id - K, P vanishes on Psi, exchange antisymmetry."""
    model, split = prop.model, prop.split
    w = model.pairing
    psi = split.psi_basis
    return {
        "dP_equals_id_minus_K": la.is_zero(tensor_differential(model, prop.matrix) - (prop.identity - prop.kernel)),
        "vanishes_on_psi": la.is_zero(psi.T @ w @ prop.matrix @ w.T @ psi),
        "exchange_antisymmetric": is_graded_antisymmetric(model, prop.matrix),
    }


def psi_field(split: Splitting) -> list:
    """Components a_k of the restricted field sum_i x_i alpha_i + y_i beta_i,
    as linear polynomials on the cohomology space."""
    space = split.space
    r = split.rank
    n = split.model.dim
    out = []
    for k in range(n):
        items = [((i,), 0, split.alpha[k, i]) for i in range(r) if split.alpha[k, i] != 0]
        items += [((r + i,), 0, split.beta[k, i]) for i in range(r) if split.beta[k, i] != 0]
        out.append(SuperPolynomial.from_terms(space, items))
    return out
