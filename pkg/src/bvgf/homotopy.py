"""One-parameter families of gauge data and the master homotopy (A(t), B(t)).

The dt component is carried internally by an auxiliary odd constant ``tau``
(``dt`` placed on the right: ``S~ = A + B dt``), then split into the two
containers A and B.  Time derivatives are finite differences on a uniform
grid: central inside, one-sided second order at the ends.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import dgla
from . import linalg as la
from .action import (AmplitudeContext, certified_window, effective_action, make_context,
                     model_frame, adapted_frame)
from .graphs import enumerate_graphs
from .superpoly import (EVEN, ODD, OddSymplecticSpace, SuperPolynomial, homotopy_residual,
                        time_derivative)


class DegeneratePathError(dgla.ModelError):
    pass


def rotating_schedule(t):
    """sin of the angle 2 arctan t, a rational map [0, 1] -> [0, 1]."""
    t = Fraction(t)
    return 2 * t / (1 + t * t)


def linear_schedule(t):
    return Fraction(t)


SCHEDULES = {"rotating": rotating_schedule, "linear": linear_schedule}


@dataclass(eq=False)
class DataPath:
    model: dgla.CyclicDGLA
    grid: list
    splittings: list
    alpha1: list
    beta1: list

    @property
    def dt(self):
        return self.grid[1] - self.grid[0]

    @property
    def n_nodes(self):
        return len(self.grid)


def _fd(values, dt):
    """Second-order finite differences of a list of arrays."""
    n = len(values)
    if n < 3:
        raise ValueError("at least three nodes are required")
    out = []
    for i in range(n):
        if i == 0:
            v = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * dt)
        elif i == n - 1:
            v = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * dt)
        else:
            v = (values[i + 1] - values[i - 1]) / (2 * dt)
        out.append(v)
    return out


def _sorted_by_degree(model, M):
    cols = [M[:, j] for j in range(M.shape[1])]
    cols.sort(key=lambda v: dgla._vec_degree(model, v))
    return dgla._columns(cols, model.dim)


def _project_off(model, psi, V):
    """Project columns of V onto psi^perp (pairing) along psi."""
    if psi.shape[1] == 0 or V.shape[1] == 0:
        return V
    w = model.pairing
    G = psi.T @ w @ psi
    return V - psi @ la.inverse(G) @ (psi.T @ w @ V)


def make_path(model: dgla.CyclicDGLA, split0: dgla.Splitting, split1: dgla.Splitting,
              n_nodes: int = 101, interpolation="rotating") -> DataPath:
    """Splittings interpolating split0 -> split1 on a uniform grid.

    ``interpolation``: "rotating" (default, rational angle schedule), "linear",
    or an explicit list of ``(psi, gauge)`` column matrices, one per node.
    Representatives move as psi(t) = psi0 + s(t) (psi1 - psi0); the gauge
    Lagrangian is interpolated the same way and projected onto psi(t)^perp.
    """
    if n_nodes < 3:
        raise ValueError("n_nodes must be at least 3")
    grid = [Fraction(i, n_nodes - 1) for i in range(n_nodes)]
    if isinstance(interpolation, str):
        if interpolation not in SCHEDULES:
            raise ValueError(f"unknown interpolation {interpolation!r}")
        sched = SCHEDULES[interpolation]
        P0, P1 = split0.psi_basis, split1.psi_basis
        U0, U1 = _sorted_by_degree(model, split0.gauge), _sorted_by_degree(model, split1.gauge)
        if P0.shape != P1.shape or U0.shape != U1.shape:
            raise DegeneratePathError("E_DEGENERATE", "splittings have different shapes")
        samples = []
        for t in grid:
            s = sched(t)
            psi = P0 + s * (P1 - P0)
            U = _project_off(model, psi, U0 + s * (U1 - U0))
            samples.append((psi, U))
    else:
        samples = list(interpolation)
        if len(samples) != n_nodes:
            raise ValueError("one sample per node required")
    splits = []
    for i, (psi, U) in enumerate(samples):
        try:
            splits.append(dgla.cohomology_splitting(model, complement_choice=U, psi=psi))
        except dgla.ModelError as exc:
            if exc.code == "E_NOT_CLOSED":
                raise
            raise DegeneratePathError("E_DEGENERATE", f"degenerate splitting at node {i}: {exc}",
                                      [i]) from None
    r = splits[0].rank
    if any(sp.rank != r for sp in splits):
        raise DegeneratePathError("E_DEGENERATE", "rank changes along the path")
    dt = grid[1] - grid[0]
    adot = _fd([sp.alpha for sp in splits], dt)
    bdot = _fd([sp.beta for sp in splits], dt)
    # alpha1 = -h(alpha0'): lies in psi^perp and d alpha1 = -alpha0' (alpha0' is exact)
    alpha1 = [-(sp.homotopy @ a) for sp, a in zip(splits, adot)]
    beta1 = [-(sp.homotopy @ b) for sp, b in zip(splits, bdot)]
    return DataPath(model, grid, splits, alpha1, beta1)


def constant_path(split: dgla.Splitting, n_nodes: int = 101) -> DataPath:
    return make_path(split.model, split, split, n_nodes)


# ---------------------------------------------------------------------------
# extended propagator

@dataclass(eq=False)
class ExtendedPropagator:
    P0: list
    P1: list
    K1: list

    def contraction(self, path: DataPath, i: int):
        """<P0(t), alpha0(t) (x) beta0(t)> at node i as a matrix."""
        sp = path.splittings[i]
        w = path.model.pairing
        return sp.alpha.T @ w @ self.P0[i].matrix @ w.T @ sp.beta


def kernel_dt_component(path: DataPath, i: int) -> np.ndarray:
    """K1: the dt part of sum alpha~ (x) beta~ + beta~ (x) alpha~."""
    sp = path.splittings[i]
    a0, b0 = sp.alpha, sp.beta
    a1, b1 = path.alpha1[i], path.beta1[i]
    return K1_SIGNS[0] * (a0 @ b1.T) + K1_SIGNS[1] * (a1 @ b0.T) \
        + K1_SIGNS[2] * (b0 @ a1.T) + K1_SIGNS[3] * (b1 @ a0.T)


K1_SIGNS = (1, 1, -1, 1)


def tensor_homotopy(model, split: dgla.Splitting, X: np.ndarray) -> np.ndarray:
    """Exchange-symmetric contracting homotopy of the tensor square, applied to X."""
    H = split.homotopy
    Pi = split.cohomology_projection()
    S = -dgla.degree_signs(model)   # Koszul sign of the shifted first factor
    a = H @ X + Pi @ S @ X @ H.T
    b = S @ X @ H.T + H @ X @ Pi.T
    return (a + b) / 2


def extended_propagator(path: DataPath) -> ExtendedPropagator:
    model = path.model
    P0 = [dgla.build_propagator(sp) for sp in path.splittings]
    pdot = _fd([p.matrix for p in P0], path.dt)
    P1, K1 = [], []
    for i, sp in enumerate(path.splittings):
        k1 = kernel_dt_component(path, i)
        P1.append(tensor_homotopy(model, sp, k1 - pdot[i]))
        K1.append(k1)
    return ExtendedPropagator(P0, P1, K1)


def shifted_splitting(split: dgla.Splitting, scale=Fraction(1, 2)) -> dgla.Splitting:
    """Same cohomology classes, representatives moved by exact vectors.

    alpha_i gets ``scale * sum_k (k+1) w_k`` over exact basis vectors w_k of its
    degree; beta is recomputed by the Darboux normalization.  The gauge
    Lagrangian is the old one projected onto the new psi^perp.
    """
    model = split.model
    n = model.dim
    scale = Fraction(scale)
    exact = [split.exact[:, k] for k in range(split.exact.shape[1])]

    def moved(v, offset):
        dg = dgla._vec_degree(model, v)
        out = v.copy()
        for k, e in enumerate(e for e in exact if dgla._vec_degree(model, e) == dg):
            out = out + (scale * (k + offset)) * e
        return out

    cols = [moved(split.alpha[:, j], 1) for j in range(split.rank)]
    cols += [moved(split.beta[:, j], 2) for j in range(split.rank)]
    psi = np.stack(cols, axis=1) if cols else split.psi_basis
    U = _project_off(model, psi, split.gauge)
    return dgla.cohomology_splitting(model, complement_choice=U, psi=psi)


# ---------------------------------------------------------------------------
# extended action

TAU_SIGNS = {"psi": 1, "P": -1, "B": -1, "psi_deg": 1, "P_deg": 0}


def _column_signs(space, r):
    """Sign of the dt part of the field per cohomology generator."""
    e = TAU_SIGNS["psi_deg"]
    return [TAU_SIGNS["psi"] * (-1) ** (e * space.generators[i][2]) for i in range(2 * r)]


def _tau_space(space: OddSymplecticSpace):
    from .superpoly import SuperSpace
    return SuperSpace(tuple(space.generators) + (("tau", ODD, 1),))


def _linear_field(space, alpha, beta, lift=None):
    r = alpha.shape[1]
    n = alpha.shape[0]
    out = []
    for k in range(n):
        items = [((i,), 0, alpha[k, i]) for i in range(r) if alpha[k, i] != 0]
        items += [((r + i,), 0, beta[k, i]) for i in range(r) if beta[k, i] != 0]
        out.append(SuperPolynomial.from_terms(space, items))
    return out


def extended_context(path: DataPath, ep: ExtendedPropagator, i: int, truncation,
                     tadpoles: str = "genuine") -> AmplitudeContext:
    """Amplitude context over (x, y, tau) with psi~ = psi0 + tau psi1 and P~ = P0 + tau P1."""
    sp = path.splittings[i]
    ext = _tau_space(sp.space)
    tau_idx = len(ext.generators) - 1
    tau = SuperPolynomial(ext, {((tau_idx,), 0): Fraction(1)})
    psi0 = _linear_field(ext, sp.alpha, sp.beta)
    r = sp.rank
    sig = _column_signs(sp.space, r)
    a1 = path.alpha1[i] * np.array([Fraction(v) for v in sig[:r]], dtype=object)
    b1 = path.beta1[i] * np.array([Fraction(v) for v in sig[r:]], dtype=object)
    psi1 = _linear_field(ext, a1, b1)
    psi = [p + tau * q for p, q in zip(psi0, psi1)]
    S = dgla.degree_signs(path.model) if TAU_SIGNS["P_deg"] else np.eye(path.model.dim, dtype=int)
    Pt = [(None, ep.P0[i].matrix), (tau.scale(TAU_SIGNS["P"]), S @ ep.P1[i])]
    prop = dgla.Propagator(sp, Pt, ep.P0[i].kernel, ep.P0[i].identity)
    # psi1 lies in the gauge directions: legs u_j -> tau * (linear form in x, y)
    c1 = sp.basis_inv @ np.concatenate([a1, b1], axis=1)
    gauge_legs = {}
    for j in range(2 * r, path.model.dim):
        row = c1[j]
        if any(v != 0 for v in row):
            lin = SuperPolynomial(ext, {((q,), 0): row[q] for q in range(2 * r) if row[q] != 0})
            gauge_legs[j] = tau * lin
    if any(v != 0 for v in c1[:2 * r].flat):
        fr = model_frame(path.model, psi)
    else:
        fr = adapted_frame(sp, [ep.P0[i].matrix, Pt[1][1]], gauge_legs, base=ext)
    return AmplitudeContext(path.model, prop, sp, psi, tuple(truncation), (), fr, tadpoles)


def split_tau(S: SuperPolynomial, space: OddSymplecticSpace, truncation):
    """(A, B) from S~ = A + B dt with dt = tau placed on the right."""
    tau_idx = len(space.generators)
    a_terms, b_terms = {}, {}
    for (mono, h), c in S.terms.items():
        if tau_idx in mono:
            pos = mono.index(tau_idx)
            rest = mono[:pos] + mono[pos + 1:]
            # move tau from position pos to the right end
            par = space.parities
            k = sum(par[g] for g in rest[pos:]) % 2
            b_terms[(rest, h)] = b_terms.get((rest, h), 0) + (-c if k else c)
        else:
            a_terms[(mono, h)] = c
    A = SuperPolynomial(space, a_terms, truncation)
    B = SuperPolynomial(space, b_terms, truncation)
    return A, B.scale(TAU_SIGNS["B"])


def extended_action(path: DataPath, ep: ExtendedPropagator, max_vertices: int = 3, truncation=(4, 1),
                    nodes=None, tadpoles: str = "genuine"):
    """Lists A(t_i), B(t_i) for the requested node indices (default: all)."""
    nodes = range(path.n_nodes) if nodes is None else nodes
    As, Bs = [], []
    for i in nodes:
        ctx = extended_context(path, ep, i, (truncation[0] + 1, truncation[1]), tadpoles)
        S = effective_action(ctx, max_vertices)
        A, B = split_tau(S, path.splittings[i].space, tuple(truncation))
        As.append(A)
        Bs.append(B)
    return As, Bs


# ---------------------------------------------------------------------------
# verification

@dataclass
class HomotopyReport:
    passed: bool
    residual1_zero: list
    residual2_max: list
    ratio: Fraction | None
    witnesses: list
    endpoints_match: bool | None = None
    contraction_zero: bool | None = None

    def to_json_obj(self):
        return {
            "passed": self.passed,
            "residual1_zero_all": all(self.residual1_zero),
            "residual1_failing_nodes": [i for i, ok in enumerate(self.residual1_zero) if not ok],
            "residual2_max": [_q(v) for v in self.residual2_max],
            "richardson_ratio": None if self.ratio is None else _q(self.ratio),
            "richardson_ratio_approx": None if self.ratio is None else round(float(self.ratio), 6),
            "endpoints_match": self.endpoints_match,
            "contraction_zero": self.contraction_zero,
            "witnesses": self.witnesses,
        }


def _q(c) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


def _window_max(p: SuperPolynomial, window) -> Fraction:
    vals = [abs(c) for (m, h), c in p.terms.items() if (len(m), h) in window and m]
    return max(vals, default=Fraction(0))


def residual_profile(A, B, dt, window):
    """(residual1 zero flags, residual2 max per node) restricted to the window."""
    r1, r2 = homotopy_residual(A, B, dt)
    zero1 = [not any((len(m), h) in window for (m, h), c in r.terms.items() if c != 0) for r in r1]
    return zero1, [_window_max(r, window) for r in r2]


def verify_master_homotopy(A, B, dt=None, window=None, coarse=None, ratio_band=(3.5, 4.5),
                           endpoints=None) -> HomotopyReport:
    """Check both component equations of a master homotopy on a uniform grid.

    ``coarse`` = (A_c, B_c) on the grid with twice the spacing; the largest
    residual2 over the shared nodes must shrink by a factor within
    ``ratio_band`` on the fine grid.  Without ``coarse`` residual2 must vanish
    exactly.  ``endpoints`` = (S0, S1) standalone actions to compare with A.
    """
    n = len(A)
    dt = Fraction(1, n - 1) if dt is None else Fraction(dt)
    if window is None:
        window = {(len(m), h) for a in A for (m, h) in a.terms} | {(len(m), h) for b in B for (m, h) in b.terms}
    zero1, r2max = residual_profile(A, B, dt, window)
    witnesses = [{"node": i, "residual": 1} for i, ok in enumerate(zero1) if not ok]
    ratio = None
    if coarse is not None:
        Ac, Bc = coarse
        if 2 * (len(Ac) - 1) != n - 1:
            raise ValueError("coarse grid must have half the intervals")
        _, r2c = residual_profile(Ac, Bc, 2 * dt, window)
        fine = max((r2max[2 * i] for i in range(len(Ac))), default=Fraction(0))
        crude = max(r2c, default=Fraction(0))
        if fine == 0 and crude == 0:
            ok2 = True
        elif fine == 0:
            ok2 = True
        else:
            ratio = Fraction(crude) / Fraction(fine)
            ok2 = ratio_band[0] <= ratio <= ratio_band[1]
        if not ok2:
            worst = max(range(len(Ac)), key=lambda i: r2max[2 * i])
            witnesses.append({"node": 2 * worst, "residual": 2})
    else:
        ok2 = all(v == 0 for v in r2max)
        witnesses += [{"node": i, "residual": 2} for i, v in enumerate(r2max) if v != 0][:1]
    ends = None
    if endpoints is not None:
        S0, S1 = endpoints
        ends = A[0] == S0 and A[-1] == S1
        if not ends:
            witnesses.append({"node": 0 if A[0] != S0 else n - 1, "residual": "endpoint"})
    passed = all(zero1) and ok2 and ends is not False
    return HomotopyReport(passed, zero1, r2max, ratio, witnesses, ends)


def run_master_homotopy(model, s0, s1, n_nodes=101, max_vertices=2, truncation=(4, 1),
                        richardson=True, interpolation="rotating") -> HomotopyReport:
    """Build A, B along s0 -> s1 and verify them; the coarse grid reuses the even nodes."""
    path = make_path(model, s0, s1, n_nodes, interpolation)
    ep = extended_propagator(path)
    A, B = extended_action(path, ep, max_vertices, truncation)
    coarse = None
    if richardson:
        if (n_nodes - 1) % 2:
            raise ValueError("Richardson check needs an even number of intervals")
        cpath = make_path(model, s0, s1, (n_nodes + 1) // 2, interpolation)
        _, Bc = extended_action(cpath, extended_propagator(cpath), max_vertices, truncation)
        coarse = (A[::2], Bc)
    ends = []
    for sp in (s0, s1):
        ctx = make_context(model, sp, tuple(truncation), tadpoles="genuine")
        ends.append(effective_action(ctx, max_vertices))
    window = set(certified_window(tuple(truncation), max_vertices))
    rep = verify_master_homotopy(A, B, path.dt, window, coarse, endpoints=tuple(ends))
    bad = [i for i in range(n_nodes) if not la.is_zero(ep.contraction(path, i))]
    rep.contraction_zero = not bad
    rep.witnesses += [{"node": i, "residual": "contraction"} for i in bad[:1]]
    rep.passed = rep.passed and not bad
    return rep


# ---------------------------------------------------------------------------
# uniqueness of the propagator and the Jacobi collapse

def propagator_potential(P: dgla.Propagator, Q: dgla.Propagator) -> np.ndarray:
    """Tensor R with dR = Q - P, for propagators sharing the cohomology data.

    Q - P is closed with vanishing cohomology component, so the tensor
    homotopy of P's splitting inverts d on it.  Raises ModelError otherwise.
    """
    model = P.model
    X = Q.matrix - P.matrix
    if not la.is_zero(Q.kernel - P.kernel):
        raise dgla.ModelError("E_RANK", "propagators belong to different cohomology representatives")
    if not la.is_zero(dgla.tensor_differential(model, X)):
        raise dgla.ModelError("E_NOT_CLOSED", "difference of propagators is not closed")
    R = tensor_homotopy(model, P.split, X)
    if not la.is_zero(dgla.tensor_differential(model, R) - X):
        raise dgla.ModelError("E_RANK", "difference of propagators has a cohomology component")
    return R


def random_gauge(split: dgla.Splitting, rng) -> dgla.Splitting:
    """Same Psi, gauge Lagrangian moved by a random degree-preserving map into im d."""
    model = split.model
    U, W = split.gauge, split.exact
    du = [dgla._vec_degree(model, U[:, i]) for i in range(U.shape[1])]
    dw = [dgla._vec_degree(model, W[:, j]) for j in range(W.shape[1])]
    X = la.zeros(W.shape[1], U.shape[1])
    for i in range(U.shape[1]):
        for j in range(W.shape[1]):
            if du[i] == dw[j] and rng.random() < 0.5:
                X[j, i] = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
    return dgla.cohomology_splitting(model, complement_choice=U + W @ X, psi=split.psi_basis)


def jacobi_witness(model: dgla.CyclicDGLA) -> SuperPolynomial:
    """Two cubic vertices joined by one Id_kernel edge, four legs left open.

    The polynomial sums the three ways of pairing four legs; it is the
    tree-level collapse term and vanishes by the Jacobi identity.
    """
    from .action import contract, coordinate_space, field_polynomials
    space = coordinate_space(model)
    V3, _ = field_polynomials(model)
    legs = [space.gen(i) for i in range(model.dim)]
    factors = [([v], (lambda work, v=v: work.copy(V3, v))) for v in (0, 1)]
    return contract(space, space, 2, factors, [(0, 1, model.pairing_inverse())], [2, 2], legs, [3, 3])
