"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""
import json
import os
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from acceptance_report import lines, record
from bvgf import dgla
from bvgf import linalg as la
from bvgf.action import (effective_action, make_context, random_symplectic_change, symplectic_change,
                         verify_qme)
from bvgf.graphs import enumerate_graphs, wick_sum_oracle
from bvgf.homotopy import (jacobi_witness, propagator_potential, random_gauge, run_master_homotopy,
                           shifted_splitting)
from bvgf.links import (Component, adjoint, casimir_check, holonomy_trace, link_graph_amplitude, LinkWord,
                        observable_defect, rational_rotation, _window_graphs)
from bvgf.oracle import amplitude_oracle
from bvgf.superpoly import OddSymplecticSpace, SuperPolynomial, bracket, delta

MODELS = dgla.shipped_models()
TT = MODELS["twisted_torus"]
TT_SHIFT = shifted_splitting(dgla.cohomology_splitting(TT), Fraction(1, 10))
SPLITS = {"so3_lambda": dgla.cohomology_splitting(MODELS["so3_lambda"]), "twisted_torus": TT_SHIFT,
          "u1_lambda": dgla.cohomology_splitting(MODELS["u1_lambda"])}


def _random_poly(rng, space, parity):
    par = space.parities
    terms = {}
    for _ in range(rng.randint(1, 4)):
        mono = sorted(rng.sample(range(len(par)), rng.randint(0, 3)))
        if sum(par[i] for i in mono) % 2 != parity:
            continue
        c = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        terms[(tuple(mono), rng.randint(0, 1))] = c
    return SuperPolynomial(space, terms)


def test_criterion_01_bv_laws():
    rng = random.Random(1)
    space = OddSymplecticSpace.standard(3, [0, 1, 0])
    sg = lambda k: -1 if k % 2 else 1
    t0 = time.perf_counter()
    ok = True
    n = 120
    for _ in range(n):
        p, q = rng.randint(0, 1), rng.randint(0, 1)
        f, g, h = _random_poly(rng, space, p), _random_poly(rng, space, q), _random_poly(rng, space, rng.randint(0, 1))
        ok &= delta(delta(f)) == 0
        ok &= bracket(f, g) == bracket(g, f).scale(sg(p * q))
        ok &= delta(f * g) == delta(f) * g + (f * delta(g)).scale(sg(p)) + bracket(f, g)
        ok &= bracket(f, bracket(g, h)) == (bracket(bracket(f, g), h).scale(sg(p + 1))
                                            + bracket(g, bracket(f, h)).scale(sg((p + 1) * (q + 1))))
        ok &= delta(bracket(f, g)) == -bracket(delta(f), g) + bracket(f, delta(g)).scale(sg(p + 1))
    dt = time.perf_counter() - t0
    assert record(1, "BV laws on random polynomials", ok and dt < 5, f"{n} triples, {dt:.2f}s")


def test_criterion_02_enumeration_oracle():
    t0 = time.perf_counter()
    ok = True
    cases = 0
    for n in range(1, 5):
        for k in range(4):
            if (3 * n - k) % 2:
                continue
            lhs = sum((Fraction(1, g.aut_order) for g in enumerate_graphs(n, k, connected_only=False)), Fraction(0))
            ok &= lhs == wick_sum_oracle(n, k)
            cases += 1
    t1 = time.perf_counter()
    ctx = make_context(TT, TT_SHIFT, (3, 9))
    for n in range(1, 4):
        for k in range(4):
            if (3 * n - k) % 2 == 0:
                ok &= amplitude_oracle(ctx, n, k)
    t2 = time.perf_counter()
    ok &= t2 - t1 < 60
    assert record(2, "graph enumeration equals Wick oracle", ok,
                  f"{cases} count cases; weighted V<=3 in {t2 - t1:.1f}s")


@pytest.mark.parametrize("name", ["so3_lambda", "twisted_torus"])
def test_criterion_03_qme(name):
    t0 = time.perf_counter()
    ctx = make_context(MODELS[name], SPLITS[name], (6, 2))
    S = effective_action(ctx, 4)
    rep = verify_qme(ctx, S, 4)
    dt = time.perf_counter() - t0
    ok = rep.passed and dt < 120
    prev = getattr(test_criterion_03_qme, "acc", [])
    prev.append((name, ok, dt, len(S.terms)))
    test_criterion_03_qme.acc = prev
    detail = ", ".join(f"{n}: {t} terms {d:.0f}s" for n, _, d, t in prev)
    record(3, "QME residual zero in certified window (V=4, D=6, L=2)", all(o for _, o, _, _ in prev), detail)
    assert ok


def test_criterion_04_darboux():
    rng = random.Random(4)
    ok = True
    tr = (4, 1)
    for name, m in MODELS.items():
        split = SPLITS[name]
        S = effective_action(make_context(m, split, tr), 2)
        for _ in range(10):
            new, images = symplectic_change(split, random_symplectic_change(split, rng))
            S2 = effective_action(make_context(m, new, tr), 2)
            ok &= S2 == S.substitute(images, target=SuperPolynomial(new.space, {})).with_truncation(tr)
    assert record(4, "Darboux independence", ok, "10 random changes x 3 models")


def test_criterion_05_propagator():
    ok = all(all(dgla.propagator_axioms(dgla.build_propagator(s)).values()) for s in SPLITS.values())
    rng = random.Random(5)
    s = dgla.cohomology_splitting(TT)
    for _ in range(5):
        P, Q = dgla.build_propagator(random_gauge(s, rng)), dgla.build_propagator(random_gauge(s, rng))
        R = propagator_potential(P, Q)
        ok &= la.is_zero(dgla.tensor_differential(TT, R) - (Q.matrix - P.matrix))
    assert record(5, "propagator axioms and uniqueness up to exact terms", ok, "5 random gauge pairs")


@pytest.fixture(scope="module")
def homotopy_run():
    t0 = time.perf_counter()
    rep = run_master_homotopy(TT, dgla.cohomology_splitting(TT), TT_SHIFT, n_nodes=101, max_vertices=2,
                              truncation=(4, 1))
    return rep, time.perf_counter() - t0


def test_criterion_06_master_homotopy(homotopy_run):
    rep, dt = homotopy_run
    ratio_ok = rep.ratio is not None and abs(rep.ratio - 4.0) <= 0.5
    ok = all(rep.residual1_zero) and ratio_ok and rep.endpoints_match and dt < 600
    assert record(6, "master homotopy on the twisted torus, 101 nodes", ok,
                  f"ratio {float(rep.ratio or 0):.3f}, endpoints {rep.endpoints_match}, {dt:.0f}s")


def test_criterion_07_contraction(homotopy_run):
    rep, _ = homotopy_run
    assert record(7, "<P0, alpha0 (x) beta0> = 0 at every node", bool(rep.contraction_zero))


def test_criterion_08_jacobi():
    vals = {name: jacobi_witness(m) == 0 for name, m in MODELS.items()}
    assert record(8, "Jacobi collapse witness vanishes", all(vals.values()), ", ".join(sorted(vals)))


def test_criterion_09_observables():
    rng = random.Random(9)
    lie = dgla.so3()
    rot = lambda: rational_rotation([rng.randint(-2, 2) for _ in range(3)], Fraction(rng.randint(-3, 3), 4))
    ok = True
    for _ in range(50):
        n = rng.randint(1, 4)
        comp = Component([rot() for _ in range(n)])
        ins = [None if rng.random() < 0.3 else lie.rep_matrix([Fraction(rng.randint(-2, 2)) for _ in range(3)])
               for _ in range(n)]
        base = holonomy_trace(comp, ins)
        k = rng.randrange(n)
        ok &= holonomy_trace(comp.rotated(k), ins[k:] + ins[:k]) == base
        gs = [rot() for _ in range(n)]
        segs = [gs[(j + 1) % n] @ comp.segments[j] @ la.inverse(gs[j]) for j in range(n)]
        moved = [None if X is None else adjoint(gs[(j + 1) % n], X) for j, X in enumerate(ins)]
        ok &= holonomy_trace(Component(segs), moved) == base
    ctx = make_context(MODELS["so3_lambda"], truncation=(4, 1))
    ok &= observable_defect(effective_action(ctx, 2), 1) == 0
    u1 = MODELS["u1_lambda"]
    uctx = make_context(u1, truncation=(3, 1))
    link = LinkWord([Component([la.eye(1)] * 3)])
    for marks in [((0, 0),), ((0, 0), (0, 1)), ((0, 0), (0, 1), (0, 2))]:
        for g in _window_graphs(marks, (3, 1), 2):
            if g.n_tri:
                ok &= link_graph_amplitude(uctx, link, g) == 0
    ok &= casimir_check(lie) and casimir_check(dgla.u1())
    assert record(9, "observables: holonomy, defect, abelian vanishing, Casimir", ok, "50 random words")


def _cli(args, threads, cwd):
    env = dict(os.environ, BVGF_THREADS=str(threads))
    return subprocess.run([sys.executable, "-m", "bvgf.cli", *args], capture_output=True, env=env, cwd=cwd)


def test_criterion_10_cli_determinism(tmp_path):
    split = tmp_path / "shift.json"
    split.write_text(json.dumps({"shift": "1/10"}))
    runs = [["qme", "--model", "so3_lambda"],
            ["action", "--model", "twisted_torus", "--split", str(split), "--max-vertices", "2", "--degree", "4",
             "--hbar-order", "1"]]
    ok = True
    for args in runs:
        outs = [_cli(args, t, tmp_path) for t in (1, 2, 1)]
        ok &= all(o.returncode == 0 for o in outs)
        ok &= outs[0].stdout == outs[1].stdout == outs[2].stdout and len(outs[0].stdout) > 0
    assert record(10, "CLI reports byte-identical across runs and BVGF_THREADS", ok, "qme, action")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
