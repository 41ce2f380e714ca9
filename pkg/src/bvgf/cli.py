"""Command line front end.  Every subcommand writes one JSON RunReport.

Exit codes: 0 pass, 1 verification failure, 2 input error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction
from importlib import resources
from pathlib import Path


from . import __version__, dgla
from . import linalg as la
from .action import ResourceBoundError, certified_window, effective_action, make_context, verify_qme
from .graphs import GraphBoundError, enumerate_graphs, wick_sum_oracle

DEFAULT_V, DEFAULT_D, DEFAULT_L = 4, 6, 2


class InputError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _q(c) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


def _matrix(M) -> list:
    return [[_q(v) for v in row] for row in M]


# ---------------------------------------------------------------------------
# inputs

def _read(path: str, inputs: dict):
    """Path on disk, or the name of a shipped model."""
    p = Path(path)
    if p.is_file():
        data = p.read_bytes()
    else:
        name = path[:-5] if path.endswith(".json") else path
        try:
            data = resources.files("bvgf.data").joinpath(f"{Path(name).name}.json").read_bytes()
        except (FileNotFoundError, OSError):
            raise InputError("E_ARGS", f"no such file or shipped model: {path}") from None
    inputs[Path(path).name] = hashlib.sha256(data).hexdigest()
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise InputError("E_SCHEMA", f"{path}: invalid JSON ({exc.msg})") from None


def _model(path, inputs) -> dgla.CyclicDGLA:
    return dgla.load_model(_read(path, inputs))


def _splitting(model, path, inputs) -> dgla.Splitting:
    """Split file: {"psi": columns?, "gauge": columns?, "shift": "p/q"?}."""
    if path is None:
        return dgla.cohomology_splitting(model)
    doc = _read(path, inputs)
    if not isinstance(doc, dict):
        raise InputError("E_SCHEMA", "split file must be a JSON object")
    try:
        psi = la.qarray(doc["psi"]).T if doc.get("psi") is not None else None
        gauge = la.qarray(doc["gauge"]).T if doc.get("gauge") is not None else "euclidean"
        split = dgla.cohomology_splitting(model, complement_choice=gauge, psi=psi)
        if doc.get("shift") is not None:
            from .homotopy import shifted_splitting
            split = shifted_splitting(split, Fraction(doc["shift"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, dgla.ModelError):
            raise
        raise InputError("E_SCHEMA", f"malformed split file ({exc})") from None
    return split


def _context(model, split, args):
    return make_context(model, split, (args.degree, args.hbar_order), tadpoles=args.tadpoles)


# ---------------------------------------------------------------------------
# subcommands: each returns (passed, result payload, truncation)

def cmd_validate(args, inputs):
    doc = _read(args.model, inputs)
    try:
        model = dgla.load_model(doc)
        errors = []
    except dgla.ModelErrors as exc:
        errors = exc.errors
    except dgla.ModelError as exc:
        if exc.code == "E_SCHEMA":
            raise
        errors = [exc]
    res = {"dimension": None, "errors": [{"code": e.code, "message": str(e), "witnesses": _plain(e.witnesses)}
                                         for e in errors]}
    if not errors:
        res["dimension"] = model.dim
        res["degrees"] = list(model.degrees)
    return not errors, res, None


def _plain(w):
    return json.loads(json.dumps(list(w), default=str))


def cmd_cohomology(args, inputs):
    model = _model(args.model, inputs)
    split = _splitting(model, args.split, inputs)
    prop = dgla.build_propagator(split)
    res = {
        "rank": split.rank,
        "generators": [list(g) for g in split.space.generators],
        "alpha": _matrix(split.alpha.T),
        "beta": _matrix(split.beta.T),
        "propagator_axioms": dgla.propagator_axioms(prop),
    }
    return all(res["propagator_axioms"].values()), res, None


def cmd_action(args, inputs):
    model = _model(args.model, inputs)
    split = _splitting(model, args.split, inputs)
    ctx = _context(model, split, args)
    S = effective_action(ctx, args.max_vertices)
    return True, {"action": S.to_json_obj()}, (args.degree, args.hbar_order)


def cmd_qme(args, inputs):
    model = _model(args.model, inputs)
    split = _splitting(model, args.split, inputs)
    ctx = _context(model, split, args)
    S = effective_action(ctx, args.max_vertices)
    rep = verify_qme(ctx, S, args.max_vertices)
    res = rep.to_json_obj()
    res["action_terms"] = len(S.terms)
    return rep.passed, res, (args.degree, args.hbar_order)


def cmd_homotopy(args, inputs):
    from .homotopy import run_master_homotopy
    model = _model(args.model, inputs)
    s0 = _splitting(model, args.split0, inputs)
    s1 = _splitting(model, args.split1, inputs)
    rep = run_master_homotopy(model, s0, s1, n_nodes=args.nodes, max_vertices=args.max_vertices,
                              truncation=(args.degree, args.hbar_order), richardson=not args.no_richardson)
    return rep.passed, rep.to_json_obj(), (args.degree, args.hbar_order)


def cmd_observable(args, inputs):
    from .links import LinkError, LinkWord, observable, observable_defect
    model = _model(args.model, inputs)
    split = _splitting(model, args.split, inputs)
    try:
        link = LinkWord.from_document(_read(args.link, inputs))
    except (KeyError, TypeError) as exc:
        raise InputError("E_SCHEMA", f"malformed link file ({exc})") from None
    except LinkError as exc:
        raise InputError(exc.code, str(exc)) from None
    ctx = _context(model, split, args)
    O = observable(ctx, link, args.max_vertices, framing=Fraction(args.framing))
    res = {"observable": O.value.to_json_obj(), "meta": O.meta}
    if args.defect:
        S = effective_action(ctx, args.max_vertices)
        res["defect"] = observable_defect(S, O).to_json_obj()
    return True, res, (args.degree, args.hbar_order)


def cmd_oracle(args, inputs):
    model = _model(args.model, inputs)
    rows = []
    ok = True
    for n in range(1, args.max_vertices + 1):
        for k in range(0, args.max_legs + 1):
            if (3 * n - k) % 2:
                continue
            classes = enumerate_graphs(n, k, allow_tadpoles=True, connected_only=False)
            lhs = sum((Fraction(1, g.aut_order) for g in classes), Fraction(0))
            rhs = wick_sum_oracle(n, k, max_trivalent=args.max_vertices)
            rows.append({"vertices": n, "legs": k, "classes": len(classes), "class_sum": _q(lhs),
                         "matching_sum": _q(rhs), "equal": lhs == rhs})
            ok &= lhs == rhs
    weighted = []
    if args.weighted:
        from .oracle import amplitude_oracle
        split = _splitting(model, args.split, inputs)
        ctx = make_context(model, split, (args.max_legs, 9))
        for n in range(1, min(args.max_vertices, 3) + 1):
            for k in range(0, args.max_legs + 1):
                if (3 * n - k) % 2:
                    continue
                eq = amplitude_oracle(ctx, n, k)
                weighted.append({"vertices": n, "legs": k, "equal": eq})
                ok &= eq
    return ok, {"counts": rows, "weighted": weighted}, None


COMMANDS = {
    "validate": cmd_validate, "cohomology": cmd_cohomology, "action": cmd_action, "qme": cmd_qme,
    "homotopy": cmd_homotopy, "observable": cmd_observable, "oracle": cmd_oracle,
}


def _parser():
    ap = argparse.ArgumentParser(prog="bvgf", description="Finite-model BV effective actions.")
    ap.add_argument("--out", help="write the report here instead of standard output")
    ap.add_argument("--timing", action="store_true", help="include wall-clock timing (breaks byte identity)")
    ap.add_argument("--threads", type=int, help="worker threads (overrides BVGF_THREADS; never changes output)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, split=True, bounds=True):
        p.add_argument("--model", required=True, help="model JSON file or shipped model name")
        if split:
            p.add_argument("--split", help="split JSON file (default: Euclidean policy)")
        if bounds:
            p.add_argument("--max-vertices", type=int, default=DEFAULT_V)
            p.add_argument("--degree", type=int, default=DEFAULT_D)
            p.add_argument("--hbar-order", type=int, default=DEFAULT_L)
            p.add_argument("--tadpoles", choices=("zero", "genuine"), default="genuine")
        p.add_argument("--out", dest="out_sub", help=argparse.SUPPRESS)
        return p

    common(sub.add_parser("validate"), split=False, bounds=False)
    common(sub.add_parser("cohomology"), bounds=False)
    common(sub.add_parser("action"))
    common(sub.add_parser("qme"))
    p = common(sub.add_parser("homotopy"), split=False)
    p.add_argument("--split0")
    p.add_argument("--split1")
    p.add_argument("--nodes", type=int, default=101)
    p.add_argument("--no-richardson", action="store_true")
    p.set_defaults(max_vertices=2, degree=4, hbar_order=1)
    p = common(sub.add_parser("observable"))
    p.add_argument("--link", required=True)
    p.add_argument("--framing", default="1", help="optional scalar multiplying the observable")
    p.add_argument("--defect", action="store_true", help="also report hbar Delta O + {S, O}")
    p.set_defaults(max_vertices=1, degree=2, hbar_order=1)
    p = common(sub.add_parser("oracle"))
    p.add_argument("--max-legs", type=int, default=3)
    p.add_argument("--weighted", action="store_true", help="amplitude-weighted comparison (V <= 3)")
    return ap


def _bounds_ok(args):
    for name in ("max_vertices", "degree", "hbar_order", "nodes", "max_legs"):
        v = getattr(args, name, None)
        if v is not None and v < 0:
            raise InputError("E_ARGS", f"--{name.replace('_', '-')} must be non-negative")


def run(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    out = getattr(args, "out_sub", None) or args.out
    if args.threads is not None:
        os.environ["BVGF_THREADS"] = str(max(1, args.threads))
    inputs: dict = {}
    t0 = time.perf_counter()
    report = {"command": args.command, "tool_version": __version__}
    try:
        _bounds_ok(args)
        passed, result, trunc = COMMANDS[args.command](args, inputs)
        code = 0 if passed else 1
        report.update({"status": "pass" if passed else "fail", "result": result})
    except InputError as exc:
        code, trunc = 2, None
        report.update({"status": "input_error", "error": {"code": exc.code, "message": str(exc)}})
    except dgla.ModelError as exc:
        code, trunc = 2, None
        report.update({"status": "input_error",
                       "error": {"code": exc.code, "message": str(exc), "witnesses": _plain(exc.witnesses)}})
    except (ResourceBoundError, GraphBoundError) as exc:
        code, trunc = 2, None
        report.update({"status": "input_error", "error": {"code": "E_RESOURCE", "message": str(exc)}})
    report["inputs"] = dict(sorted(inputs.items()))
    report["truncation"] = None if trunc is None else {"degree": trunc[0], "hbar": trunc[1],
                                                       "max_vertices": getattr(args, "max_vertices", None)}
    if args.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - t0, 3)}
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
