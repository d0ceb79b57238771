"""Command-line front end: verification suites, representation builds and label classification.

Every command prints one JSON document.  Exit codes: 0 pass, 1 verification
failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import braid, rea
from .classify import ClassificationError, central_from_weight, enumerate_labels, shape_family, validate_label
from .reps import (IDENTITIES, DEFAULT_DIM, DEFAULT_Q, DEFAULT_TOL, RepresentationError, ShapeDetectionError,
                   apply_alpha, central_values, character_rep, decompose_pieces, detect_shape, re_residual,
                   rep_from_spec, verma_big_cell, verify_in_rep, weight_analysis)
from .shapes import Shape, ShapeError, alpha_transform, reduce_to_big_cell, signature
from .triangular import NotUnitarizable

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
SUITE_BOUNDS = {"braid": 5, "rea": 4, "reps": 3}


class InputError(ValueError):
    pass


def _cplx(x) -> list[float]:
    x = complex(x)
    return [float(x.real), float(x.imag)]


# -- verify -------------------------------------------------------------------------------------

def _suite_braid(n: int, args) -> list[dict]:
    return [braid.verify_braid(ident, n) for ident in braid.BRAID_IDS]


def _suite_rea(n: int, args) -> list[dict]:
    out = []
    for ident in ("centrality", "qdet-sigma", "laplace-star-link", "general-comm"):
        params = {"max_k": 1 if ident == "general-comm" and n > 2 else 2, "seed": args.seed}
        if ident == "general-comm" and n > 2:
            params["sample"] = 50
        rep = rea.verify_identity(ident, n, params)
        if rep["passed"]:
            rep.pop("failures", None)
        out.append(rep)
    return out


def _suite_reps(n: int, args) -> list[dict]:
    q0, tol, d = args.q, args.tol, args.dim
    out = []
    reps = []
    for k in range(n + 1):
        for l in range((n - k) // 2 + 1):
            reps.append((f"character k={k} l={l}", character_rep(n, k, l, 1.3, 1.0, [0.4] * l, q0)))
    eps = (1,) * n
    reps.append((f"verma eps={list(eps)} r=0", verma_big_cell(eps, (0.0,) * n, 4 if n > 2 else 6, q0)))
    for name, rep in reps:
        res = re_residual(rep)
        out.append({"identity": "reflection-equation", "rep": name, "max_residual": res, "passed": res <= tol})
        shape = detect_shape(rep)
        for ident in IDENTITIES:
            r = verify_in_rep(ident, rep, shape, tol=tol)
            out.append(dict(r.to_json(), rep=name))
    vm = reps[-1][1]
    hc = central_values(vm).real
    expect = np.array(central_from_weight(eps, (0.0,) * n, q0).values)
    dev = float(np.max(np.abs(hc - expect)))
    out.append({"identity": "harish-chandra", "rep": reps[-1][0], "max_residual": dev, "passed": dev <= tol})
    if n >= 2:
        base = reps[0][1]
        moved = apply_alpha(base, 1, d)
        dev = float(np.max(np.abs(central_values(moved) - central_values(base))))
        out.append({"identity": "central-coinvariance", "rep": reps[0][0], "max_residual": dev,
                    "passed": dev <= tol})
    return out


def cmd_verify(args) -> tuple[int, dict]:
    suite = args.suite
    if suite not in SUITE_BOUNDS:
        raise InputError(f"unknown suite {suite!r}; choose from {sorted(SUITE_BOUNDS)}")
    if not 1 <= args.n <= SUITE_BOUNDS[suite]:
        raise InputError(f"suite {suite} supports 1 <= N <= {SUITE_BOUNDS[suite]}")
    runner = {"braid": _suite_braid, "rea": _suite_rea, "reps": _suite_reps}[suite]
    checks = runner(args.n, args)
    passed = all(c.get("passed", False) for c in checks)
    report = {"command": "verify", "suite": suite, "n": args.n, "q": args.q, "seed": args.seed,
              "passed": passed, "checks": checks}
    return (EXIT_OK if passed else EXIT_FAIL), report


# -- build --------------------------------------------------------------------------------------

def _read_json(path: str | None):
    if path is None:
        raise InputError("--in FILE is required")
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def cmd_build(args) -> tuple[int, dict]:
    spec = _read_json(args.input)
    if not isinstance(spec, dict) or "base" not in spec:
        raise InputError("chain spec must be an object with a 'base' entry")
    spec.setdefault("q", args.q)
    chain = spec.get("chain", [])
    base_spec = dict(spec, chain=[])
    try:
        rep = rep_from_spec(base_spec)
        shapes = [detect_shape(rep)]
        for step in chain:
            k = int(step["alpha"])
            rep = apply_alpha(rep, k, int(step.get("d", args.dim)))
            shapes = [s for sh in shapes for s in alpha_transform(sh, k)]
    except (RepresentationError, ShapeError, NotUnitarizable, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid chain spec: {exc}") from exc
    report = {"command": "build", "q": rep.q0, "dim": rep.dim, "n": rep.n,
              "reflection_residual": re_residual(rep)}
    try:
        report["central_values"] = [float(x.real) for x in central_values(rep)]
    except RepresentationError as exc:
        report["central_values"] = None
        report["central_error"] = str(exc)
    passed = report["reflection_residual"] <= args.tol and report["central_values"] is not None
    if chain:
        pieces = decompose_pieces(rep, shapes)
        report["predicted_shapes"] = [s.cycle_normalized().to_json() for s in shapes]
        report["pieces"] = [{"shape": p.shape.to_json(), "highest_weight": [_cplx(x) for x in p.weight],
                             "span_dim": int(p.span.basis.shape[1])} for p in pieces]
        found = {p.shape for p in pieces}
        want = {s.cycle_normalized() for s in shapes}
        report["shapes_match"] = found == want
        passed = passed and report["shapes_match"]
    else:
        try:
            shape = detect_shape(rep)
            report["shape"] = shape.to_json()
            report["weights"] = weight_analysis(rep, shape).to_json()
        except (ShapeDetectionError, RepresentationError) as exc:
            report["shape"] = None
            report["detection_error"] = str(exc)
            passed = False
    report["passed"] = passed
    return (EXIT_OK if passed else EXIT_FAIL), report


# -- classify -----------------------------------------------------------------------------------

def _parse_shape(obj) -> Shape:
    try:
        shape = Shape.from_json(obj)
    except (ShapeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed shape: {exc}") from exc
    if not shape.is_self_adjoint():
        raise InputError(f"shape {shape.describe()} is not self-adjoint; shape matrices must be")
    return shape


def cmd_classify(args) -> tuple[int, dict]:
    if args.enumerate:
        rank = args.n if args.rank is None else args.rank
        labels = list(enumerate_labels(args.n, rank, args.q, limit=args.limit, finite=args.finite))
        families = sorted({repr(shape_family(l.shape)) for l in labels})
        report = {"command": "classify", "mode": "enumerate", "n": args.n, "rank": rank, "q": args.q,
                  "finite": args.finite, "families": families,
                  "labels": [dict(l.to_json(), signature=list(signature(l.shape)),
                                  word=list(reduce_to_big_cell(l.shape).word)) for l in labels]}
        return EXIT_OK, report
    doc = _read_json(args.input)
    if not isinstance(doc, dict) or "shape" not in doc:
        raise InputError("classify input must be an object with 'shape' (and 'central')")
    shape = _parse_shape(doc["shape"])
    central = doc.get("central", args.central)
    if central is None:
        raise InputError("central values missing: give 'central' in the input or --central")
    try:
        central = [float(x) for x in central]
    except (TypeError, ValueError) as exc:
        raise InputError(f"central values must be real numbers: {exc}") from exc
    try:
        verdict = validate_label(shape, central, args.q)
    except (ShapeError, ClassificationError) as exc:
        raise InputError(str(exc)) from exc
    report = {"command": "classify", "mode": "validate", "shape": shape.to_json(), "central": central,
              "q": args.q, **verdict}
    return (EXIT_OK if verdict["valid"] else EXIT_FAIL), report


# -- entry point --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="matrix size N")
    common.add_argument("--q", type=float, default=DEFAULT_Q, help="deformation parameter in (0, 1)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="residual tolerance")
    common.add_argument("--dim", type=int, default=DEFAULT_DIM, help="truncation level of each s-factor")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--in", dest="input", help="input JSON file")
    common.add_argument("--out", dest="output", help="write the report here instead of stdout")
    p = argparse.ArgumentParser(prog="qrea", description="O_q(H(N)) shapes, representations and labels")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", default="braid", help="braid, rea or reps")
    sub.add_parser("build", parents=[common], help="build a representation from a chain spec")
    c = sub.add_parser("classify", parents=[common], help="validate or enumerate labels (S, s)")
    c.add_argument("--enumerate", action="store_true", help="enumerate labels instead of validating")
    c.add_argument("--rank", type=int, default=None, help="rank of enumerated shapes")
    c.add_argument("--limit", type=int, default=2, help="central characters per shape")
    c.add_argument("--finite", action="store_true", help="only shapes of finite-dimensional irreducibles")
    c.add_argument("--central", type=float, nargs="+", help="central values s_1..s_N")
    return p


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if not 0.0 < args.q < 1.0:
            raise InputError(f"--q must lie in (0, 1), got {args.q}")
        handler = {"verify": cmd_verify, "build": cmd_build, "classify": cmd_classify}[args.command]
        code, report = handler(args)
    except InputError as exc:
        code, report = EXIT_INPUT, {"command": args.command, "error": str(exc)}
    _emit(report, getattr(args, "output", None))
    return code


if __name__ == "__main__":
    sys.exit(main())
