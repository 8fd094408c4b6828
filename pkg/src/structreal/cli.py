"""Command-line front end.

Exit codes: 0 pass, 1 fail, 2 input error, 3 indeterminate (marginal
spectrum), 4 internal inconsistency between the two stability criteria.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import (
    IndeterminateError,
    InputError,
    PreconditionError,
    StructrealError,
    StructureError,
    SynthesisError,
    WellPosednessError,
)
from .graph import adjacency, validate_graph
from .numerics import Tolerances
from .realize import minimal_realization, realize_chain, realize_stable, verify_structured_realization
from .serialize import dumps, load_graph, load_system, system_to_json
from .stability import internal_stability_ss, internal_stability_tf
from .synthesis import (
    build_youla_generator,
    close_lft,
    diagonal_test,
    structured_stabilizability_test,
    synthesize_k0,
)
from .system import StructuredPattern, is_structured_tf, systems_equal

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_INDETERMINATE, EXIT_INCONSISTENT = 0, 1, 2, 3, 4

def _tol(args) -> Tolerances:
    return Tolerances(args.tol_rank, args.tol_hurwitz, args.tol_match, args.seed)


def _pattern(sys, graph_path) -> StructuredPattern:
    g = load_graph(graph_path)
    violations = validate_graph(g)
    if violations:
        raise StructureError("graph violates the graph assumptions", [v.to_json() for v in violations])
    S = adjacency(g)
    if sys.input_index.n_nodes != S.n_nodes:
        raise InputError(f"system has {sys.input_index.n_nodes} nodes, graph has {S.n_nodes}")
    return sys.pattern(S)


def _structured_realization(sys, P, tol):
    """Supplied realization if it verifies, else one built by the stable or chain method."""
    if sys.state_index is not None:
        rep = verify_structured_realization(sys, P, tol)
        if rep.structured:
            return rep.realization, "supplied"
    mr = minimal_realization(sys, tol)
    if not mr.n_states or mr.poles().real.max() < -tol.hurwitz_margin:
        return realize_stable(sys, P, tol), "stable"
    if P.sparsity.is_chain():
        return realize_chain(sys, P.row_index, P.col_index, tol), "chain"
    return None, None


def _emit(system, args, report):
    if getattr(args, "output", None):
        Path(args.output).write_text(dumps(system_to_json(system)) + "\n")
        report["output"] = str(args.output)
    else:
        report["system"] = system_to_json(system)


# ---- commands -----------------------------------------------------------------


def cmd_check_graph(args):
    g = load_graph(args.graph)
    violations = validate_graph(g)
    report = {"command": "check-graph", "valid": not violations, "violations": [v.to_json() for v in violations]}
    if not violations:
        report["mask"] = adjacency(g).mask.astype(int).tolist()
    return (EXIT_PASS if not violations else EXIT_FAIL), report


def cmd_check_structure(args):
    tol = _tol(args)
    sys = load_system(args.system)
    P = _pattern(sys, args.graph)
    ok, bad = is_structured_tf(sys, P, tol)
    report = {"command": "check-structure", "structured": ok, "violations": [list(b) for b in bad]}
    if sys.state_index is not None:
        rep = verify_structured_realization(sys, P, tol)
        report["realization"] = rep.to_json()
    return (EXIT_PASS if ok else EXIT_FAIL), report


def cmd_realize(args):
    tol = _tol(args)
    sys = load_system(args.system)
    P = _pattern(sys, args.graph)
    report = {"command": "realize", "method": args.method}
    try:
        if args.method == "stable":
            R = realize_stable(sys, P, tol)
        else:
            if not P.sparsity.is_chain():
                raise PreconditionError("the chain method needs a full lower-triangular pattern")
            R = realize_chain(sys, P.row_index, P.col_index, tol)
    except (PreconditionError, StructureError) as exc:
        report.update(ok=False, error=str(exc))
        return EXIT_FAIL, report
    report.update(ok=True, n=list(R.state_index.dims), transfer_equal=systems_equal(R.sys, sys, tol))
    _emit(R.sys, args, report)
    return EXIT_PASS, report


def cmd_minreal(args):
    tol = _tol(args)
    sys = load_system(args.system)
    mr = minimal_realization(sys, tol)
    report = {"command": "minreal", "order_in": sys.n_states, "order_out": mr.n_states}
    _emit(mr, args, report)
    return EXIT_PASS, report


def cmd_stabilizability(args):
    tol = _tol(args)
    sys = load_system(args.system)
    P = _pattern(sys, args.graph)
    diag = diagonal_test(sys, P, tol, randomize_gains=args.randomize_gains, seed=args.seed)
    report = {"command": "stabilizability", "diagonal_test": diag.to_json()}
    R, source = _structured_realization(sys, P, tol)
    verdicts = [diag.stabilizable]
    if R is not None:
        blk = structured_stabilizability_test(R, tol)
        report["block_test"] = {**blk.to_json(), "realization": source, "n": list(R.state_index.dims)}
        verdicts.append(blk.stabilizable)
    else:
        report["block_test"] = None
    if diag.stabilizable is None:
        report["verdict"] = "indeterminate"
        return EXIT_INDETERMINATE, report
    if len(set(verdicts)) > 1:
        report["verdict"] = "inconsistent"
        return EXIT_INCONSISTENT, report
    report["verdict"] = "S-stabilizable" if diag.stabilizable else "not S-stabilizable"
    return (EXIT_PASS if diag.stabilizable else EXIT_FAIL), report


def cmd_synth(args):
    tol = _tol(args)
    sys = load_system(args.system)
    P = _pattern(sys, args.graph)
    report = {"command": "synth"}
    R, source = _structured_realization(sys, P, tol)
    if R is None:
        report.update(ok=False, error="no structured realization supplied or constructible")
        return EXIT_FAIL, report
    report["realization"] = source
    try:
        gains, K, loop = synthesize_k0(R, tol)
        if args.q:
            Q = load_system(args.q)
            K = close_lft(build_youla_generator(R, gains, tol), Q, tol)
            loop = internal_stability_ss(R.sys, K.sys, tol)
    except SynthesisError as exc:
        rep = exc.report
        report.update(ok=False, error=str(exc), report=rep.to_json() if hasattr(rep, "to_json") else None)
        return EXIT_FAIL, report
    except (PreconditionError, WellPosednessError) as exc:
        report.update(ok=False, error=str(exc))
        return EXIT_FAIL, report
    report.update(ok=True, controller="youla" if args.q else "observer_based", n=list(K.state_index.dims),
                  closed_loop=loop.to_json())
    _emit(K.sys, args, report)
    return EXIT_PASS, report


def cmd_verify_loop(args):
    tol = _tol(args)
    G = load_system(args.plant)
    K = load_system(args.controller)
    ss = internal_stability_ss(G, K, tol)
    report = {"command": "verify-loop", "state_space": ss.to_json()}
    if ss.indeterminate:
        return EXIT_INDETERMINATE, report
    tf = internal_stability_tf(G, K, tol)
    report["input_output"] = tf
    if ss.stabilizes is not None and ss.stabilizes != tf:
        report["error"] = "state-space and input-output criteria disagree"
        return EXIT_INCONSISTENT, report
    return (EXIT_PASS if tf else EXIT_FAIL), report


# ---- entry point --------------------------------------------------------------


def _text(report, indent=0):
    pad = "  " * indent
    lines = []
    for key, val in report.items():
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_text(val, indent + 1))
        elif key == "system":
            lines.append(f"{pad}{key}: <{len(val['A'])}-state realization>")
        else:
            lines.append(f"{pad}{key}: {val}")
    return lines


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="structreal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--tol-rank", type=float, default=1e-8)
    p.add_argument("--tol-hurwitz", type=float, default=1e-8)
    p.add_argument("--tol-match", type=float, default=1e-7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check-graph", help="validate graph assumptions")
    c.add_argument("graph")
    c.set_defaults(func=cmd_check_graph)

    c = sub.add_parser("check-structure", help="check a system against a graph's pattern")
    c.add_argument("system")
    c.add_argument("graph")
    c.set_defaults(func=cmd_check_structure)

    c = sub.add_parser("realize", help="build a structured realization")
    c.add_argument("system")
    c.add_argument("graph")
    c.add_argument("--method", choices=("stable", "chain"), default="stable")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_realize)

    c = sub.add_parser("minreal", help="minimal realization")
    c.add_argument("system")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_minreal)

    c = sub.add_parser("stabilizability", help="decide structured stabilizability")
    c.add_argument("system")
    c.add_argument("graph")
    c.add_argument("--randomize-gains", action="store_true")
    c.set_defaults(func=cmd_stabilizability)

    c = sub.add_parser("synth", help="synthesize a structured stabilizing controller")
    c.add_argument("system")
    c.add_argument("graph")
    c.add_argument("--q", help="Youla parameter (System JSON); omitted means Q = 0")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_synth)

    c = sub.add_parser("verify-loop", help="internal stability of a plant/controller loop")
    c.add_argument("plant")
    c.add_argument("controller")
    c.set_defaults(func=cmd_verify_loop)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        code, report = args.func(args)
    except IndeterminateError as exc:
        code, report = EXIT_INDETERMINATE, {"command": args.command, "error": str(exc)}
    except (InputError, StructureError) as exc:
        details = getattr(exc, "details", None)
        code, report = EXIT_INPUT, {"command": args.command, "error": str(exc), "details": details or []}
    except StructrealError as exc:
        code, report = EXIT_FAIL, {"command": args.command, "error": str(exc)}
    report["exit_code"] = code
    if args.format == "json":
        print(dumps(report))
    else:
        print("\n".join(_text(report)))
    return code


if __name__ == "__main__":
    sys.exit(main())
