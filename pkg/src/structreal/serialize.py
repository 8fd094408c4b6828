"""JSON formats for graphs, systems and reports.

Graph:  ``{"nodes": N, "edges": [[i, j], ...]}`` with 1-based labels;
        self-loops may be omitted and are added on load.
System: ``{"kind": "ss", "A": .., "B": .., "C": .., "D": .., "k": [..], "m": [..], "n": [..]}``
        (``n`` optional) or
        ``{"kind": "tf", "entries": [{"row": r, "col": c, "num": [..], "den": [..]}], "k": [..], "m": [..]}``
        where ``row``/``col`` are 1-based scalar channel indices and
        polynomial coefficients are highest degree first.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError
from .graph import Graph
from .system import IndexSet, StateSpaceSystem, TransferEntry, TransferSpec, tf_to_ss

__all__ = [
    "graph_from_json",
    "system_from_json",
    "system_to_json",
    "load_json",
    "load_graph",
    "load_system",
    "dumps",
    "jsonable",
]


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def graph_from_json(obj) -> Graph:
    try:
        n = obj["nodes"]
        edges = [tuple(e) for e in obj.get("edges", [])]
    except (KeyError, TypeError) as exc:
        raise InputError(f"graph JSON needs 'nodes' and 'edges': {exc}") from exc
    if any(len(e) != 2 for e in edges):
        raise InputError("every edge must be a pair [i, j]")
    if not isinstance(n, int) or n < 1:
        raise InputError(f"'nodes' must be a positive integer, got {n!r}")
    return Graph.from_edges(n, edges, add_self_loops=True)


def _matrix(obj, shape, name):
    M = np.asarray(obj if obj is not None else [], dtype=float)
    if M.size == 0:
        return np.zeros(shape)
    if M.ndim != 2:
        raise InputError(f"'{name}' must be a 2-D array")
    return M


def system_from_json(obj) -> StateSpaceSystem:
    kind = obj.get("kind", "ss") if isinstance(obj, dict) else None
    if kind not in ("ss", "tf"):
        raise InputError(f"system 'kind' must be 'ss' or 'tf', got {kind!r}")
    try:
        k = IndexSet(tuple(obj["k"]))
        m = IndexSet(tuple(obj["m"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"system JSON needs index sets 'k' and 'm': {exc}") from exc
    if kind == "tf":
        entries = []
        for e in obj.get("entries", []):
            try:
                entries.append(TransferEntry(int(e["row"]) - 1, int(e["col"]) - 1, tuple(e["num"]), tuple(e["den"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"bad transfer entry {e!r}: {exc}") from exc
        return tf_to_ss(TransferSpec(tuple(entries), k, m))
    n = IndexSet(tuple(obj["n"])) if obj.get("n") is not None else None
    A = np.asarray(obj.get("A", []), dtype=float)
    ns = n.total if n is not None else (A.shape[0] if A.size else 0)
    A = _matrix(obj.get("A"), (ns, ns), "A")
    B = _matrix(obj.get("B"), (ns, m.total), "B")
    C = _matrix(obj.get("C"), (k.total, ns), "C")
    D = _matrix(obj.get("D"), (k.total, m.total), "D")
    return StateSpaceSystem(A, B, C, D, n, m, k)


def system_to_json(sys: StateSpaceSystem) -> dict:
    out = {
        "kind": "ss",
        "A": sys.A.tolist(),
        "B": sys.B.tolist(),
        "C": sys.C.tolist(),
        "D": sys.D.tolist(),
        "k": list(sys.output_index.dims),
        "m": list(sys.input_index.dims),
    }
    if sys.state_index is not None:
        out["n"] = list(sys.state_index.dims)
    return out


def load_graph(path) -> Graph:
    return graph_from_json(load_json(path))


def load_system(path) -> StateSpaceSystem:
    return system_from_json(load_json(path))


def jsonable(obj):
    """Recursively convert numpy/complex/non-finite values to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed indentation, no NaN/inf."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def write_json(obj, path):
    Path(path).write_text(dumps(obj) + "\n")
