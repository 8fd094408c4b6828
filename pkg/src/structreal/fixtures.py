"""Worked examples shipped with the package, plus seeded random generators.

The JSON files under ``structreal/fixtures/`` are produced by
:func:`write_fixture_files` from the constructors below.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .graph import Graph, SparsityPattern, adjacency, transitive_closure
from .system import IndexSet, StateSpaceSystem, StructuredPattern, TransferEntry, TransferSpec

__all__ = [
    "fixture_path",
    "two_node_graph",
    "four_node_graph",
    "stable_two_node_spec",
    "stable_two_node_realization",
    "unrealizable_four_node_spec",
    "unrealizable_four_node_minimal",
    "coupled_unstable_realization",
    "random_pattern",
    "random_structured_realization",
    "random_stable_structured",
    "random_orthogonal",
    "scramble",
    "write_fixture_files",
]


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("structreal") / "fixtures" / name))


def two_node_graph() -> Graph:
    """1 -> 2; mask [[1, 0], [1, 1]]."""
    return Graph.from_edges(2, [(1, 2)])


def four_node_graph() -> Graph:
    """Nodes 1, 2 both feed nodes 3 and 4."""
    return Graph.from_edges(4, [(1, 3), (1, 4), (2, 3), (2, 4)])


def stable_two_node_spec() -> TransferSpec:
    """[[1/(s+1), 0], [1/(s+1), 1/(s+2)]]."""
    return TransferSpec(
        (
            TransferEntry(0, 0, (1,), (1, 1)),
            TransferEntry(1, 0, (1,), (1, 1)),
            TransferEntry(1, 1, (1,), (1, 2)),
        ),
        (1, 1),
        (1, 1),
    )


def stable_two_node_realization() -> StateSpaceSystem:
    return StateSpaceSystem(
        np.diag([-1.0, -2.0]), np.eye(2), np.array([[1.0, 0.0], [1.0, 1.0]]), np.zeros((2, 2)),
        (1, 1), (1, 1), (1, 1),
    )


def unrealizable_four_node_spec() -> TransferSpec:
    """1/(s-1) from inputs 1, 2 to outputs 3, 4; zero elsewhere."""
    entries = tuple(TransferEntry(r, c, (1,), (1, -1)) for r in (2, 3) for c in (0, 1))
    return TransferSpec(entries, (1, 1, 1, 1), (1, 1, 1, 1))


def unrealizable_four_node_minimal() -> StateSpaceSystem:
    """Order-1 minimal realization (not structured for any state assignment)."""
    return StateSpaceSystem(
        [[1.0]], [[1.0, 1.0, 0.0, 0.0]], [[0.0], [0.0], [1.0], [1.0]], np.zeros((4, 4)),
        None, (1, 1, 1, 1), (1, 1, 1, 1),
    )


def coupled_unstable_realization(n=(2, 1)) -> StateSpaceSystem:
    """[[1/(s+1), 0], [1/(s-1), 1/(s+1)]], minimal, with the unstable mode second.

    ``n=(2, 1)`` puts the unstable mode with node 1; ``n=(1, 2)`` with node 2.
    """
    A = np.diag([-1.0, 1.0, -1.0])
    B = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    C = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
    return StateSpaceSystem(A, B, C, np.zeros((2, 2)), tuple(n), (1, 1), (1, 1))


# ---- random generators -------------------------------------------------------


def random_pattern(rng, n_nodes: int, density: float = 0.5) -> SparsityPattern:
    """Random lower-triangular, transitively closed pattern."""
    edges = [(j, i) for i in range(1, n_nodes + 1) for j in range(1, i) if rng.random() < density]
    return adjacency(transitive_closure(Graph.from_edges(n_nodes, edges)))


def _structured_random(rng, S: SparsityPattern, rows: IndexSet, cols: IndexSet, scale=1.0):
    M = scale * rng.standard_normal((rows.total, cols.total))
    M[StructuredPattern(S, rows, cols).zero_mask()] = 0.0
    return M


def random_structured_realization(rng, S: SparsityPattern, k, m, n, shift=(-1.5, 0.5), d_scale=0.5):
    """Random structured realization with every matrix in the pattern.

    ``shift`` bounds a uniform diagonal shift of each ``A_ii``; the default
    gives a mix of stable and unstable blocks.
    """
    k, m, n = IndexSet(tuple(k)), IndexSet(tuple(m)), IndexSet(tuple(n))
    A = _structured_random(rng, S, n, n, 0.7)
    for i in n.omega:
        si = n.slice(i)
        A[si, si] += rng.uniform(*shift) * np.eye(n.dims[i])
    B = _structured_random(rng, S, n, m)
    C = _structured_random(rng, S, k, n)
    D = _structured_random(rng, S, k, m, d_scale)
    return StateSpaceSystem(A, B, C, D, n, m, k)


def random_stable_structured(rng, S: SparsityPattern, k, m, n, margin=0.5, d_scale=0.3):
    """Random structured realization whose diagonal blocks (hence A) are Hurwitz."""
    sys = random_structured_realization(rng, S, k, m, n, shift=(0.0, 0.0), d_scale=d_scale)
    A = np.array(sys.A)
    for i in sys.state_index.omega:
        si = sys.state_index.slice(i)
        a = np.linalg.eigvals(A[si, si]).real.max()
        A[si, si] -= (a + margin + rng.uniform(0, 1)) * np.eye(sys.state_index.dims[i])
    return StateSpaceSystem(A, sys.B, sys.C, sys.D, sys.state_index, sys.input_index, sys.output_index)


def random_orthogonal(rng, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0))
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def scramble(rng, sys: StateSpaceSystem) -> StateSpaceSystem:
    """Random well-conditioned similarity; drops the state index."""
    n = sys.n_states
    T = random_orthogonal(rng, n) @ np.diag(rng.uniform(0.5, 2.0, n)) @ random_orthogonal(rng, n)
    return sys.similarity(T)


def write_fixture_files(directory=None):
    """Regenerate the shipped JSON fixtures."""
    from .realize import minimal_realization
    from .serialize import system_to_json, write_json

    d = Path(directory) if directory is not None else fixture_path("")
    d.mkdir(parents=True, exist_ok=True)
    write_json(two_node_graph().to_json(), d / "two_node_graph.json")
    write_json(four_node_graph().to_json(), d / "four_node_graph.json")
    write_json({"nodes": 3, "edges": [[1, 2], [1, 3], [2, 3]]}, d / "chain3_graph.json")
    write_json(system_to_json(stable_two_node_realization()), d / "stable_two_node_ss.json")
    write_json(_spec_json(stable_two_node_spec()), d / "stable_two_node_tf.json")
    write_json(_spec_json(unrealizable_four_node_spec()), d / "unrealizable_four_node_tf.json")
    write_json(system_to_json(unrealizable_four_node_minimal()), d / "unrealizable_four_node_min_ss.json")
    write_json(system_to_json(coupled_unstable_realization((2, 1))), d / "coupled_unstable_n21_ss.json")
    write_json(system_to_json(coupled_unstable_realization((1, 2))), d / "coupled_unstable_n12_ss.json")
    plant = coupled_unstable_realization().unstructured()
    write_json(system_to_json(plant), d / "coupled_unstable_ss.json")
    rng = np.random.default_rng(2024)
    S = SparsityPattern.full_lower(3)
    chain = random_structured_realization(rng, S, (1, 1, 1), (1, 1, 1), (2, 1, 2))
    chain = minimal_realization(scramble(rng, chain))
    write_json(system_to_json(chain), d / "chain3_scrambled_ss.json")
    q = StateSpaceSystem([[-3.0]], [[1.0, 0.0]], [[0.0], [0.5]], [[0.1, 0.0], [0.2, -0.1]], None, (1, 1), (1, 1))
    write_json(system_to_json(q), d / "youla_param_q.json")


def _spec_json(spec: TransferSpec) -> dict:
    return {
        "kind": "tf",
        "entries": [
            {"row": e.row + 1, "col": e.col + 1, "num": list(e.num), "den": list(e.den)} for e in spec.entries
        ],
        "k": list(spec.output_index.dims),
        "m": list(spec.input_index.dims),
    }
