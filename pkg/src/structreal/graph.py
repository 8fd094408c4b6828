"""Directed information-flow graphs and their sparsity patterns.

Nodes are labelled ``1..N``. An edge ``(i, j)`` means node ``i`` can
influence node ``j``; in the adjacency mask this shows up as
``mask[j-1, i-1] = True`` (row = receiving node, column = sending node).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import networkx as nx
import numpy as np

from .errors import InputError, StructureError

__all__ = [
    "Graph",
    "Violation",
    "SparsityPattern",
    "NodeOrdering",
    "validate_graph",
    "topological_order",
    "adjacency",
    "relabel",
    "transitive_closure",
    "condense",
    "chain_graph",
]


class Violation(NamedTuple):
    """One violated graph assumption.

    ``kind`` is ``"self_loop"`` (witness: the node), ``"transitivity"``
    (witness: ``(i, j, k)`` with ``i->j``, ``j->k`` present but ``i->k``
    missing) or ``"cycle"`` (witness: the node list of a directed cycle).
    """

    kind: str
    witness: tuple

    def to_json(self):
        return {"kind": self.kind, "witness": list(self.witness)}


@dataclass(frozen=True)
class Graph:
    """Directed graph on nodes ``1..n_nodes`` with an immutable edge set."""

    n_nodes: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise InputError(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in sorted(edges):
            if not (1 <= i <= self.n_nodes and 1 <= j <= self.n_nodes):
                raise InputError(f"edge ({i}, {j}) has an endpoint outside 1..{self.n_nodes}")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable, add_self_loops: bool = True) -> "Graph":
        edges = set(map(tuple, edges))
        if add_self_loops:
            edges |= {(i, i) for i in range(1, n_nodes + 1)}
        return cls(n_nodes, frozenset(edges))

    @classmethod
    def from_mask(cls, mask) -> "Graph":
        mask = np.asarray(mask, dtype=bool)
        n = mask.shape[0]
        return cls(n, frozenset((j + 1, i + 1) for i, j in zip(*np.nonzero(mask))))

    @property
    def nodes(self):
        return range(1, self.n_nodes + 1)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(self.edges)
        return g

    def to_json(self):
        return {"nodes": self.n_nodes, "edges": [list(e) for e in sorted(self.edges)]}


def validate_graph(g: Graph) -> list[Violation]:
    """Return every violated assumption (self-loops, transitivity, acyclicity).

    An empty list means the graph is valid.
    """
    out = []
    for i in g.nodes:
        if not g.has_edge(i, i):
            out.append(Violation("self_loop", (i,)))
    for i, j, k in itertools.product(g.nodes, repeat=3):
        if len({i, j, k}) == 3 and g.has_edge(i, j) and g.has_edge(j, k) and not g.has_edge(i, k):
            out.append(Violation("transitivity", (i, j, k)))
    nxg = g.to_networkx()
    nxg.remove_edges_from(nx.selfloop_edges(nxg))
    for comp in sorted(nx.strongly_connected_components(nxg), key=min):
        if len(comp) < 2:
            continue
        sub = nxg.subgraph(comp)
        cycle = [u for u, _ in nx.find_cycle(sub, source=min(comp))]
        start = cycle.index(min(cycle))
        out.append(Violation("cycle", tuple(cycle[start:] + cycle[:start])))
    return out


def _require_valid(g: Graph):
    violations = validate_graph(g)
    if violations:
        raise StructureError(f"graph violates {len(violations)} assumption(s)", violations)


@dataclass(frozen=True)
class NodeOrdering:
    """A relabelling of nodes.

    ``order[p]`` is the original label placed at new position ``p + 1``;
    ``inverse[label - 1]`` is the new label of an original node.
    """

    order: tuple

    @property
    def inverse(self) -> tuple:
        inv = [0] * len(self.order)
        for pos, label in enumerate(self.order, start=1):
            inv[label - 1] = pos
        return tuple(inv)

    @property
    def is_identity(self) -> bool:
        return self.order == tuple(range(1, len(self.order) + 1))


def topological_order(g: Graph) -> NodeOrdering:
    """Lexicographically smallest ordering that makes the mask lower triangular."""
    _require_valid(g)
    nxg = g.to_networkx()
    nxg.remove_edges_from(nx.selfloop_edges(nxg))
    return NodeOrdering(tuple(nx.lexicographical_topological_sort(nxg)))


def relabel(g: Graph, ordering: NodeOrdering) -> Graph:
    inv = ordering.inverse
    return Graph(g.n_nodes, frozenset((inv[i - 1], inv[j - 1]) for i, j in g.edges))


def transitive_closure(g: Graph) -> Graph:
    nxg = nx.transitive_closure(g.to_networkx(), reflexive=True)
    return Graph(g.n_nodes, frozenset(nxg.edges))


def condense(g: Graph) -> tuple[Graph, dict]:
    """Merge every strongly connected component into a single node.

    Returns the condensed graph (with self-loops) and a map from original
    label to condensed label. Condensed labels follow the smallest original
    label in each component.
    """
    nxg = g.to_networkx()
    comps = sorted(nx.strongly_connected_components(nxg), key=min)
    mapping = {}
    for new, comp in enumerate(comps, start=1):
        for v in comp:
            mapping[v] = new
    edges = {(mapping[i], mapping[j]) for i, j in g.edges}
    edges |= {(c, c) for c in range(1, len(comps) + 1)}
    return Graph(len(comps), frozenset(edges)), mapping


def chain_graph(n_nodes: int) -> Graph:
    """The total order 1 -> 2 -> ... -> N (full lower-triangular mask)."""
    return Graph(n_nodes, frozenset((i, j) for i in range(1, n_nodes + 1) for j in range(i, n_nodes + 1)))


@dataclass(frozen=True, eq=False)
class SparsityPattern:
    """Boolean ``N x N`` mask; ``mask[i, j]`` is True iff node ``j+1 -> i+1``."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1] or mask.shape[0] < 1:
            raise InputError(f"mask must be a non-empty square matrix, got shape {mask.shape}")
        _require_valid(Graph.from_mask(mask))
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def n_nodes(self) -> int:
        return self.mask.shape[0]

    def allowed(self, i: int, j: int) -> bool:
        """Whether block ``(i, j)`` (0-based) may be nonzero."""
        return bool(self.mask[i, j])

    def is_lower_triangular(self) -> bool:
        return not np.triu(self.mask, 1).any()

    def is_chain(self) -> bool:
        return bool(np.array_equal(self.mask, np.tril(np.ones_like(self.mask))))

    def permuted(self, ordering: NodeOrdering) -> "SparsityPattern":
        idx = [label - 1 for label in ordering.order]
        return SparsityPattern(self.mask[np.ix_(idx, idx)])

    def __eq__(self, other):
        return isinstance(other, SparsityPattern) and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash(self.mask.tobytes())

    def __repr__(self):
        return f"SparsityPattern({self.mask.astype(int).tolist()})"

    @classmethod
    def full_lower(cls, n_nodes: int) -> "SparsityPattern":
        return cls(np.tril(np.ones((n_nodes, n_nodes), dtype=bool)))

    @classmethod
    def diagonal(cls, n_nodes: int) -> "SparsityPattern":
        return cls(np.eye(n_nodes, dtype=bool))


def adjacency(g: Graph) -> SparsityPattern:
    """Adjacency mask of a valid graph (``mask[i, j]`` iff ``j -> i``)."""
    _require_valid(g)
    mask = np.zeros((g.n_nodes, g.n_nodes), dtype=bool)
    for i, j in g.edges:
        mask[j - 1, i - 1] = True
    return SparsityPattern(mask)
