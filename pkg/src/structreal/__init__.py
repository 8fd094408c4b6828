"""Structured realizability and stabilizability of LTI systems over directed graphs."""

from .errors import (
    EvaluationError,
    IndeterminateError,
    InputError,
    PreconditionError,
    SolverError,
    StructrealError,
    StructureError,
    SynthesisError,
    WellPosednessError,
)
from .graph import (
    Graph,
    NodeOrdering,
    SparsityPattern,
    adjacency,
    chain_graph,
    condense,
    relabel,
    topological_order,
    transitive_closure,
    validate_graph,
)
from .numerics import (
    DEFAULT_TOL,
    Tolerances,
    controllability_staircase,
    eigenvalues,
    numerical_rank,
    observability_staircase,
    observer_gain,
    solve_lyapunov,
    stabilizing_gain,
)
from .realize import (
    RealizationReport,
    StructuredRealization,
    column_realization,
    minimal_realization,
    realize_chain,
    realize_stable,
    verify_structured_realization,
)
from .stability import internal_stability_ss, internal_stability_tf, is_hurwitz, pbh
from .synthesis import (
    build_youla_generator,
    close_lft,
    diagonal_test,
    structured_stabilizability_test,
    synthesize_k0,
)
from .system import (
    IndexSet,
    StateSpaceSystem,
    StructuredPattern,
    TransferEntry,
    TransferSpec,
    evaluate,
    is_structured_matrix,
    is_structured_tf,
    parallel,
    series,
    systems_equal,
    tf_to_ss,
)

__version__ = "0.1.0"
