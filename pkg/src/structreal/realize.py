"""Realization algorithms and structured-realization verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionError, StructureError
from .graph import SparsityPattern
from .numerics import (
    DEFAULT_TOL,
    Tolerances,
    controllability_staircase,
    observability_staircase,
)
from .stability import PbhCertificate, pbh
from .system import (
    IndexSet,
    StateSpaceSystem,
    StructuredPattern,
    is_structured_matrix,
    is_structured_tf,
)

__all__ = [
    "StructuredRealization",
    "RealizationReport",
    "minimal_realization",
    "column_realization",
    "verify_structured_realization",
    "realize_stable",
    "realize_chain",
]


@dataclass(frozen=True)
class StructuredRealization:
    """A realization whose four matrices carry the pattern, with PBH certificates."""

    sys: StateSpaceSystem
    pattern: StructuredPattern
    stabilizability: PbhCertificate
    detectability: PbhCertificate

    @property
    def state_index(self) -> IndexSet:
        return self.sys.state_index

    @property
    def sparsity(self) -> SparsityPattern:
        return self.pattern.sparsity


@dataclass
class RealizationReport:
    """Result of :func:`verify_structured_realization`.

    ``block_pbh`` is informational: diagonal-block PBH failures do not make a
    realization unstructured, but they decide structured stabilizability.
    """

    structured: bool
    n: tuple
    violations: list = field(default_factory=list)
    pbh: list = field(default_factory=list)
    block_pbh: list = field(default_factory=list)
    realization: Optional[StructuredRealization] = None

    def __bool__(self):
        return self.structured

    def to_json(self):
        return {
            "structured": self.structured,
            "violations": list(self.violations),
            "pbh": self.pbh + self.block_pbh,
            "n": list(self.n),
        }


def minimal_realization(sys: StateSpaceSystem, tol: Tolerances = DEFAULT_TOL) -> StateSpaceSystem:
    """Controllable and observable part, via two orthogonal staircase reductions."""
    if sys.n_states == 0:
        return sys.unstructured()
    st = controllability_staircase(sys.A, sys.B, tol)
    u = sys.n_states - st.dim
    A, B, C = st.A[u:, u:], st.B[u:], (sys.C @ st.T)[:, u:]
    ob = observability_staircase(A, C, tol)
    r = ob.dim
    T = ob.T[:, :r]
    return StateSpaceSystem(ob.A[:r, :r], T.T @ B, ob.B[:, :r], sys.D, None, sys.input_index, sys.output_index)


def _pbh_json(cert: PbhCertificate, block=None, scope="global"):
    kind = "stabilizability" if cert.property == "stabilizable" else "detectability"
    return [
        {"eig": [float(lam.real), float(lam.imag)], "kind": kind, "block": block, "scope": scope, "deficiency": d}
        for lam, d in cert.witnesses
    ]


def verify_structured_realization(
    sys: StateSpaceSystem, P: StructuredPattern, tol: Tolerances = DEFAULT_TOL
) -> RealizationReport:
    """Check structure of ``A, B, C, D`` against ``P`` and global PBH conditions.

    ``P`` fixes the sparsity and the output/input index sets; the state index
    comes from ``sys.state_index``. Failure is reported, never raised.
    """
    if sys.state_index is None:
        raise PreconditionError("system has no state index to verify")
    n = sys.state_index
    S = P.sparsity
    k, m = P.row_index, P.col_index
    violations = []
    for name, M, pat in (
        ("A", sys.A, StructuredPattern(S, n, n)),
        ("B", sys.B, StructuredPattern(S, n, m)),
        ("C", sys.C, StructuredPattern(S, k, n)),
        ("D", sys.D, StructuredPattern(S, k, m)),
    ):
        ok, bad = is_structured_matrix(M, pat, tol)
        violations += [{"matrix": name, "block": list(b)} for b in bad]
    stab = pbh(sys.A, sys.B, "stabilizable", tol)
    det = pbh(sys.A, sys.C, "detectable", tol)
    pbh_list = _pbh_json(stab) + _pbh_json(det)
    block_list = []
    for i in n.omega:
        si, ki, mi = n.slice(i), k.slice(i), m.slice(i)
        Aii = sys.A[si, si]
        block_list += _pbh_json(pbh(Aii, sys.B[si, mi], "stabilizable", tol), i + 1, "diagonal")
        block_list += _pbh_json(pbh(Aii, sys.C[ki, si], "detectable", tol), i + 1, "diagonal")
    structured = not violations and stab.verdict and det.verdict
    rep = RealizationReport(structured, n.dims, violations, pbh_list, block_list)
    if structured:
        rep.realization = StructuredRealization(sys.with_index(n, m, k), P, stab, det)
    return rep


def _zero_forbidden(M, pat: StructuredPattern, what: str, thresh: float):
    M = np.array(M, dtype=float)
    Z = pat.zero_mask()
    if Z.any():
        big = np.abs(M[Z]).max()
        if big > thresh:
            raise StructureError(f"{what} has a forbidden entry of size {big:.3g}")
        M[Z] = 0.0
    return M


def column_realization(sys: StateSpaceSystem, P: StructuredPattern, tol: Tolerances = DEFAULT_TOL) -> StateSpaceSystem:
    """Realize each block column minimally and stack them side by side.

    ``A`` and ``B`` come out block diagonal with node ``j`` owning the states
    of block column ``j``. No stability is assumed, so unstable poles shared
    between columns get duplicated and the result may fail PBH.
    """
    ok, bad = is_structured_tf(sys, P, tol)
    if not ok:
        raise StructureError(f"transfer matrix violates the pattern at blocks {bad}", bad)
    k, m = P.row_index, P.col_index
    N = P.sparsity.n_nodes
    cols = []
    for j in range(N):
        cj = minimal_realization(sys.subsystem(np.arange(k.total), m.indices([j])), tol)
        cols.append(cj)
    n = IndexSet(tuple(c.n_states for c in cols))
    A = np.zeros((n.total, n.total))
    B = np.zeros((n.total, m.total))
    C = np.zeros((k.total, n.total))
    for j, cj in enumerate(cols):
        A[n.slice(j), n.slice(j)] = cj.A
        B[n.slice(j), m.slice(j)] = cj.B
        C[:, n.slice(j)] = cj.C
    thresh = tol.match_tol * max(1.0, np.abs(C).max() if C.size else 0.0)
    C = _zero_forbidden(C, StructuredPattern(P.sparsity, k, n), "C", thresh)
    D = _zero_forbidden(sys.D, P, "D", tol.match_tol * max(1.0, np.abs(sys.D).max() if sys.D.size else 0.0))
    return StateSpaceSystem(A, B, C, D, n, m, k)


def realize_stable(sys: StateSpaceSystem, P: StructuredPattern, tol: Tolerances = DEFAULT_TOL) -> StructuredRealization:
    """Structured realization of a stable structured transfer matrix."""
    ok, bad = is_structured_tf(sys, P, tol)
    if not ok:
        raise StructureError(f"transfer matrix violates the pattern at blocks {bad}", bad)
    mr = minimal_realization(sys, tol)
    if mr.n_states:
        ev = mr.poles()
        worst = ev[np.argmax(ev.real)]
        if worst.real >= -tol.hurwitz_margin:
            raise PreconditionError(f"system is not stable: pole {complex(worst):.6g}")
    out = column_realization(sys, P, tol)
    rep = verify_structured_realization(out, P, tol)
    if not rep.structured:
        raise StructureError("column construction failed verification", rep.violations + rep.pbh)
    return rep.realization


def realize_chain(sys: StateSpaceSystem, k=None, m=None, tol: Tolerances = DEFAULT_TOL) -> StructuredRealization:
    """Structured realization for the full lower-triangular (chain) pattern.

    Starts from a minimal realization and peels off one node at a time: the
    states that later nodes' inputs cannot reach (controllable-unobservable
    and uncontrollable-unobservable alike) are assigned to the current node,
    and the procedure recurses on the controllable remainder.
    """
    k = IndexSet(tuple(k)) if k is not None and not isinstance(k, IndexSet) else (k or sys.output_index)
    m = IndexSet(tuple(m)) if m is not None and not isinstance(m, IndexSet) else (m or sys.input_index)
    N = k.n_nodes
    P = StructuredPattern(SparsityPattern.full_lower(N), k, m)
    sys = sys.with_index(None, m, k)
    ok, bad = is_structured_tf(sys, P, tol)
    if not ok:
        raise StructureError(f"system is not block lower triangular: blocks {bad}", bad)
    mr = minimal_realization(sys, tol)
    A, B, C = np.array(mr.A), np.array(mr.B), np.array(mr.C)
    n = A.shape[0]
    c_scale = max(1.0, np.linalg.norm(C, 2) if C.size else 0.0)
    dims = []
    start = 0
    for i in range(N - 1):
        later_inputs = m.indices(range(i + 1, N))
        rows_i = k.indices([i])
        Ar = A[start:, start:]
        st = controllability_staircase(Ar, B[start:, later_inputs], tol)
        u = Ar.shape[0] - st.dim
        C1 = C[rows_i, start:] @ st.T
        # the zero block has no controllable-observable part
        leak = np.abs(C1[:, u:]).max() if C1[:, u:].size else 0.0
        if leak > tol.match_tol * c_scale:
            raise StructureError(f"node {i + 1}: zero block has a controllable and observable mode (leak {leak:.3g})")
        ob = observability_staircase(st.A[:u, :u], C1[:, :u], tol)
        Ti = st.T.copy()
        Ti[:, :u] = st.T[:, :u] @ ob.T
        T = np.eye(n)
        T[start:, start:] = Ti
        A, B, C = T.T @ A @ T, T.T @ B, C @ T
        dims.append(u)
        start += u
    dims.append(n - start)
    nidx = IndexSet(tuple(dims))
    S = P.sparsity
    a_thr = tol.match_tol * max(1.0, np.abs(A).max() if A.size else 0.0)
    b_thr = tol.match_tol * max(1.0, np.abs(B).max() if B.size else 0.0)
    A = _zero_forbidden(A, StructuredPattern(S, nidx, nidx), "A", a_thr)
    B = _zero_forbidden(B, StructuredPattern(S, nidx, m), "B", b_thr)
    C = _zero_forbidden(C, StructuredPattern(S, k, nidx), "C", tol.match_tol * c_scale)
    D = _zero_forbidden(mr.D, P, "D", tol.match_tol * max(1.0, np.abs(mr.D).max() if mr.D.size else 0.0))
    out = StateSpaceSystem(A, B, C, D, nidx, m, k)
    rep = verify_structured_realization(out, P, tol)
    if not rep.structured:
        raise StructureError("chain construction failed verification", rep.violations + rep.pbh)
    return rep.realization
