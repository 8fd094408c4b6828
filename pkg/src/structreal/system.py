"""Block-structured LTI systems and their transfer matrices.

Transfer matrices are always carried as state-space data. Rational
coefficients appear only in :class:`TransferSpec`, the ingestion format.
Block labels in reports are 1-based ``(row_node, col_node)`` pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.signal

from .errors import EvaluationError, InputError
from .graph import SparsityPattern
from .numerics import DEFAULT_TOL, Tolerances, eigenvalues

__all__ = [
    "IndexSet",
    "StructuredPattern",
    "StateSpaceSystem",
    "TransferEntry",
    "TransferSpec",
    "is_structured_matrix",
    "tf_to_ss",
    "evaluate",
    "probe_points",
    "systems_equal",
    "is_structured_tf",
    "series",
    "parallel",
    "scale",
    "static_gain",
    "block_diagonal",
    "interleave_states",
]

# fixed part of the probe set; imaginary offsets on the probe line
PROBE_OMEGAS = (0.0, 0.37, -0.37, 1.0, -1.0, 2.9, -2.9, 17.0, -17.0, 101.0, -101.0)
N_RANDOM_PROBES = 8


@dataclass(frozen=True)
class IndexSet:
    """Per-node block sizes, e.g. ``k = (k_1, ..., k_N)``."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 0 for d in dims):
            raise InputError(f"index set entries must be nonnegative, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_nodes(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return sum(self.dims)

    @property
    def offsets(self) -> tuple:
        return tuple(np.concatenate([[0], np.cumsum(self.dims)]).astype(int).tolist())

    @property
    def omega(self) -> tuple:
        """0-based indices of nonempty nodes."""
        return tuple(i for i, d in enumerate(self.dims) if d)

    def slice(self, i: int) -> slice:
        off = self.offsets
        return slice(off[i], off[i + 1])

    def indices(self, nodes) -> np.ndarray:
        return np.concatenate([np.arange(self.offsets[i], self.offsets[i + 1]) for i in nodes] + [[]]).astype(int)

    def __add__(self, other: "IndexSet") -> "IndexSet":
        if self.n_nodes != other.n_nodes:
            raise InputError("index sets have different node counts")
        return IndexSet(tuple(a + b for a, b in zip(self.dims, other.dims)))

    @classmethod
    def single(cls, total: int) -> "IndexSet":
        return cls((total,))

    @classmethod
    def zeros(cls, n_nodes: int) -> "IndexSet":
        return cls((0,) * n_nodes)


def _as_index(x, n_nodes=None) -> IndexSet:
    if isinstance(x, IndexSet):
        return x
    return IndexSet(tuple(x))


@dataclass(frozen=True)
class StructuredPattern:
    """Sparsity pattern plus row/column index sets, i.e. ``S(F, k, m)``."""

    sparsity: SparsityPattern
    row_index: IndexSet
    col_index: IndexSet

    def __post_init__(self):
        object.__setattr__(self, "row_index", _as_index(self.row_index))
        object.__setattr__(self, "col_index", _as_index(self.col_index))
        N = self.sparsity.n_nodes
        if self.row_index.n_nodes != N or self.col_index.n_nodes != N:
            raise InputError(
                f"index sets have {self.row_index.n_nodes}/{self.col_index.n_nodes} nodes, pattern has {N}"
            )

    @property
    def shape(self) -> tuple:
        return self.row_index.total, self.col_index.total

    def forbidden_blocks(self):
        """0-based ``(i, j)`` pairs of nonempty blocks that must vanish."""
        N = self.sparsity.n_nodes
        for i in range(N):
            for j in range(N):
                if not self.sparsity.mask[i, j] and self.row_index.dims[i] and self.col_index.dims[j]:
                    yield i, j

    def block(self, M, i, j):
        return M[self.row_index.slice(i), self.col_index.slice(j)]

    def zero_mask(self) -> np.ndarray:
        """Elementwise boolean mask of entries forced to zero."""
        Z = np.zeros(self.shape, dtype=bool)
        for i, j in self.forbidden_blocks():
            Z[self.row_index.slice(i), self.col_index.slice(j)] = True
        return Z

    def transposed_shape(self) -> "StructuredPattern":
        """Same sparsity with the index sets swapped (controller shape)."""
        return StructuredPattern(self.sparsity, self.col_index, self.row_index)


def _frozen(M, shape=None, name="matrix"):
    M = np.array(M, dtype=float)
    if shape is not None and M.size == 0:
        M = M.reshape(shape)
    if M.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name} has non-finite entries")
    M.setflags(write=False)
    return M


@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    """Continuous-time realization ``(A, B, C, D)`` with optional index sets.

    ``input_index`` and ``output_index`` default to a single block covering
    every channel. ``state_index`` is ``None`` for unstructured realizations.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_index: Optional[IndexSet] = None
    input_index: Optional[IndexSet] = None
    output_index: Optional[IndexSet] = None

    def __post_init__(self):
        D = _frozen(self.D, name="D")
        k, m = D.shape
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        n = B.shape[0] if B.ndim == 2 else (C.shape[1] if C.ndim == 2 else 0)
        A = _frozen(self.A, (n, n), "A")
        n = A.shape[0]
        B = _frozen(B, (n, m), "B")
        C = _frozen(C, (k, n), "C")
        if A.shape != (n, n) or B.shape != (n, m) or C.shape != (k, n):
            raise InputError(f"incompatible shapes A{A.shape} B{B.shape} C{C.shape} D{D.shape}")
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, M)
        ii = _as_index(self.input_index) if self.input_index is not None else IndexSet.single(m)
        oi = _as_index(self.output_index) if self.output_index is not None else IndexSet.single(k)
        si = _as_index(self.state_index) if self.state_index is not None else None
        if ii.total != m or oi.total != k or (si is not None and si.total != n):
            raise InputError("index set totals do not match matrix dimensions")
        if si is not None and si.n_nodes != ii.n_nodes:
            raise InputError("state and input index sets have different node counts")
        if ii.n_nodes != oi.n_nodes:
            raise InputError("input and output index sets have different node counts")
        object.__setattr__(self, "input_index", ii)
        object.__setattr__(self, "output_index", oi)
        object.__setattr__(self, "state_index", si)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.D.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.D.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.input_index.n_nodes

    def poles(self) -> np.ndarray:
        return eigenvalues(self.A)

    def with_index(self, state_index=None, input_index=None, output_index=None) -> "StateSpaceSystem":
        return StateSpaceSystem(
            self.A, self.B, self.C, self.D,
            state_index,
            input_index if input_index is not None else self.input_index,
            output_index if output_index is not None else self.output_index,
        )

    def unstructured(self) -> "StateSpaceSystem":
        return self.with_index(None)

    def similarity(self, T, state_index=None) -> "StateSpaceSystem":
        """Realization in coordinates ``x = T z``."""
        T = np.asarray(T, dtype=float)
        Ti = np.linalg.inv(T) if T.size else T
        return StateSpaceSystem(Ti @ self.A @ T, Ti @ self.B, self.C @ T, self.D,
                                state_index, self.input_index, self.output_index)

    def permute_states(self, perm, state_index=None) -> "StateSpaceSystem":
        perm = np.asarray(perm, dtype=int)
        return StateSpaceSystem(self.A[np.ix_(perm, perm)], self.B[perm], self.C[:, perm], self.D,
                                state_index, self.input_index, self.output_index)

    def subsystem(self, rows, cols) -> "StateSpaceSystem":
        """Channels ``rows`` x ``cols`` (flat indices), unstructured."""
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        return StateSpaceSystem(self.A, self.B[:, cols], self.C[rows], self.D[np.ix_(rows, cols)])

    def block(self, i: int, j: int) -> "StateSpaceSystem":
        """Transfer block from input node ``j`` to output node ``i`` (0-based)."""
        return self.subsystem(self.output_index.indices([i]), self.input_index.indices([j]))

    def pattern(self, sparsity: SparsityPattern) -> StructuredPattern:
        return StructuredPattern(sparsity, self.output_index, self.input_index)


@dataclass(frozen=True)
class TransferEntry:
    """One scalar rational entry; coefficients highest degree first, 0-based flat row/col."""

    row: int
    col: int
    num: tuple
    den: tuple


@dataclass(frozen=True)
class TransferSpec:
    """Rational transfer matrix given entrywise, with output/input index sets."""

    entries: tuple
    output_index: IndexSet
    input_index: IndexSet

    def __post_init__(self):
        object.__setattr__(self, "output_index", _as_index(self.output_index))
        object.__setattr__(self, "input_index", _as_index(self.input_index))
        k, m = self.output_index.total, self.input_index.total
        entries = []
        for e in self.entries:
            num = np.trim_zeros(np.asarray(e.num, dtype=float), "f")
            den = np.trim_zeros(np.asarray(e.den, dtype=float), "f")
            if not (0 <= e.row < k and 0 <= e.col < m):
                raise InputError(f"entry ({e.row}, {e.col}) outside a {k}x{m} transfer matrix")
            if den.size == 0:
                raise InputError(f"entry ({e.row}, {e.col}) has a zero denominator")
            if num.size > den.size:
                raise InputError(f"entry ({e.row}, {e.col}) is improper (deg num > deg den)")
            entries.append(TransferEntry(int(e.row), int(e.col), tuple(num), tuple(den)))
        object.__setattr__(self, "entries", tuple(entries))

    def evaluate(self, s: complex) -> np.ndarray:
        G = np.zeros((self.output_index.total, self.input_index.total), dtype=complex)
        for e in self.entries:
            G[e.row, e.col] += np.polyval(e.num, s) / np.polyval(e.den, s) if e.num else 0.0
        return G


def _zero_tol(M, tol: Tolerances) -> float:
    return tol.rank_tol * max(1.0, float(np.abs(M).max()) if M.size else 0.0)


def is_structured_matrix(M, P: StructuredPattern, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, list]:
    """Check a real matrix against ``S(R, k, m)``.

    Entries in forbidden blocks must not exceed ``rank_tol * max(1, max|M|)``.
    Returns ``(ok, violations)`` with 1-based block labels.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != P.shape:
        raise InputError(f"matrix shape {M.shape} does not match index sets {P.shape}")
    thresh = _zero_tol(M, tol)
    bad = [(i + 1, j + 1) for i, j in P.forbidden_blocks() if np.abs(P.block(M, i, j)).max() > thresh]
    return not bad, bad


def tf_to_ss(spec: TransferSpec) -> StateSpaceSystem:
    """Realize every nonzero entry in controller canonical form and stack them."""
    k, m = spec.output_index.total, spec.input_index.total
    As, Bs, Cs = [], [], []
    D = np.zeros((k, m))
    for e in spec.entries:
        if not e.num:
            continue
        a, b, c, d = scipy.signal.tf2ss(e.num, e.den)
        D[e.row, e.col] += d.item() if d.size else 0.0
        n = a.shape[0]
        if n == 0:
            continue
        Bi = np.zeros((n, m))
        Bi[:, e.col] = b[:, 0]
        Ci = np.zeros((k, n))
        Ci[e.row] = c[0]
        As.append(a)
        Bs.append(Bi)
        Cs.append(Ci)
    A = _blockdiag_exact(As)
    B = np.vstack(Bs) if Bs else np.zeros((0, m))
    C = np.hstack(Cs) if Cs else np.zeros((k, 0))
    return StateSpaceSystem(A, B, C, D, None, spec.input_index, spec.output_index)


def evaluate(sys: StateSpaceSystem, s) -> np.ndarray:
    """``D + C (sI - A)^{-1} B``; ``s = inf`` returns ``D``."""
    if s is None or (np.isscalar(s) and np.isinf(abs(s))):
        return sys.D.astype(complex)
    n = sys.n_states
    if n == 0:
        return sys.D.astype(complex)
    ev = sys.poles()
    near = ev[np.argmin(np.abs(ev - s))]
    if abs(near - s) <= 1e-10:
        raise EvaluationError(f"s = {s} is within 1e-10 of the pole {near}")
    X = np.linalg.solve(s * np.eye(n) - sys.A, sys.B.astype(complex))
    return sys.D + sys.C @ X


def probe_points(*systems: StateSpaceSystem, seed: int = 0) -> np.ndarray:
    """Deterministic probe set on the line ``Re s = 1 + max(0, abscissae)``."""
    sigma = 1.0 + max([0.0] + [float(s.poles().real.max()) for s in systems if s.n_states])
    rng = np.random.default_rng(seed)
    omegas = list(PROBE_OMEGAS) + list(rng.uniform(-50.0, 50.0, N_RANDOM_PROBES))
    need = 2 * sum(s.n_states for s in systems) + 1
    if len(omegas) < need:
        omegas += list(rng.uniform(-200.0, 200.0, need - len(omegas)))
    return sigma + 1j * np.asarray(omegas)


def _close(G1, G2, tol: Tolerances) -> bool:
    scale = max(1.0, np.abs(G1).max() if G1.size else 0.0, np.abs(G2).max() if G2.size else 0.0)
    return bool(np.abs(G1 - G2).max() <= tol.match_tol * scale) if G1.size else True


def systems_equal(sys1: StateSpaceSystem, sys2: StateSpaceSystem, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Transfer-matrix equality: feedthrough plus agreement at every probe point."""
    if sys1.D.shape != sys2.D.shape:
        raise InputError(f"dimension mismatch {sys1.D.shape} vs {sys2.D.shape}")
    if not _close(sys1.D, sys2.D, tol):
        return False
    return all(_close(evaluate(sys1, s), evaluate(sys2, s), tol) for s in probe_points(sys1, sys2, seed=tol.seed))


def is_structured_tf(sys: StateSpaceSystem, P: StructuredPattern, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, list]:
    """Check that every forbidden block of the transfer matrix is identically zero.

    Returns ``(ok, violations)`` with 1-based block labels.
    """
    if (sys.n_outputs, sys.n_inputs) != P.shape:
        raise InputError(f"system is {sys.n_outputs}x{sys.n_inputs}, pattern expects {P.shape}")
    blocks = list(P.forbidden_blocks())
    if not blocks:
        return True, []
    values = [sys.D] + [evaluate(sys, s) for s in probe_points(sys, seed=tol.seed)]
    bad = []
    for i, j in blocks:
        for G in values:
            scale = max(1.0, np.abs(G).max())
            if np.abs(P.block(G, i, j)).max() > tol.match_tol * scale:
                bad.append((i + 1, j + 1))
                break
    return not bad, bad


def interleave_states(idx1: IndexSet, idx2: IndexSet) -> tuple[np.ndarray, IndexSet]:
    """Permutation grouping ``[x1; x2]`` node by node, and the merged index set."""
    off2 = idx1.total
    perm = []
    for i in range(idx1.n_nodes):
        perm.extend(range(idx1.offsets[i], idx1.offsets[i + 1]))
        perm.extend(off2 + np.arange(idx2.offsets[i], idx2.offsets[i + 1]))
    return np.asarray(perm, dtype=int), idx1 + idx2


def _merge(A, B, C, D, s1, s2, input_index, output_index):
    sys = StateSpaceSystem(A, B, C, D, None, input_index, output_index)
    if s1.state_index is not None and s2.state_index is not None and s1.state_index.n_nodes == s2.state_index.n_nodes:
        perm, idx = interleave_states(s1.state_index, s2.state_index)
        return sys.permute_states(perm, idx)
    return sys


def series(sys1: StateSpaceSystem, sys2: StateSpaceSystem) -> StateSpaceSystem:
    """The product ``sys1 * sys2`` (``sys2`` acts first)."""
    if sys1.n_inputs != sys2.n_outputs:
        raise InputError(f"cannot compose: sys1 has {sys1.n_inputs} inputs, sys2 has {sys2.n_outputs} outputs")
    n1, n2 = sys1.n_states, sys2.n_states
    A = np.block([[sys1.A, sys1.B @ sys2.C], [np.zeros((n2, n1)), sys2.A]])
    B = np.vstack([sys1.B @ sys2.D, sys2.B])
    C = np.hstack([sys1.C, sys1.D @ sys2.C])
    D = sys1.D @ sys2.D
    ii = sys2.input_index
    oi = sys1.output_index
    if ii.n_nodes != oi.n_nodes:
        ii, oi = IndexSet.single(ii.total), IndexSet.single(oi.total)
    return _merge(A, B, C, D, sys1, sys2, ii, oi)


def parallel(sys1: StateSpaceSystem, sys2: StateSpaceSystem) -> StateSpaceSystem:
    """The sum ``sys1 + sys2``."""
    if sys1.D.shape != sys2.D.shape:
        raise InputError(f"cannot add {sys1.D.shape} and {sys2.D.shape} systems")
    A = _blockdiag_exact([sys1.A, sys2.A])
    B = np.vstack([sys1.B, sys2.B])
    C = np.hstack([sys1.C, sys2.C])
    return _merge(A, B, C, sys1.D + sys2.D, sys1, sys2, sys1.input_index, sys1.output_index)


def scale(sys: StateSpaceSystem, alpha: float) -> StateSpaceSystem:
    return StateSpaceSystem(sys.A, sys.B, alpha * sys.C, alpha * sys.D,
                            sys.state_index, sys.input_index, sys.output_index)


def static_gain(D, input_index=None, output_index=None) -> StateSpaceSystem:
    D = np.asarray(D, dtype=float)
    k, m = D.shape
    si = None
    if input_index is not None:
        si = IndexSet.zeros(_as_index(input_index).n_nodes)
    return StateSpaceSystem(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((k, 0)), D, si, input_index, output_index)


def block_diagonal(systems: Sequence[StateSpaceSystem]) -> StateSpaceSystem:
    """Diagonal interconnection; node ``i`` of the result is ``systems[i]``."""
    # scipy's block_diag mishandles 0-sized blocks
    n = sum(s.n_states for s in systems)
    m = sum(s.n_inputs for s in systems)
    k = sum(s.n_outputs for s in systems)
    A, B, C, D = (_blockdiag_exact([getattr(s, name) for s in systems]) for name in "ABCD")
    return StateSpaceSystem(
        A.reshape(n, n), B.reshape(n, m), C.reshape(k, n), D.reshape(k, m),
        IndexSet(tuple(s.n_states for s in systems)),
        IndexSet(tuple(s.n_inputs for s in systems)),
        IndexSet(tuple(s.n_outputs for s in systems)),
    )


def _blockdiag_exact(mats) -> np.ndarray:
    rows = sum(M.shape[0] for M in mats)
    cols = sum(M.shape[1] for M in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for M in mats:
        out[r:r + M.shape[0], c:c + M.shape[1]] = M
        r += M.shape[0]
        c += M.shape[1]
    return out
