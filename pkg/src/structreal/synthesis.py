"""Structured stabilizability tests and structured controller synthesis.

Loop convention matches :mod:`structreal.stability`: ``u = K y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, PreconditionError, SolverError, StructureError, SynthesisError, WellPosednessError
from .graph import SparsityPattern
from .numerics import DEFAULT_TOL, Tolerances, observer_gain, rank_cutoff, stabilizing_gain
from .realize import (
    StructuredRealization,
    minimal_realization,
    realize_stable,
    verify_structured_realization,
)
from .stability import ClosedLoopReport, internal_stability_ss, pbh
from .system import (
    IndexSet,
    StateSpaceSystem,
    StructuredPattern,
    block_diagonal,
    interleave_states,
    is_structured_matrix,
    is_structured_tf,
    static_gain,
)

__all__ = [
    "GainSchedule",
    "YoulaGenerator",
    "StarProduct",
    "SynthesisReport",
    "structured_stabilizability_test",
    "block_gains",
    "synthesize_k0",
    "build_youla_generator",
    "star_product",
    "close_lft",
    "diagonal_test",
]


@dataclass(frozen=True)
class GainSchedule:
    """Per-node state-feedback and observer gains and their block-diagonal assembly."""

    F_blocks: dict
    L_blocks: dict
    F_d: np.ndarray
    L_d: np.ndarray


@dataclass
class SynthesisReport:
    """Outcome of a stabilizability test or a synthesis run.

    ``stabilizable`` is None when the verdict is indeterminate (marginal
    closed-loop spectrum).
    """

    test: str
    stabilizable: Optional[bool]
    failing: list = field(default_factory=list)
    controller: Optional[StructuredRealization] = None
    closed_loop: Optional[ClosedLoopReport] = None

    def to_json(self):
        out = {
            "test": self.test,
            "stabilizable": self.stabilizable,
            "failing": list(self.failing),
            "closed_loop": None if self.closed_loop is None else self.closed_loop.to_json(),
        }
        if self.controller is not None:
            out["controller_n"] = list(self.controller.state_index.dims)
        return out


def structured_stabilizability_test(R: StructuredRealization, tol: Tolerances = DEFAULT_TOL) -> SynthesisReport:
    """PBH on every diagonal block ``(C_ii, A_ii, B_ii)`` with ``n_i > 0``."""
    sys = R.sys
    n, k, m = sys.state_index, sys.output_index, sys.input_index
    failing = []
    for i in n.omega:
        si = n.slice(i)
        Aii = sys.A[si, si]
        for cert in (
            pbh(Aii, sys.B[si, m.slice(i)], "stabilizable", tol),
            pbh(Aii, sys.C[k.slice(i), si], "detectable", tol),
        ):
            if not cert.verdict:
                failing.append({"block": i + 1, **cert.to_json()})
    return SynthesisReport("diagonal_blocks", not failing, failing)


def _random_weights(rng, size):
    X = rng.standard_normal((size, size))
    return X @ X.T + np.eye(size)


def block_gains(R: StructuredRealization, tol: Tolerances = DEFAULT_TOL, rng=None) -> GainSchedule:
    """Gains ``F_i``, ``L_i`` stabilizing each diagonal block.

    With ``rng`` given, LQR weights are drawn at random instead of the
    deterministic default, for robustness checks.
    """
    sys = R.sys
    n, k, m = sys.state_index, sys.output_index, sys.input_index
    F_d = np.zeros((m.total, n.total))
    L_d = np.zeros((n.total, k.total))
    Fb, Lb = {}, {}
    for i in n.omega:
        si, ki, mi = n.slice(i), k.slice(i), m.slice(i)
        Aii = sys.A[si, si]
        fw = lw = None
        if rng is not None:
            ni = n.dims[i]
            fw = (_random_weights(rng, ni), _random_weights(rng, m.dims[i]))
            lw = (_random_weights(rng, ni), _random_weights(rng, k.dims[i]))
        Fb[i] = stabilizing_gain(Aii, sys.B[si, mi], tol, fw)
        Lb[i] = observer_gain(Aii, sys.C[ki, si], tol, lw)
        F_d[mi, si] = Fb[i]
        L_d[si, ki] = Lb[i]
    return GainSchedule(Fb, Lb, F_d, L_d)


def synthesize_k0(R: StructuredRealization, tol: Tolerances = DEFAULT_TOL, rng=None):
    """Observer-based structured controller ``K0 = (A+BF+LC+LDF, -L, F, 0)``.

    Returns ``(gains, K0 realization, closed-loop report)``.
    """
    test = structured_stabilizability_test(R, tol)
    if not test.stabilizable:
        raise SynthesisError("plant fails the diagonal-block PBH test", test)
    g = block_gains(R, tol, rng)
    sys = R.sys
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    F, L = g.F_d, g.L_d
    K = StateSpaceSystem(
        A + B @ F + L @ C + L @ D @ F, -L, F, np.zeros((sys.n_inputs, sys.n_outputs)),
        sys.state_index, sys.output_index, sys.input_index,
    )
    rep = verify_structured_realization(K, R.pattern.transposed_shape(), tol)
    if not rep.structured:
        raise SynthesisError("K0 failed structured-realization verification", rep)
    loop = internal_stability_ss(sys, K, tol)
    if not loop.stable:
        raise SynthesisError("K0 does not stabilize the plant", loop)
    return g, rep.realization, loop


@dataclass(frozen=True)
class YoulaGenerator:
    """``J`` with inputs ``[y; eta]`` (sizes ``k, m``) and outputs ``[u; e]`` (sizes ``m, k``)."""

    J: StateSpaceSystem
    plant: StructuredRealization
    gains: GainSchedule

    def _sub(self, out_u: bool, in_y: bool):
        J, p = self.J, self.plant.sys
        k, m = p.output_index, p.input_index
        rows = np.arange(m.total) if out_u else np.arange(m.total, m.total + k.total)
        cols = np.arange(k.total) if in_y else np.arange(k.total, k.total + m.total)
        return StateSpaceSystem(
            J.A, J.B[:, cols], J.C[rows], J.D[np.ix_(rows, cols)],
            p.state_index, k if in_y else m, m if out_u else k,
        )

    @property
    def J11(self):
        """``y -> u``, shape ``m x k``."""
        return self._sub(True, True)

    @property
    def J12(self):
        return self._sub(True, False)

    @property
    def J21(self):
        return self._sub(False, True)

    @property
    def J22(self):
        return self._sub(False, False)


def build_youla_generator(R: StructuredRealization, gains: GainSchedule, tol: Tolerances = DEFAULT_TOL) -> YoulaGenerator:
    sys = R.sys
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    n, k, m = sys.state_index, sys.output_index, sys.input_index
    F, L = np.asarray(gains.F_d), np.asarray(gains.L_d)
    if F.shape != (m.total, n.total) or L.shape != (n.total, k.total):
        raise InputError(f"gain shapes F{F.shape} L{L.shape} do not match the plant")
    S = R.sparsity
    pieces = (
        ("A_J", A + B @ F + L @ C + L @ D @ F, n, n),
        ("-L_d", -L, n, k),
        ("B+L_dD", B + L @ D, n, m),
        ("F_d", F, m, n),
        ("-(C+DF_d)", -(C + D @ F), k, n),
        ("-D", -D, k, m),
    )
    for name, M, ri, ci in pieces:
        ok, bad = is_structured_matrix(M, StructuredPattern(S, ri, ci), tol)
        if not ok:
            raise InputError(f"gains break the structure of {name} at blocks {bad}")
    J = StateSpaceSystem(
        pieces[0][1],
        np.hstack([-L, B + L @ D]),
        np.vstack([F, -(C + D @ F)]),
        np.block([[np.zeros((m.total, k.total)), np.eye(m.total)], [np.eye(k.total), -D]]),
    )
    return YoulaGenerator(J, R, gains)


@dataclass(frozen=True)
class StarProduct:
    """Controller realization ``F_l(J, Q)`` before state interleaving.

    States are ``[x; xi]`` (generator then parameter). ``identity_residual``
    is the relative residual of
    ``A_hat + B_hat [C + D F_d, D C_Q] = [[A + B F_d, B C_Q], [0, A_Q]]``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    identity_residual: float


def star_product(gen: YoulaGenerator, Q: StateSpaceSystem, tol: Tolerances = DEFAULT_TOL) -> StarProduct:
    """Redheffer star product of ``J`` with a parameter realization ``Q``."""
    sys = gen.plant.sys
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    F, L = gen.gains.F_d, gen.gains.L_d
    AQ, BQ, CQ, DQ = Q.A, Q.B, Q.C, Q.D
    k, m = sys.n_outputs, sys.n_inputs
    if DQ.shape != (m, k):
        raise InputError(f"Q must be {m}x{k}, got {DQ.shape[0]}x{DQ.shape[1]}")
    W = np.eye(k) + D @ DQ
    if np.linalg.svd(W, compute_uv=False).min(initial=np.inf) <= rank_cutoff(1.0, tol):
        raise WellPosednessError("I + D Q(inf) is singular")
    Wi = np.linalg.inv(W)  # (I + D D_Q)^{-1}
    Vi = np.linalg.inv(np.eye(m) + DQ @ D)  # (I + D_Q D)^{-1}
    BL = B + L @ D
    CF = C + D @ F
    AJ = A + B @ F + L @ C + L @ D @ F
    A11 = AJ - BL @ Vi @ DQ @ CF
    A12 = BL @ Vi @ CQ
    A21 = -BQ @ Wi @ CF
    A22 = AQ - BQ @ Wi @ D @ CQ
    B1 = -L + BL @ Vi @ DQ
    B2 = BQ @ Wi
    C1 = F - Vi @ DQ @ CF
    C2 = Vi @ CQ
    Dh = Vi @ DQ
    Ah = np.block([[A11, A12], [A21, A22]])
    Bh = np.vstack([B1, B2])
    lhs = Ah + Bh @ np.hstack([CF, D @ CQ])
    n, nq = A.shape[0], AQ.shape[0]
    rhs = np.block([[A + B @ F, B @ CQ], [np.zeros((nq, n)), AQ]])
    resid = float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs))) if rhs.size else 0.0
    return StarProduct(Ah, Bh, np.hstack([C1, C2]), Dh, resid)


IDENTITY_TOL = 1e-8


def close_lft(gen: YoulaGenerator, Q: StateSpaceSystem, tol: Tolerances = DEFAULT_TOL) -> StructuredRealization:
    """Structured realization of ``K = F_l(J, Q)`` for a stable structured ``Q``."""
    plant = gen.plant
    sys = plant.sys
    k, m = sys.output_index, sys.input_index
    qpat = StructuredPattern(plant.sparsity, m, k)
    Q = Q.with_index(None, k, m)
    try:
        Qr = realize_stable(Q, qpat, tol)
    except (PreconditionError, StructureError) as exc:
        raise PreconditionError(f"Q is not an admissible parameter: {exc}") from exc
    sp = star_product(gen, Qr.sys, tol)
    if sp.identity_residual > IDENTITY_TOL:
        raise SolverError(f"star-product identity residual {sp.identity_residual:.3g} exceeds {IDENTITY_TOL:g}")
    perm, nidx = interleave_states(sys.state_index, Qr.state_index)
    K = StateSpaceSystem(sp.A, sp.B, sp.C, sp.D, None, k, m).permute_states(perm, nidx)
    rep = verify_structured_realization(K, plant.pattern.transposed_shape(), tol)
    if not rep.structured:
        raise SynthesisError("F_l(J, Q) failed structured-realization verification", rep)
    return rep.realization


def _node_controller(Gii: StateSpaceSystem, tol, rng) -> StateSpaceSystem:
    if Gii.n_states == 0:
        return static_gain(np.zeros((Gii.n_inputs, Gii.n_outputs)))
    one = SparsityPattern.diagonal(1)
    Gi = Gii.with_index(IndexSet((Gii.n_states,)), IndexSet((Gii.n_inputs,)), IndexSet((Gii.n_outputs,)))
    rep = verify_structured_realization(Gi, StructuredPattern(one, Gi.output_index, Gi.input_index), tol)
    _, K, _ = synthesize_k0(rep.realization, tol, rng)
    return minimal_realization(K.sys, tol)


def diagonal_test(
    G: StateSpaceSystem,
    P: StructuredPattern,
    tol: Tolerances = DEFAULT_TOL,
    randomize_gains: bool = False,
    seed: int = 0,
) -> SynthesisReport:
    """Decide structured stabilizability by closing the loop with ``diag(K_1..K_N)``.

    Each ``K_i`` stabilizes the diagonal block ``G_ii``; the plant is
    structurally stabilizable iff the assembled diagonal controller
    stabilizes the whole plant.
    """
    G = G.with_index(None, P.col_index, P.row_index)
    ok, bad = is_structured_tf(G, P, tol)
    if not ok:
        raise StructureError(f"plant violates the pattern at blocks {bad}", bad)
    rng = np.random.default_rng(seed) if randomize_gains else None
    N = P.sparsity.n_nodes
    Ks = [_node_controller(minimal_realization(G.block(i, i), tol), tol, rng) for i in range(N)]
    Kd = block_diagonal(Ks).with_index(IndexSet(tuple(K.n_states for K in Ks)), P.row_index, P.col_index)
    Gmin = minimal_realization(G, tol)
    loop = internal_stability_ss(Gmin, Kd, tol)
    failing = []
    if loop.stabilizes is False and loop.eigenvalues is not None:
        bad_ev = loop.eigenvalues[loop.eigenvalues.real >= -tol.hurwitz_margin]
        failing = [{"closed_loop_eig": [float(z.real), float(z.imag)]} for z in bad_ev]
    report = SynthesisReport("diagonal_controller", loop.stabilizes, failing, closed_loop=loop)
    if loop.stabilizes:
        rep = verify_structured_realization(Kd, P.transposed_shape(), tol)
        report.controller = rep.realization
    return report
