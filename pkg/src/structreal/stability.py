"""Hurwitz, PBH and internal-stability predicates for feedback loops.

Sign convention for the loop: ``y = G u + (disturbance)``, ``u = K y``,
i.e. positive feedback, so the closed loop is well posed iff ``I - D D_K``
is invertible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import IndeterminateError, InputError
from .numerics import DEFAULT_TOL, Tolerances, eigenvalues, pbh_witnesses, rank_cutoff
from .system import StateSpaceSystem

__all__ = [
    "PbhCertificate",
    "ClosedLoopReport",
    "is_hurwitz",
    "pbh",
    "closed_loop_matrix",
    "internal_stability_ss",
    "internal_stability_tf",
    "loop_map",
]

log = logging.getLogger(__name__)


def _complex_json(z):
    return [float(np.real(z)), float(np.imag(z))]


@dataclass(frozen=True)
class PbhCertificate:
    """Outcome of a PBH rank test.

    ``witnesses`` lists ``(eigenvalue, rank_deficiency)`` for every
    closed-right-half-plane eigenvalue at which the test fails.
    """

    property: str
    verdict: bool
    witnesses: tuple = ()

    def __post_init__(self):
        if self.verdict == bool(self.witnesses):
            raise ValueError("verdict must be False exactly when witnesses are present")

    def to_json(self):
        return {
            "property": self.property,
            "verdict": self.verdict,
            "witnesses": [{"eig": _complex_json(lam), "deficiency": d} for lam, d in self.witnesses],
        }


def is_hurwitz(M, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, float]:
    """Return ``(hurwitz, spectral_abscissa)``.

    Raises :class:`IndeterminateError` when the abscissa lies within
    ``hurwitz_margin`` of the imaginary axis.
    """
    ev = eigenvalues(M)
    a = float(ev.real.max()) if ev.size else -np.inf
    if abs(a) <= tol.hurwitz_margin:
        raise IndeterminateError(f"marginal spectrum: abscissa {a:.3g} within {tol.hurwitz_margin:g} of the axis", a)
    return a < 0, a


def pbh(A, X, property: str = "stabilizable", tol: Tolerances = DEFAULT_TOL) -> PbhCertificate:
    """PBH test of ``(A, B)`` stabilizability or ``(C, A)`` detectability."""
    if property not in ("stabilizable", "detectable"):
        raise InputError(f"unknown PBH property {property!r}")
    wit = pbh_witnesses(A, X, tol, dual=(property == "detectable"))
    return PbhCertificate(property, not wit, tuple(wit))


@dataclass
class ClosedLoopReport:
    """State-space view of the loop ``(G, K)``.

    ``stable`` means well posed with Hurwitz closed-loop matrix.
    ``stabilizes`` is the combined verdict: True when ``stable``; False when
    the loop is ill posed or when the loop is unstable and both
    realizations pass PBH; None when neither can be certified.
    """

    well_posed: bool
    closed_loop_A: Optional[np.ndarray] = None
    eigenvalues: Optional[np.ndarray] = None
    stable: bool = False
    abscissa: Optional[float] = None
    plant_pbh: tuple = ()
    controller_pbh: tuple = ()
    stabilizes: Optional[bool] = None
    indeterminate: bool = False
    notes: list = field(default_factory=list)

    def to_json(self):
        return {
            "well_posed": self.well_posed,
            "stable": self.stable,
            "indeterminate": self.indeterminate,
            "stabilizes": self.stabilizes,
            "abscissa": self.abscissa,
            "eigenvalues": [] if self.eigenvalues is None else [_complex_json(z) for z in self.eigenvalues],
            "plant_pbh": [c.to_json() for c in self.plant_pbh],
            "controller_pbh": [c.to_json() for c in self.controller_pbh],
            "notes": list(self.notes),
        }


def _check_loop_dims(G: StateSpaceSystem, K: StateSpaceSystem):
    if (K.n_inputs, K.n_outputs) != (G.n_outputs, G.n_inputs):
        raise InputError(
            f"plant is {G.n_outputs}x{G.n_inputs}, controller must be {G.n_inputs}x{G.n_outputs}, "
            f"got {K.n_outputs}x{K.n_inputs}"
        )


def _well_posed(G, K, tol) -> bool:
    k = G.n_outputs
    M = np.eye(k) - G.D @ K.D
    if k == 0:
        return True
    s = np.linalg.svd(M, compute_uv=False)
    return bool(s[-1] > rank_cutoff(1.0, tol))


def closed_loop_matrix(G: StateSpaceSystem, K: StateSpaceSystem) -> np.ndarray:
    """``diag(A, A_K) + diag(B, B_K) [[I, -D_K], [-D, I]]^{-1} [[0, C_K], [C, 0]]``."""
    n, nk = G.n_states, K.n_states
    m, k = G.n_inputs, G.n_outputs
    W = np.block([[np.eye(m), -K.D], [-G.D, np.eye(k)]])
    Bb = np.block([[G.B, np.zeros((n, k))], [np.zeros((nk, m)), K.B]])
    Cb = np.block([[np.zeros((m, n)), K.C], [G.C, np.zeros((k, nk))]])
    Ab = np.block([[G.A, np.zeros((n, nk))], [np.zeros((nk, n)), K.A]])
    return Ab + Bb @ np.linalg.solve(W, Cb)


def _realization_pbh(sys, tol):
    return (pbh(sys.A, sys.B, "stabilizable", tol), pbh(sys.A, sys.C, "detectable", tol))


def internal_stability_ss(G: StateSpaceSystem, K: StateSpaceSystem, tol: Tolerances = DEFAULT_TOL) -> ClosedLoopReport:
    """State-space internal-stability test of the loop ``(G, K)``.

    A marginal closed-loop spectrum is reported with ``indeterminate=True``
    and ``stabilizes=None`` rather than raised.
    """
    _check_loop_dims(G, K)
    gp, kp = _realization_pbh(G, tol), _realization_pbh(K, tol)
    realizations_ok = all(c.verdict for c in gp + kp)
    if not _well_posed(G, K, tol):
        return ClosedLoopReport(False, plant_pbh=gp, controller_pbh=kp, stabilizes=False,
                                notes=["I - D D_K is singular"])
    Abar = closed_loop_matrix(G, K)
    ev = eigenvalues(Abar)
    rep = ClosedLoopReport(True, Abar, ev, plant_pbh=gp, controller_pbh=kp)
    try:
        rep.stable, rep.abscissa = is_hurwitz(Abar, tol)
    except IndeterminateError as exc:
        rep.abscissa = exc.abscissa
        rep.indeterminate = True
        rep.notes.append(str(exc))
        return rep
    if rep.stable:
        rep.stabilizes = True
    elif realizations_ok:
        rep.stabilizes = False
    else:
        rep.notes.append("closed loop unstable but a realization fails PBH; input-output verdict not implied")
    return rep


def loop_map(G: StateSpaceSystem, K: StateSpaceSystem) -> StateSpaceSystem:
    """Realization of ``[[I, -G], [-K, I]]^{-1}`` (requires a well-posed loop)."""
    _check_loop_dims(G, K)
    n, nk = G.n_states, K.n_states
    m, k = G.n_inputs, G.n_outputs
    # [[I, -G], [-K, I]] maps (w1, w2) -> (w1 - G w2, w2 - K w1); w1 has k rows, w2 has m
    Am = np.block([[G.A, np.zeros((n, nk))], [np.zeros((nk, n)), K.A]])
    Bm = np.block([[np.zeros((n, k)), G.B], [K.B, np.zeros((nk, m))]])
    Cm = np.block([[-G.C, np.zeros((k, nk))], [np.zeros((m, n)), -K.C]])
    Dm = np.block([[np.eye(k), -G.D], [-K.D, np.eye(m)]])
    Dmi = np.linalg.inv(Dm)
    return StateSpaceSystem(Am - Bm @ Dmi @ Cm, Bm @ Dmi, -Dmi @ Cm, Dmi)


def internal_stability_tf(G: StateSpaceSystem, K: StateSpaceSystem, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Input-output test: well posed and the four-block loop map is stable.

    The loop map is realized, reduced to a minimal realization, and its
    poles checked. Raises :class:`IndeterminateError` on a marginal spectrum.
    """
    from .realize import minimal_realization

    _check_loop_dims(G, K)
    if not _well_posed(G, K, tol):
        log.debug("loop ill posed: I - G(inf) K(inf) singular")
        return False
    H = minimal_realization(loop_map(G, K), tol)
    return is_hurwitz(H.A, tol)[0]
