"""Dense numerical kernels: spectra, ranks, Lyapunov/Riccati solves, staircases.

All rank decisions go through :func:`rank_cutoff`, which applies the single
tolerance policy ``rank_tol * max(1, scale)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InputError, SolverError, SynthesisError

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "StaircaseResult",
    "eigenvalues",
    "spectral_abscissa",
    "rank_cutoff",
    "numerical_rank",
    "solve_lyapunov",
    "stabilizing_gain",
    "observer_gain",
    "controllability_staircase",
    "observability_staircase",
    "pbh_witnesses",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances.

    rank_tol
        Singular values at or below ``rank_tol * max(1, sigma_max)`` count as zero.
    hurwitz_margin
        Eigenvalues with ``|Re| <= hurwitz_margin`` are treated as marginal.
    match_tol
        Relative tolerance for transfer-matrix equality at probe points.
    seed
        Seed for the extra pseudorandom probe points.
    """

    rank_tol: float = 1e-8
    hurwitz_margin: float = 1e-8
    match_tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        for name in ("rank_tol", "hurwitz_margin", "match_tol"):
            if not getattr(self, name) >= 0:
                raise InputError(f"{name} must be nonnegative")


DEFAULT_TOL = Tolerances()


def _as_float_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name} has non-finite entries")
    return M


def _require_square(M, name="matrix"):
    M = _as_float_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise InputError(f"{name} must be square, got shape {M.shape}")
    return M


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues of a real square matrix, sorted by (real, imag)."""
    M = _require_square(M)
    if M.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    ev = np.linalg.eigvals(M).astype(complex)
    return ev[np.lexsort((ev.imag, ev.real))]


def spectral_abscissa(M) -> float:
    """Largest real part of the spectrum (``-inf`` for an empty matrix)."""
    ev = eigenvalues(M)
    return float(ev.real.max()) if ev.size else -np.inf


def rank_cutoff(scale: float, tol: Tolerances = DEFAULT_TOL) -> float:
    return tol.rank_tol * max(1.0, float(scale))


def numerical_rank(M, tol: Tolerances = DEFAULT_TOL) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rank_cutoff(s[0], tol)))


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve ``A^T P + P A + Q = 0`` for symmetric ``P``."""
    A = _require_square(A, "A")
    Q = _require_square(Q, "Q")
    if A.shape != Q.shape:
        raise InputError(f"A {A.shape} and Q {Q.shape} differ in shape")
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    ev = np.linalg.eigvals(A)
    sums = ev[:, None] + ev[None, :]
    idx = np.unravel_index(np.argmin(np.abs(sums)), sums.shape)
    scale = max(1.0, np.abs(ev).max())
    if abs(sums[idx]) <= 1e-12 * scale:
        raise SolverError(
            f"Lyapunov operator is singular: eigenvalues {ev[idx[0]]:.6g} and "
            f"{ev[idx[1]]:.6g} sum to {sums[idx]:.3g}"
        )
    P = sla.solve_continuous_lyapunov(A.T, -Q)
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class StaircaseResult:
    """Orthogonal reduction ``A_t = T^T A T`` exposing (un)controllable parts.

    For the controllability form the uncontrollable states come first and
    ``A_t`` is block lower triangular with ``B_t = [0; B_c]``. For the
    observability form the observable states come first and
    ``C_t = [C_o, 0]``. ``dim`` is the controllable (observable) dimension,
    always held by the trailing (leading) ``dim`` states respectively.
    """

    T: np.ndarray
    dim: int
    A: np.ndarray
    B: np.ndarray  # transformed B (controllability) or C (observability)
    kind: str

    @property
    def n(self) -> int:
        return self.T.shape[0]


def _staircase_controllable_first(A, B, tol):
    """Classical staircase with the controllable part leading."""
    n = A.shape[0]
    T = np.eye(n)
    At = A.copy()
    scale = max(np.linalg.norm(A, 2) if n else 0.0, np.linalg.norm(B, 2) if B.size else 0.0)
    cutoff = rank_cutoff(scale, tol)
    done = 0
    Bk = B
    while done < n and Bk.size:
        U, s, _ = np.linalg.svd(Bk, full_matrices=True)
        r = int(np.sum(s > cutoff))
        if r == 0:
            break
        Tk = np.eye(n)
        Tk[done:, done:] = U
        T = T @ Tk
        At = Tk.T @ At @ Tk
        Bk = At[done + r:, done:done + r]
        done += r
    return T, done


def controllability_staircase(A, B, tol: Tolerances = DEFAULT_TOL) -> StaircaseResult:
    """Orthogonal ``T`` with ``T^T A T = [[A_u, 0], [A_21, A_c]]``, ``T^T B = [0; B_c]``."""
    A = _require_square(A, "A")
    B = _as_float_matrix(B, "B")
    if B.shape[0] != A.shape[0]:
        raise InputError(f"B has {B.shape[0]} rows, A has {A.shape[0]}")
    n = A.shape[0]
    T0, r = _staircase_controllable_first(A, B, tol)
    # reverse block order: uncontrollable part first
    perm = np.r_[np.arange(r, n), np.arange(r)].astype(int)
    T = T0[:, perm]
    At = T.T @ A @ T
    Bt = T.T @ B
    u = n - r
    At[:u, u:] = 0.0
    Bt[:u, :] = 0.0
    return StaircaseResult(T, r, At, Bt, "controllability")


def observability_staircase(A, C, tol: Tolerances = DEFAULT_TOL) -> StaircaseResult:
    """Orthogonal ``T`` with ``T^T A T = [[A_o, 0], [A_21, A_u]]``, ``C T = [C_o, 0]``."""
    A = _require_square(A, "A")
    C = _as_float_matrix(C, "C")
    if C.shape[1] != A.shape[0]:
        raise InputError(f"C has {C.shape[1]} columns, A has {A.shape[0]} rows")
    n = A.shape[0]
    T0, r = _staircase_controllable_first(A.T, C.T, tol)
    T = T0
    At = T.T @ A @ T
    Ct = C @ T
    At[:r, r:] = 0.0
    Ct[:, r:] = 0.0
    return StaircaseResult(T, r, At, Ct, "observability")


def pbh_witnesses(A, X, tol: Tolerances = DEFAULT_TOL, dual: bool = False) -> list:
    """Eigenvalues with ``Re >= -margin`` where ``[A - lam I, X]`` loses rank.

    With ``dual=True`` the stacked matrix ``[A - lam I; X]`` is tested
    instead. Returns ``(lam, deficiency)`` pairs with nearby eigenvalues
    merged.
    """
    A = _require_square(A, "A")
    X = _as_float_matrix(X, "X")
    n = A.shape[0]
    if n == 0:
        return []
    ev = eigenvalues(A)
    out = []
    for lam in ev[ev.real >= -tol.hurwitz_margin]:
        if any(abs(lam - seen) <= 1e-6 * max(1.0, abs(lam)) for seen, _ in out):
            continue
        M = A - lam * np.eye(n)
        M = np.vstack([M, X]) if dual else np.hstack([M, X])
        r = numerical_rank(M, tol)
        if r < n:
            out.append((complex(lam), n - r))
    return out


def _bass_gain(A, B):
    """Bass-shift gain: stabilizing for controllable ``(A, B)``."""
    n = A.shape[0]
    beta = max(0.0, spectral_abscissa(A)) + 1.0
    As = A + beta * np.eye(n)
    Z = sla.solve_continuous_lyapunov(As, 2.0 * B @ B.T)
    return -B.T @ np.linalg.solve(Z, np.eye(n))


def _newton_kleinman(A, B, Q, R, F, iters=100, rtol=1e-13):
    P_old = None
    for _ in range(iters):
        Acl = A + B @ F
        P = solve_lyapunov(Acl, Q + F.T @ R @ F)
        F = -np.linalg.solve(R, B.T @ P)
        if P_old is not None and np.linalg.norm(P - P_old) <= rtol * max(1.0, np.linalg.norm(P)):
            break
        P_old = P
    return F


def _lqr_gain(A, B, Q, R):
    try:
        P = sla.solve_continuous_are(A, B, Q, R)
        F = -np.linalg.solve(R, B.T @ P)
        if spectral_abscissa(A + B @ F) < 0:
            return F
        log.debug("CARE solution not stabilizing; falling back to Newton-Kleinman")
    except (np.linalg.LinAlgError, ValueError) as exc:
        log.debug("CARE failed (%s); falling back to Newton-Kleinman", exc)
    return _newton_kleinman(A, B, Q, R, _bass_gain(A, B))


def stabilizing_gain(A, B, tol: Tolerances = DEFAULT_TOL, weights=None) -> np.ndarray:
    """Return ``F`` with ``A + B F`` Hurwitz.

    A zero gain is returned when ``A`` is already Hurwitz with margin.
    Otherwise the controllable part is isolated by a staircase reduction and
    an LQR gain is computed for it (identity weights unless ``weights =
    (Q, R)`` is given for the full state/input). Raises
    :class:`SynthesisError` if an unstable mode is uncontrollable.
    """
    A = _require_square(A, "A")
    B = _as_float_matrix(B, "B")
    n, m = A.shape[0], B.shape[1]
    if B.shape[0] != n:
        raise InputError(f"B has {B.shape[0]} rows, A has {n}")
    F = np.zeros((m, n))
    if n == 0 or (weights is None and spectral_abscissa(A) < -tol.hurwitz_margin):
        return F
    bad = pbh_witnesses(A, B, tol)
    if bad:
        raise SynthesisError(f"(A, B) is not stabilizable: uncontrollable eigenvalue {bad[0][0]:.6g}")
    st = controllability_staircase(A, B, tol)
    r = st.dim
    if r == 0:
        return F
    u = n - r
    Ac, Bc = st.A[u:, u:], st.B[u:, :]
    if weights is None:
        Q, R = np.eye(r), np.eye(m)
    else:
        Qf, R = (np.asarray(w, dtype=float) for w in weights)
        Tc = st.T[:, u:]
        Q = Tc.T @ Qf @ Tc
    Fc = _lqr_gain(Ac, Bc, Q, R)
    F = np.hstack([np.zeros((m, u)), Fc]) @ st.T.T
    if spectral_abscissa(A + B @ F) >= -tol.hurwitz_margin:
        raise SynthesisError(f"gain synthesis failed: closed-loop abscissa {spectral_abscissa(A + B @ F):.3g}")
    return F


def observer_gain(A, C, tol: Tolerances = DEFAULT_TOL, weights=None) -> np.ndarray:
    """Return ``L`` with ``A + L C`` Hurwitz (dual of :func:`stabilizing_gain`)."""
    A = _require_square(A, "A")
    C = _as_float_matrix(C, "C")
    return stabilizing_gain(A.T, C.T, tol, weights).T
