import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structreal.errors import IndeterminateError, InputError
from structreal.numerics import Tolerances
from structreal.stability import (
    closed_loop_matrix,
    internal_stability_ss,
    internal_stability_tf,
    is_hurwitz,
    loop_map,
    pbh,
)
from structreal.system import StateSpaceSystem, evaluate, static_gain

TOL = Tolerances()


def random_system(rng, n, m, k, d=True):
    return StateSpaceSystem(
        rng.standard_normal((n, n)), rng.standard_normal((n, m)), rng.standard_normal((k, n)),
        0.3 * rng.standard_normal((k, m)) if d else np.zeros((k, m)),
    )


def test_is_hurwitz():
    assert is_hurwitz(np.diag([-1.0, -2.0]), TOL) == (True, -1.0)
    assert is_hurwitz(np.diag([-1.0, 0.5]), TOL)[0] is False
    with pytest.raises(IndeterminateError):
        is_hurwitz(np.diag([-1.0, 1e-10]), TOL)


def test_pbh_certificate_consistency():
    cert = pbh(np.diag([1.0, -1.0]), np.array([[0.0], [1.0]]), "stabilizable", TOL)
    assert not cert.verdict and len(cert.witnesses) == 1
    cert = pbh(np.diag([1.0, -1.0]), np.array([[1.0, 0.0]]), "detectable", TOL)
    assert cert.verdict and cert.witnesses == ()


def test_closed_loop_matrix_strictly_proper_oracle():
    # with D = 0: [[A + B D_K C, B C_K], [B_K C, A_K]]
    rng = np.random.default_rng(3)
    G = random_system(rng, 3, 2, 1, d=False)
    K = random_system(rng, 2, 1, 2)
    expected = np.block([[G.A + G.B @ K.D @ G.C, G.B @ K.C], [K.B @ G.C, K.A]])
    assert np.allclose(closed_loop_matrix(G, K), expected)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_closed_loop_matrix_general_oracle(seed):
    # eliminate u, y from  u = C_K xk + D_K y,  y = C x + D u
    rng = np.random.default_rng(seed)
    n, nk, m, k = rng.integers(0, 4), rng.integers(0, 4), rng.integers(1, 3), rng.integers(1, 3)
    G = random_system(rng, n, m, k)
    K = random_system(rng, nk, k, m)
    M = np.linalg.inv(np.eye(m) - K.D @ G.D)
    u_x = M @ K.D @ G.C
    u_xk = M @ K.C
    y_x = G.C + G.D @ u_x
    y_xk = G.D @ u_xk
    expected = np.block([[G.A + G.B @ u_x, G.B @ u_xk], [K.B @ y_x, K.A + K.B @ y_xk]])
    assert np.allclose(closed_loop_matrix(G, K), expected)


def test_loop_map_is_inverse():
    rng = np.random.default_rng(5)
    G = random_system(rng, 2, 2, 1)
    K = random_system(rng, 1, 1, 2)
    T = loop_map(G, K)
    s = 0.7 + 1.3j
    Gs, Ks = evaluate(G, s), evaluate(K, s)
    Mblk = np.block([[np.eye(1), -Gs], [-Ks, np.eye(2)]])
    assert np.allclose(evaluate(T, s) @ Mblk, np.eye(3))


def test_ill_posed_loop():
    G = static_gain([[1.0]])
    K = static_gain([[1.0]])
    rep = internal_stability_ss(G, K, TOL)
    assert not rep.well_posed and rep.stabilizes is False
    assert internal_stability_tf(G, K, TOL) is False


def test_dimension_mismatch():
    with pytest.raises(InputError):
        internal_stability_ss(static_gain([[1.0, 0.0]]), static_gain([[1.0, 0.0]]), TOL)


def test_hidden_unstable_mode_both_criteria():
    # unstable mode cancelled by a controller zero: state-space unstable, I/O map unstable too
    G = StateSpaceSystem([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    K = StateSpaceSystem([[-2.0]], [[1.0]], [[-3.0]], [[0.0]])
    ss = internal_stability_ss(G, K, TOL)
    assert ss.stabilizes == internal_stability_tf(G, K, TOL)


def test_stabilizing_static_gain():
    G = StateSpaceSystem([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    K = static_gain([[-3.0]])
    assert internal_stability_ss(G, K, TOL).stabilizes is True
    assert internal_stability_tf(G, K, TOL) is True
    assert internal_stability_ss(G, static_gain([[-0.5]]), TOL).stabilizes is False


def test_marginal_loop_is_indeterminate():
    G = StateSpaceSystem([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    rep = internal_stability_ss(G, static_gain([[-1.0]]), TOL)
    assert rep.indeterminate and rep.stabilizes is None


def test_unstabilizable_realization_leaves_verdict_open():
    # unstable mode invisible to the controller: realization fails PBH
    G = StateSpaceSystem(np.diag([1.0, -1.0]), [[0.0], [1.0]], [[0.0, 1.0]], [[0.0]])
    rep = internal_stability_ss(G, static_gain([[0.0]]), TOL)
    assert not rep.stable and rep.stabilizes is None and rep.notes


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_criteria_agree_on_random_loops(seed):
    rng = np.random.default_rng(seed)
    G = random_system(rng, rng.integers(1, 4), rng.integers(1, 3), rng.integers(1, 3))
    K = random_system(rng, rng.integers(0, 3), G.n_outputs, G.n_inputs)
    ss = internal_stability_ss(G, K, TOL)
    if ss.indeterminate or ss.stabilizes is None:
        return
    try:
        tf = internal_stability_tf(G, K, TOL)
    except IndeterminateError:
        return
    assert tf == ss.stabilizes
