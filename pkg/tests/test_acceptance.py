"""Acceptance suite: worked examples plus seeded property suites.

Each ``run_*`` function returns ``(passed, report)`` where ``report`` is a
JSON-serializable dict free of timings, so the determinism criterion can
compare serialized reports byte for byte. The tests add wall-clock bounds
on top and log one line per criterion for the terminal summary.
"""

import time

import numpy as np
import pytest

from structreal import (
    SparsityPattern,
    StateSpaceSystem,
    StructuredPattern,
    Tolerances,
    build_youla_generator,
    close_lft,
    column_realization,
    diagonal_test,
    internal_stability_ss,
    internal_stability_tf,
    is_structured_tf,
    minimal_realization,
    realize_chain,
    realize_stable,
    series,
    structured_stabilizability_test,
    synthesize_k0,
    systems_equal,
    tf_to_ss,
    verify_structured_realization,
)
from structreal.errors import IndeterminateError
from structreal.fixtures import (
    coupled_unstable_realization,
    four_node_graph,
    random_pattern,
    random_stable_structured,
    random_structured_realization,
    scramble,
    stable_two_node_realization,
    stable_two_node_spec,
    two_node_graph,
    unrealizable_four_node_spec,
)
from structreal.graph import adjacency
from structreal.serialize import dumps
from structreal.synthesis import star_product
from structreal.system import static_gain

SEED = 20240611
TOL = Tolerances(rank_tol=1e-8, hurwitz_margin=1e-8, match_tol=1e-7, seed=0)
IDENTITY_TOL = 1e-8


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


# ---- criterion 1: stable two-node example -------------------------------------------


def run_stable_two_node(seed=SEED):
    S = adjacency(two_node_graph())
    from_spec = tf_to_ss(stable_two_node_spec())
    reference = stable_two_node_realization()
    P = from_spec.pattern(S)
    built = realize_stable(from_spec, P, TOL)
    pairs = {
        "tf~reference": systems_equal(from_spec, reference, TOL),
        "tf~built": systems_equal(from_spec, built.sys, TOL),
        "built~reference": systems_equal(built.sys, reference, TOL),
    }
    rep = verify_structured_realization(reference, P, TOL)
    ok = all(pairs.values()) and rep.structured and rep.n == (1, 1)
    return ok, {"pairs": pairs, "verify": rep.to_json(), "built_n": list(built.state_index.dims)}


# ---- criterion 2: four-node unrealizable example -------------------------------------


def run_unrealizable_four_node(seed=SEED):
    S = adjacency(four_node_graph())
    G = tf_to_ss(unrealizable_four_node_spec())
    P = G.pattern(S)
    col = column_realization(G, P, TOL)
    ev = np.linalg.eigvals(col.A)
    mult = int(np.sum(np.abs(ev - 1.0) < 1e-8))
    rep = verify_structured_realization(col, P, TOL)
    diag = diagonal_test(G, P, TOL)
    cl = diag.closed_loop.eigenvalues
    near_one = bool(np.min(np.abs(cl - 1.0)) < 1e-8)
    kd_zero = diag.controller is None and all(
        minimal_realization(G.block(i, i), TOL).n_states == 0 for i in range(4)
    )
    ok = mult >= 2 and not rep.structured and diag.stabilizable is False and near_one and kd_zero
    return ok, {
        "multiplicity_at_1": mult,
        "column_n": list(col.state_index.dims),
        "verify": rep.to_json(),
        "diagonal_test": diag.to_json(),
        "eig_near_1": near_one,
        "kd_zero": kd_zero,
    }


# ---- criterion 3: coupled unstable example -------------------------------------------


def run_coupled_unstable(seed=SEED):
    S = adjacency(two_node_graph())
    out = {}
    expected = {(2, 1): (1, "detectable"), (1, 2): (2, "stabilizable")}
    ok = True
    for n, (block, prop) in expected.items():
        sys = coupled_unstable_realization(n)
        rep = verify_structured_realization(sys, sys.pattern(S), TOL)
        test = structured_stabilizability_test(rep.realization, TOL)
        hit = any(
            f["block"] == block
            and f["property"] == prop
            and any(abs(w["eig"][0] - 1.0) < 1e-8 and abs(w["eig"][1]) < 1e-8 for w in f["witnesses"])
            for f in test.failing
        )
        ok &= rep.structured and test.stabilizable is False and hit
        out[f"n={n}"] = test.to_json()
    G = coupled_unstable_realization().unstructured()
    diag = diagonal_test(G, G.pattern(S), TOL)
    ok &= diag.stabilizable is False
    out["diagonal_test"] = diag.to_json()
    return bool(ok), out


# ---- criteria 4 and 5: random plants, K0 and Youla parameterization ------------------


def random_admissible_plants(seed, count=100):
    """Seeded plants that are structured realizations passing the diagonal-block test."""
    rng = np.random.default_rng(seed)
    plants = []
    while len(plants) < count:
        N = int(rng.integers(1, 5))
        S = random_pattern(rng, N)
        k, m, n = rng.integers(1, 3, N), rng.integers(1, 3, N), rng.integers(0, 4, N)
        G = random_structured_realization(rng, S, k, m, n)
        rep = verify_structured_realization(G, G.pattern(S), TOL)
        if not rep.structured:
            continue
        if not structured_stabilizability_test(rep.realization, TOL).stabilizable:
            continue
        plants.append(rep.realization)
    return plants


def run_k0_suite(seed=SEED):
    plants = random_admissible_plants(seed)
    absc, n_unstable, failures = [], 0, []
    for idx, R in enumerate(plants):
        n_unstable += bool(R.sys.n_states and R.sys.poles().real.max() > 0)
        _, K0, loop = synthesize_k0(R, TOL)
        absc.append(loop.abscissa)
        if not (loop.stable and loop.abscissa < -1e-8):
            failures.append(idx)
    ok = not failures and len(plants) == 100 and 0 < n_unstable < 100
    return ok, {
        "plants": len(plants),
        "unstable_plants": n_unstable,
        "failures": failures,
        "worst_abscissa": max(absc),
    }


def run_youla_suite(seed=SEED, q_per_plant=5):
    plants = random_admissible_plants(seed)
    rng = np.random.default_rng(seed + 1)
    failures, worst_resid, count, k0_recovered = [], 0.0, 0, 0
    for idx, R in enumerate(plants):
        sys = R.sys
        S = R.sparsity
        k, m = sys.output_index, sys.input_index
        gains, K0, _ = synthesize_k0(R, TOL)
        gen = build_youla_generator(R, gains, TOL)
        qpat = StructuredPattern(S, m, k)
        for _ in range(q_per_plant):
            nq = rng.integers(0, 3, S.n_nodes)
            Q = random_stable_structured(rng, S, m.dims, k.dims, nq).unstructured()
            K = close_lft(gen, Q, TOL)
            Qr = realize_stable(Q.with_index(None, k, m), qpat, TOL)
            resid = star_product(gen, Qr.sys, TOL).identity_residual
            worst_resid = max(worst_resid, resid)
            verified = verify_structured_realization(K.sys, qpat, TOL).structured
            ss = internal_stability_ss(sys, K.sys, TOL)
            tf = internal_stability_tf(sys, K.sys, TOL)
            structured = is_structured_tf(K.sys, qpat, TOL)[0]
            count += 1
            if not (structured and ss.stabilizes and tf and verified and resid <= IDENTITY_TOL):
                failures.append(idx)
        Kz = close_lft(gen, static_gain(np.zeros((m.total, k.total))), TOL)
        k0_recovered += systems_equal(Kz.sys, K0.sys, TOL)
    ok = not failures and count == 100 * q_per_plant and k0_recovered == len(plants)
    return ok, {
        "controllers": count,
        "failures": failures,
        "worst_identity_residual": worst_resid,
        "k0_recovered": k0_recovered,
    }


# ---- criterion 6: scrambled chains ---------------------------------------------------


def run_chain_suite(seed=SEED, count=50):
    rng = np.random.default_rng(seed)
    S = SparsityPattern.full_lower(3)
    failures, orders = [], []
    for idx in range(count):
        n = rng.integers(0, 4, 3)
        G = random_structured_realization(rng, S, rng.integers(1, 3, 3), rng.integers(1, 3, 3), n)
        Gs = scramble(rng, G)
        order = minimal_realization(Gs, TOL).n_states
        R = realize_chain(Gs, tol=TOL)
        structured = verify_structured_realization(R.sys, R.pattern, TOL).structured
        orders.append([order, R.sys.n_states])
        if not (structured and R.sys.n_states == order and systems_equal(R.sys, Gs, TOL)):
            failures.append(idx)
    return not failures, {"systems": count, "failures": failures, "orders": orders}


# ---- criterion 7: closure under products ---------------------------------------------


def run_product_closure(seed=SEED, count=100):
    rng = np.random.default_rng(seed)
    failures = []
    for idx in range(count):
        N = int(rng.integers(1, 5))
        S = random_pattern(rng, N)
        k, p, m = (rng.integers(1, 3, N) for _ in range(3))
        G2 = random_structured_realization(rng, S, p, m, rng.integers(0, 3, N))
        G1 = random_structured_realization(rng, S, k, p, rng.integers(0, 3, N))
        prod = series(G1, G2)
        if not is_structured_tf(prod, prod.pattern(S), TOL)[0]:
            failures.append(idx)
    return not failures, {"products": count, "failures": failures}


# ---- criterion 8: state-space vs input-output internal stability ---------------------


def _random_loop(rng):
    N = int(rng.integers(1, 4))
    S = random_pattern(rng, N)
    k, m, n = rng.integers(1, 3, N), rng.integers(1, 3, N), rng.integers(0, 3, N)
    G = random_structured_realization(rng, S, k, m, n)
    rep = verify_structured_realization(G, G.pattern(S), TOL)
    if not rep.structured:
        return None
    mode = rng.integers(0, 3)
    if mode == 0 and structured_stabilizability_test(rep.realization, TOL).stabilizable:
        # a stabilizing observer-based controller
        _, K, _ = synthesize_k0(rep.realization, TOL)
        return G, K.sys
    if mode == 1 and structured_stabilizability_test(rep.realization, TOL).stabilizable:
        # perturbed stabilizing controller: verdicts on both sides of the boundary
        _, K0, _ = synthesize_k0(rep.realization, TOL)
        K = K0.sys
        dA = rng.standard_normal(K.A.shape) * rng.uniform(0.0, 1.5) * (K.A != 0)
        return G, StateSpaceSystem(K.A + dA, K.B, K.C, K.D, K.state_index, K.input_index, K.output_index)
    return G, random_structured_realization(rng, S, m, k, rng.integers(0, 3, N), d_scale=0.3)


def run_loop_equivalence(seed=SEED, count=100):
    rng = np.random.default_rng(seed)
    verdicts, mismatches, resampled = [], [], 0
    while len(verdicts) < count:
        pair = _random_loop(rng)
        if pair is None:
            continue
        G, K = pair
        ss = internal_stability_ss(G, K, TOL)
        # well posed, stabilizable/detectable realizations, decisive spectrum
        if not ss.well_posed or ss.indeterminate or ss.stabilizes is None:
            resampled += 1
            continue
        try:
            tf = internal_stability_tf(G, K, TOL)
        except IndeterminateError:
            resampled += 1
            continue
        verdicts.append(bool(ss.stabilizes))
        if tf != ss.stabilizes:
            mismatches.append(len(verdicts) - 1)
    n_stable = sum(verdicts)
    ok = not mismatches and 0 < n_stable < count
    return ok, {"pairs": count, "stabilizing": n_stable, "mismatches": mismatches, "resampled": resampled}


RUNNERS = {
    "1 stable two-node example": (run_stable_two_node, 1.0),
    "2 four-node unrealizable example": (run_unrealizable_four_node, 1.0),
    "3 coupled unstable example": (run_coupled_unstable, 1.0),
    "4 observer-based controller suite": (run_k0_suite, 30.0),
    "5 Youla parameterization suite": (run_youla_suite, 120.0),
    "6 chain realization suite": (run_chain_suite, 30.0),
    "7 product closure": (run_product_closure, None),
    "8 loop stability equivalence": (run_loop_equivalence, None),
}

_REPORTS = {}


@pytest.mark.parametrize("name", list(RUNNERS))
def test_criterion(name, acceptance_log):
    fn, budget = RUNNERS[name]
    (ok, report), elapsed = _timed(fn)
    _REPORTS[name] = dumps(report)
    in_time = budget is None or elapsed < budget
    limit = f" (limit {budget:g} s)" if budget is not None else ""
    summary = ", ".join(f"{k}={v}" for k, v in report.items() if isinstance(v, (int, float)) and not isinstance(v, bool))
    acceptance_log.append((name, ok and in_time, f"{elapsed:.2f} s{limit}" + (f"; {summary}" if summary else "")))
    assert ok, dumps(report)
    assert in_time, f"took {elapsed:.2f} s{limit}"


def test_determinism(acceptance_log):
    mismatched = []
    for name, (fn, _) in RUNNERS.items():
        first = _REPORTS.get(name)
        if first is None:
            first = dumps(fn()[1])
        if dumps(fn()[1]) != first:
            mismatched.append(name)
    acceptance_log.append(("9 determinism", not mismatched, f"reports differ: {mismatched}" if mismatched else "criteria 1-8 byte-identical on rerun"))
    assert not mismatched
