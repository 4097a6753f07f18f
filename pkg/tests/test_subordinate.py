from __future__ import annotations

import math

import numpy as np
import pytest

from semigraph.mittag import MLParams
from semigraph.renewal import Exponential, MittagLeffler, count_at
from semigraph.subordinate import (
    GlobalPolicy,
    MatrixKernel,
    StateDependentPolicy,
    chapman_kolmogorov_check,
    marginal_at_step,
    simulate,
    state_at,
    stopping_time,
    trajectory_streams,
)

TWO_STATE = np.array([[0.1, 0.9], [0.9, 0.1]])


def identity_kernel(state, rng):
    rng.random()  # consume like a real kernel would
    return state


def two_state_kernel():
    return MatrixKernel(TWO_STATE, states=("A", "B"))


def test_matrix_kernel_validation():
    with pytest.raises(ValueError):
        MatrixKernel([[0.5, 0.4], [0.5, 0.5]], states=("A", "B"))
    with pytest.raises(ValueError):
        MatrixKernel([[0.5, 0.5], [-0.1, 1.1]], states=("A", "B"))
    with pytest.raises(ValueError):
        MatrixKernel(TWO_STATE, states=("A",))


def test_matrix_kernel_frequencies():
    k = two_state_kernel()
    clock, chain = trajectory_streams(77, 0)
    hits = sum(k("A", chain) == "A" for _ in range(20_000))
    assert abs(hits / 20_000 - 0.1) < 3 * math.sqrt(0.1 * 0.9 / 20_000)


def test_identity_kernel_keeps_state():
    clock, chain = trajectory_streams(1, 0)
    tr = simulate(identity_kernel, GlobalPolicy(Exponential(1.0)), "x", 50.0, clock, chain)
    assert all(s == "x" for s in tr.states)
    assert state_at(tr, 25.0) == "x"


def test_transition_count_is_poisson_distributed():
    lam, horizon = 2.0, 20.0
    counts = []
    for r in range(1000):
        clock, chain = trajectory_streams(5, r)
        tr = simulate(two_state_kernel(), GlobalPolicy(Exponential(lam)), "A", horizon, clock, chain)
        counts.append(len(tr.states))
    counts = np.array(counts)
    mean_se = math.sqrt(lam * horizon / len(counts))
    assert abs(counts.mean() - lam * horizon) < 3 * mean_se
    var_se = lam * horizon * math.sqrt(2.0 / len(counts))  # approximate
    assert abs(counts.var() - lam * horizon) < 4 * var_se


def test_state_at_lookup_semantics():
    clock, chain = trajectory_streams(9, 4)
    tr = simulate(two_state_kernel(), GlobalPolicy(Exponential(1.0)), "A", 30.0, clock, chain)
    assert len(tr.epochs) > 3
    t1 = tr.epochs.times[0]
    assert state_at(tr, t1 / 2) == "A"
    assert state_at(tr, float(t1)) == tr.states[0]  # inclusive at the epoch
    # piecewise constant between consecutive epochs
    lo, hi = tr.epochs.times[1], tr.epochs.times[2]
    for frac in (0.01, 0.5, 0.99):
        assert state_at(tr, float(lo + frac * (hi - lo))) == tr.states[1]
    with pytest.raises(ValueError):
        state_at(tr, 31.0)


def test_state_at_right_continuity_random_trajectories():
    for r in range(200):
        clock, chain = trajectory_streams(10, r)
        tr = simulate(two_state_kernel(), GlobalPolicy(Exponential(1.0)), "A", 10.0, clock, chain)
        n = count_at(tr.epochs, tr.horizon)
        assert n == len(tr.states)
        for i, t in enumerate(tr.epochs.times):
            assert state_at(tr, float(t)) == tr.states[i]
            eps_ahead = min(float(t) + 1e-9, tr.horizon)
            assert state_at(tr, eps_ahead) == tr.states[i]


def test_simulate_is_deterministic():
    a = simulate(two_state_kernel(), GlobalPolicy(Exponential(1.0)), "A", 100.0,
                 *trajectory_streams(123, 7))
    b = simulate(two_state_kernel(), GlobalPolicy(Exponential(1.0)), "A", 100.0,
                 *trajectory_streams(123, 7))
    assert a.states == b.states
    assert np.array_equal(a.epochs.times, b.epochs.times)


def test_stopping_time_immediate():
    clock, chain = trajectory_streams(2, 0)
    res = stopping_time(two_state_kernel(), GlobalPolicy(Exponential(1.0)), "A",
                        lambda s: s == "A", 100, clock, chain)
    assert res.stopped and res.time == 0.0 and res.transitions == 0


def test_stopping_time_budget():
    clock, chain = trajectory_streams(2, 1)
    res = stopping_time(identity_kernel, GlobalPolicy(Exponential(1.0)), "A",
                        lambda s: s == "B", 50, clock, chain)
    assert not res.stopped and res.time is None and res.transitions == 50


def test_stopping_time_hits_absorbing_predicate():
    for r in range(100):
        clock, chain = trajectory_streams(33, r)
        res = stopping_time(two_state_kernel(), GlobalPolicy(MittagLeffler(MLParams(0.9))),
                            "A", lambda s: s == "B", 10_000, clock, chain)
        assert res.stopped and res.time > 0 and res.transitions >= 1


def test_chapman_kolmogorov():
    assert chapman_kolmogorov_check(TWO_STATE, 1, 1) == 0.0
    assert chapman_kolmogorov_check(TWO_STATE, 2, 3) < 1e-12
    assert chapman_kolmogorov_check(np.eye(4), 5, 9) == 0.0
    rng = np.random.default_rng(21)
    for _ in range(50):
        n = int(rng.integers(2, 17))
        p = rng.random((n, n))
        p /= p.sum(axis=1, keepdims=True)
        assert chapman_kolmogorov_check(p, int(rng.integers(1, 6)), int(rng.integers(1, 6))) < 1e-12
    with pytest.raises(ValueError):
        chapman_kolmogorov_check(np.array([[0.5, 0.6], [0.5, 0.5]]), 1, 1)


def test_marginal_at_step():
    p0 = np.array([1.0, 0.0])
    assert np.array_equal(marginal_at_step(p0, TWO_STATE, 1), p0)
    out = marginal_at_step(p0, TWO_STATE, 120)
    assert np.abs(out - 0.5).max() < 1e-10
    assert abs(out.sum() - 1.0) < 1e-12
    inv = np.array([0.5, 0.5])
    for m in (1, 2, 7, 30):
        assert np.abs(marginal_at_step(inv, TWO_STATE, m) - inv).max() < 1e-15


def test_marginal_convergence_rate_is_second_eigenvalue():
    # |P(X_m = A) - 1/2| = 0.5 * 0.8**(m-1) exactly for this chain.
    p0 = np.array([1.0, 0.0])
    for m in (1, 5, 10, 25, 50):
        dev = abs(marginal_at_step(p0, TWO_STATE, m)[0] - 0.5)
        assert abs(dev - 0.5 * 0.8 ** (m - 1)) < 1e-12


def test_semi_markov_factorization_two_state():
    # With a global clock, (next state, sojourn) factorizes: the joint
    # frequency of {next = B, J <= median} splits into the marginals.
    law = Exponential(1.0)
    kernel = two_state_kernel()
    clock, chain = trajectory_streams(55, 0)
    n = 10_000
    t_cut = math.log(2.0)  # median of Exp(1)
    joint = to_b = below = 0
    for _ in range(n):
        j = float(law.sample_n(clock, 1)[0])
        nxt = kernel("A", chain)
        if nxt == "B":
            to_b += 1
        if j <= t_cut:
            below += 1
        if nxt == "B" and j <= t_cut:
            joint += 1
    p1, p2, pj = to_b / n, below / n, joint / n
    se = math.sqrt(p1 * p2 * (1 - p1) * (1 - p2) / n)
    assert abs(pj - p1 * p2) < 3 * max(se, 1e-4)


def test_matrix_kernel_state_cap():
    n = 5000
    p = np.eye(n)
    with pytest.raises(ValueError):
        MatrixKernel(p, states=tuple(range(n)))


def test_trajectory_csv_dump():
    import io

    from semigraph.experiments import kernel_example_a
    from semigraph.graphs import GraphState
    from semigraph.subordinate import state_digest, trajectory_to_csv

    clock, chain = trajectory_streams(3, 0)
    tr = simulate(kernel_example_a(4), GlobalPolicy(Exponential(1.0)),
                  GraphState.empty(4), 12.0, clock, chain)
    buf = io.StringIO()
    trajectory_to_csv(tr, buf, functionals=("edges", "components", "triangle"))
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "n,t_n,state_hash,edges,components,triangle"
    assert len(lines) == len(tr.states) + 1
    first = lines[1].split(",")
    assert first[0] == "1"
    assert first[2] == state_digest(tr.states[0])
    assert first[3] == "1"  # one toggle from empty leaves one edge
    assert first[4] == "3"  # 4 vertices, one edge: 3 components
    with pytest.raises(ValueError):
        trajectory_to_csv(tr, io.StringIO(), functionals=("girth",))
    # digests are stable across processes and runs
    assert state_digest(GraphState.empty(4)) == state_digest(GraphState.empty(4))
    assert state_digest("A") != state_digest("B")


def test_state_dependent_policy_draws_from_pre_jump_state():
    # One state has a microscopically small mean sojourn; intervals spent in
    # it must be short, which pins the law to the occupied (pre-jump) state.
    fast, slow = Exponential(1000.0), Exponential(1.0)
    policy = StateDependentPolicy(lambda s: fast if s == "A" else slow)
    clock, chain = trajectory_streams(8, 0)
    tr = simulate(two_state_kernel(), policy, "A", 200.0, clock, chain)
    gaps = np.diff(np.concatenate([[0.0], tr.epochs.times]))
    occupied = ["A"] + list(tr.states[:-1])
    a_gaps = [g for g, s in zip(gaps, occupied) if s == "A"]
    b_gaps = [g for g, s in zip(gaps, occupied) if s == "B"]
    assert np.mean(a_gaps) < 0.01
    assert np.mean(b_gaps) > 0.3
