from __future__ import annotations

import numpy as np
import pytest

from semigraph.interbank import (
    MICRO,
    AccountingError,
    BankBalanceSheet,
    ConfigError,
    EventRow,
    LoanGraph,
    MarketConfig,
    MarketState,
    allocate_amount,
    draw_weights,
    grant_corporate_loan,
    interbank_cascade,
    loan_graph_metrics,
    market_config_from_dict,
    micro_to_str,
    repay_due_loans,
    run_market,
    to_micro,
)
from semigraph.streams import substream


def make_config(m=3, ell=100.0, c=1000.0, d=800.0, **kw):
    base = dict(
        m=m,
        lam=1.0,
        ell=to_micro(ell),
        r_c=0.05,
        r_b=0.02,
        t_loan=10.0,
        horizon=50.0,
        seed=1,
        initial_c=tuple([to_micro(c)] * m),
        initial_d=tuple([to_micro(d)] * m),
    )
    base.update(kw)
    return MarketConfig(**base)


def fresh(cfg):
    state = MarketState.fresh(cfg)
    state.check_invariants()
    return state


def set_liquidity(state, bank, amount):
    delta = to_micro(amount) - state.sheets[bank].c
    state.sheets[bank].c += delta
    state.sheets[bank].e += delta


def test_micro_round_trip():
    assert to_micro(1.5) == 1_500_000
    assert micro_to_str(1_500_000) == "1.500000"
    assert micro_to_str(-25) == "-0.000025"
    assert to_micro(0.1) + to_micro(0.2) == to_micro(0.3)


def test_draw_weights():
    rng = substream(4, 0)
    assert draw_weights(1, rng).tolist() == [1.0]
    w = draw_weights(10, rng)
    assert abs(w.sum() - 1.0) < 1e-12
    assert (w >= 0).all()
    means = np.zeros(10)
    for _ in range(4000):
        means += draw_weights(10, rng)
    means /= 4000
    # symmetric Dirichlet: each component has mean 0.1, sd ~ 0.0905/sqrt(n)
    assert np.abs(means - 0.1).max() < 3 * 0.0905 / np.sqrt(4000)


def test_allocate_amount_exact():
    rng = substream(5, 0)
    for _ in range(200):
        m = int(rng.integers(1, 30))
        total = int(rng.integers(1, 10**9))
        parts = allocate_amount(total, draw_weights(m, rng))
        assert parts.sum() == total
        assert (parts >= 0).all()


def test_cascade_single_lender():
    cfg = make_config(m=3)
    state = fresh(cfg)
    legs, covered = interbank_cascade(state, to_micro(60.0), {0}, substream(1, 0))
    assert covered == to_micro(60.0)
    assert len(legs) == 1 and legs[0][1] == to_micro(60.0)


def test_cascade_partial_contributions():
    cfg = make_config(m=3)
    state = fresh(cfg)
    set_liquidity(state, 1, 30.0)
    set_liquidity(state, 2, 50.0)
    legs, covered = interbank_cascade(state, to_micro(60.0), {0}, substream(1, 3))
    assert covered == to_micro(60.0)
    # whichever order was drawn, the first contributes its full liquidity
    amounts = dict(legs)
    first = legs[0][0]
    assert amounts[first] == min(to_micro(30.0) if first == 1 else to_micro(50.0), to_micro(60.0))
    assert sum(amounts.values()) == to_micro(60.0)


def test_cascade_exhausted():
    cfg = make_config(m=3)
    state = fresh(cfg)
    for bank in (1, 2):
        set_liquidity(state, bank, 0.0)
    legs, covered = interbank_cascade(state, to_micro(60.0), {0}, substream(1, 1))
    assert covered == 0 and legs == []


def test_grant_direct_no_interbank_edge():
    cfg = make_config(m=4)
    state = fresh(cfg)
    record = grant_corporate_loan(state, 2, 1.0, substream(2, 0))
    state.check_invariants()
    assert record.own_contribution == cfg.ell and record.legs == ()
    assert state.graph.outstanding == {}
    assert state.sheets[2].l == cfg.ell
    assert state.sheets[2].b == 0


def test_grant_with_cascade_matches_table():
    # Borrower holds 40, loan is 100, single lender with 80: the borrower
    # ends with liquidity equal to its deposit inflow share, owes 60, and the
    # lender extends 60; nobody's equity moves.
    cfg = make_config(m=2, ell=100.0)
    state = fresh(cfg)
    set_liquidity(state, 0, 40.0)
    set_liquidity(state, 1, 80.0)
    equity_before = [s.e for s in state.sheets]
    record = grant_corporate_loan(state, 0, 1.0, substream(9, 0))
    state.check_invariants()
    assert record.own_contribution == to_micro(40.0)
    assert record.legs == ((1, to_micro(60.0)),)
    inflow_0 = state.sheets[0].d - to_micro(800.0)
    assert state.sheets[0].c == inflow_0  # C^i = omega_i * ell
    assert state.sheets[0].l == to_micro(100.0)
    assert state.sheets[0].b == to_micro(60.0)
    inflow_1 = state.sheets[1].d - to_micro(800.0)
    assert state.sheets[1].c == to_micro(80.0) - to_micro(60.0) + inflow_1
    assert state.sheets[1].ll == to_micro(60.0)
    assert inflow_0 + inflow_1 == to_micro(100.0)
    assert [s.e for s in state.sheets] == equity_before
    assert state.graph.outstanding == {(1, 0): to_micro(60.0)}


def test_grant_rejected_when_system_illiquid():
    cfg = make_config(m=2, ell=100.0)
    state = fresh(cfg)
    set_liquidity(state, 0, 10.0)
    set_liquidity(state, 1, 20.0)
    sheets_before = [BankBalanceSheet(**vars(s)) for s in state.sheets]
    out = grant_corporate_loan(state, 0, 1.0, substream(3, 0))
    assert out is None
    assert state.rejected_illiquid == 1
    assert [vars(s) for s in state.sheets] == [vars(s) for s in sheets_before]
    assert state.events[-1].kind == "system-illiquid"


def test_repay_equity_deltas_match_interest_formulas():
    cfg = make_config(m=2, ell=100.0)
    state = fresh(cfg)
    set_liquidity(state, 0, 40.0)
    set_liquidity(state, 1, 80.0)
    record = grant_corporate_loan(state, 0, 1.0, substream(9, 0))
    e_before = [s.e for s in state.sheets]
    repay_due_loans(state, record.due_at, record, substream(9, 1))
    state.check_invariants()
    # Delta E_i = (r_C - r_B) ell + r_B C_i(before) = 0.03*100 + 0.02*40
    assert state.sheets[0].e - e_before[0] == to_micro(0.03 * 100.0) + to_micro(0.02 * 40.0)
    # Delta E_j = r_B (ell - C_i(before)) = 0.02 * 60
    assert state.sheets[1].e - e_before[1] == to_micro(0.02 * 60.0)
    assert state.graph.outstanding == {}
    assert state.sheets[0].l == 0 and state.sheets[0].b == 0
    assert state.sheets[1].ll == 0


def test_repay_total_equity_gain_is_corporate_interest():
    cfg = make_config(m=5, ell=100.0)
    state = fresh(cfg)
    set_liquidity(state, 3, 15.0)
    record = grant_corporate_loan(state, 3, 2.0, substream(12, 0))
    total_before = sum(s.e for s in state.sheets)
    repay_due_loans(state, record.due_at, record, substream(12, 1))
    assert sum(s.e for s in state.sheets) - total_before == cfg.corporate_interest


def test_no_loans_due_is_a_no_op():
    cfg = make_config()
    out = run_market(make_config(horizon=0.0001), record_series=False)
    assert out.grants == 0 and out.repayments == 0 and out.total_events == 0


def test_run_market_event_count_poisson():
    counts = []
    for seed in range(300):
        cfg = make_config(m=3, horizon=20.0, t_loan=1000.0, seed=seed)
        counts.append(run_market(cfg, record_series=False).grants)
    counts = np.array(counts)
    lam_t = 20.0
    assert abs(counts.mean() - lam_t) < 3 * np.sqrt(lam_t / len(counts))


def test_run_market_invariants_and_series():
    cfg = make_config(m=5, horizon=60.0, seed=42)
    out = run_market(cfg)
    assert out.total_events == out.grants + out.repayments + out.rejected_illiquid
    assert out.grants > 20
    assert out.repayments > 10
    assert out.clipped_banks == 0
    # every flow nets out inside the system: total liquidity is invariant
    assert sum(s.c for s in out.final_sheets) == sum(cfg.initial_c)
    # deposits grow by ell per grant and shrink by the gross repayment
    expected_d = (
        sum(cfg.initial_d)
        + out.grants * cfg.ell
        - out.repayments * (cfg.ell + cfg.corporate_interest)
    )
    assert sum(s.d for s in out.final_sheets) == expected_d
    # total equity grows by exactly the corporate interest per repayment
    start_e = sum(c - d for c, d in zip(cfg.initial_c, cfg.initial_d))
    assert sum(s.e for s in out.final_sheets) == start_e + out.repayments * cfg.corporate_interest
    # sheet rows: one per bank per event
    assert len(out.sheet_rows) == out.total_events * cfg.m


def test_run_market_deterministic():
    cfg = make_config(m=4, horizon=40.0, seed=7)
    a = run_market(cfg)
    b = run_market(cfg)
    assert a.events == b.events
    assert a.sheet_rows == b.sheet_rows
    assert a.graph_rows == b.graph_rows


def test_run_market_with_mittag_leffler_clock():
    cfg = make_config(m=3, horizon=30.0, clock={"law": "mittag-leffler", "beta": 0.9})
    out = run_market(cfg, record_series=False)
    assert out.total_events == out.grants + out.repayments + out.rejected_illiquid
    assert out.grants > 0


def test_edge_lifecycle_mutual_and_reduction():
    g = LoanGraph(3)
    g.add(1, 0, 500)
    g.add(0, 1, 300)  # opposite directions coexist
    assert (1, 0) in g.outstanding and (0, 1) in g.outstanding
    g.add(1, 0, 200)
    g.reduce(1, 0, 500)
    assert g.outstanding[(1, 0)] == 200  # newer loan keeps the edge alive
    g.reduce(1, 0, 200)
    assert (1, 0) not in g.outstanding
    with pytest.raises(AccountingError):
        g.reduce(0, 1, 400)


def test_loan_graph_metrics():
    g = LoanGraph(4)
    assert loan_graph_metrics(g)["edge_count"] == 0
    g.add(1, 0, 700)
    m = loan_graph_metrics(g)
    assert m["edge_count"] == 1
    assert m["out_degrees"][1] == 1
    g.add(0, 1, 900)
    m = loan_graph_metrics(g)
    assert m["edge_count"] == 2
    assert frozenset({0, 1}) in m["strongly_connected_components"]


def test_market_config_validation():
    good = {
        "m": 3, "lambda": 1.0, "ell": 100.0, "r_c": 0.05, "r_b": 0.02,
        "t_loan": 10.0, "horizon": 50.0, "seed": 1, "initial": {"c": 1000, "d": 800},
    }
    cfg = market_config_from_dict(good)
    assert cfg.m == 3 and cfg.ell == to_micro(100.0)
    for key in good:
        broken = dict(good)
        del broken[key]
        with pytest.raises(ConfigError, match=key):
            market_config_from_dict(broken)
    with pytest.raises(ConfigError, match="rates"):
        market_config_from_dict({**good, "r_c": 0.02, "r_b": 0.05})
    with pytest.raises(ConfigError, match="initial"):
        market_config_from_dict({**good, "initial": [{"c": 1, "d": 1}]})
    with pytest.raises(ConfigError, match="unknown"):
        market_config_from_dict({**good, "bonus": 1})
    per_bank = [{"c": 100 * (i + 1), "d": 50} for i in range(3)]
    cfg = market_config_from_dict({**good, "initial": per_bank})
    assert cfg.initial_c == (to_micro(100), to_micro(200), to_micro(300))


def test_drain_clipping_keeps_balances_nonnegative():
    # A single bank with zero initial deposits cannot absorb the full gross
    # repayment (deposits only ever hold the principal), so every repayment
    # clips the corporate-interest part of the drain.
    cfg = make_config(m=1, ell=100.0, horizon=7.0, t_loan=2.0, seed=3,
                      initial_c=(to_micro(1000.0),), initial_d=(0,))
    out = run_market(cfg, record_series=False)
    assert out.repayments > 0
    assert out.clipped_banks >= 1
    clip_rows = [e for e in out.events if e.kind == "negative-balance-clip"]
    assert len(clip_rows) == out.clipped_banks
    assert all(e.amount > 0 for e in clip_rows)
    for s in out.final_sheets:
        assert s.c >= 0 and s.d >= 0
        assert s.e == s.residual_equity()
