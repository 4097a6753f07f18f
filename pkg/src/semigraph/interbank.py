"""Interbank market driven by corporate loan requests arriving at renewal
epochs: lending cascades, deposit redistribution, scheduled repayments with
interest, balance-sheet accounting, and the induced directed loan graph.

All currency amounts are integers in micro-units (10^-6 of the currency
unit), so every accounting identity is checked exactly.  Interest and weight
applications round half-even to micro-units at posting time; weighted
allocations of a total use cumulative rounding, which preserves the total
exactly.

Equity is posted independently through its own delta rules (zero at grant
time, the interest formulas at repayment time) and the residual identity
E = C + L + LL - D - B is then verified after every event, which is the
double-entry self-check of the implementation.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graphs import (
    GraphMode,
    GraphState,
    connected_components,
    degree_sequence,
    edge_count,
)
from .renewal import Exponential, MittagLeffler, law_from_config
from .streams import substream

__all__ = [
    "MICRO",
    "to_micro",
    "micro_to_str",
    "AccountingError",
    "ConfigError",
    "BankBalanceSheet",
    "MarketConfig",
    "market_config_from_dict",
    "LoanRecord",
    "LoanGraph",
    "EventRow",
    "MarketState",
    "MarketRun",
    "draw_weights",
    "allocate_amount",
    "interbank_cascade",
    "grant_corporate_loan",
    "repay_due_loans",
    "run_market",
    "loan_graph_metrics",
]

MICRO = 10**6

GRANT = "grant"
INTERBANK_LEG = "interbank-loan"
REPAY = "repay"
INTERBANK_REPAY = "interbank-repay"
SYSTEM_ILLIQUID = "system-illiquid"
NEGATIVE_BALANCE = "negative-balance-clip"


class AccountingError(RuntimeError):
    """An exact balance-sheet invariant failed; indicates a bug."""


class ConfigError(ValueError):
    """Market configuration violates its schema; message names the field."""


def to_micro(x: float) -> int:
    """Round a currency amount half-even into integer micro-units."""
    return round(float(x) * MICRO)


def micro_to_str(v: int) -> str:
    sign = "-" if v < 0 else ""
    q, r = divmod(abs(int(v)), MICRO)
    return f"{sign}{q}.{r:06d}"


@dataclass
class BankBalanceSheet:
    """Six balance-sheet entries of one bank, in micro-units: liquidity,
    corporate loans outstanding, interbank loans extended, deposits,
    interbank debt, equity."""

    c: int
    l: int
    ll: int
    d: int
    b: int
    e: int

    def residual_equity(self) -> int:
        return self.c + self.l + self.ll - self.d - self.b

    def check(self, bank: int) -> None:
        if self.e != self.residual_equity():
            raise AccountingError(
                f"bank {bank}: posted equity {self.e} != residual {self.residual_equity()}"
            )
        for name in ("c", "l", "ll", "d", "b"):
            if getattr(self, name) < 0:
                raise AccountingError(f"bank {bank}: {name} went negative")


@dataclass(frozen=True)
class MarketConfig:
    m: int
    lam: float
    ell: int  # micro-units
    r_c: float
    r_b: float
    t_loan: float
    horizon: float
    seed: int
    initial_c: tuple  # per-bank micro-units
    initial_d: tuple
    clock: Optional[dict] = None  # sojourn-law config overriding the Poisson clock

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError("m: need at least one bank")
        if not self.lam > 0:
            raise ConfigError("lambda: request rate must be positive")
        if self.ell <= 0:
            raise ConfigError("ell: loan size must be positive")
        if not (self.r_c > self.r_b > 0):
            raise ConfigError("rates: must satisfy r_c > r_b > 0")
        if not self.t_loan > 0:
            raise ConfigError("t_loan: loan duration must be positive")
        if not self.horizon > 0:
            raise ConfigError("horizon: must be positive")
        if len(self.initial_c) != self.m or len(self.initial_d) != self.m:
            raise ConfigError("initial: need one (c, d) pair per bank")
        if any(x < 0 for x in self.initial_c) or any(x < 0 for x in self.initial_d):
            raise ConfigError("initial: balances must be nonnegative")

    @property
    def corporate_interest(self) -> int:
        return to_micro(self.r_c * self.ell / MICRO)


def market_config_from_dict(obj: dict) -> MarketConfig:
    """Validate a config mapping; error messages carry the offending field."""
    if not isinstance(obj, dict):
        raise ConfigError("config root must be an object")
    required = ["m", "lambda", "ell", "r_c", "r_b", "t_loan", "horizon", "seed", "initial"]
    for key in required:
        if key not in obj:
            raise ConfigError(f"{key}: missing required field")
    known = set(required) | {"clock"}
    for key in obj:
        if key not in known:
            raise ConfigError(f"{key}: unknown field")
    m = obj["m"]
    if not isinstance(m, int) or isinstance(m, bool):
        raise ConfigError("m: must be an integer")
    initial = obj["initial"]
    if isinstance(initial, dict):
        entries = [initial] * m
    elif isinstance(initial, list):
        if len(initial) != m:
            raise ConfigError(f"initial: expected {m} entries, got {len(initial)}")
        entries = initial
    else:
        raise ConfigError("initial: must be an object or a list of objects")
    cs, ds = [], []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "c" not in entry or "d" not in entry:
            raise ConfigError(f"initial[{i}]: needs numeric fields c and d")
        cs.append(to_micro(entry["c"]))
        ds.append(to_micro(entry["d"]))
    clock = obj.get("clock")
    if clock is not None:
        law_from_config(clock)  # validate; stored as plain dict
    return MarketConfig(
        m=m,
        lam=float(obj["lambda"]),
        ell=to_micro(obj["ell"]),
        r_c=float(obj["r_c"]),
        r_b=float(obj["r_b"]),
        t_loan=float(obj["t_loan"]),
        horizon=float(obj["horizon"]),
        seed=int(obj["seed"]),
        initial_c=tuple(cs),
        initial_d=tuple(ds),
        clock=clock,
    )


@dataclass(frozen=True)
class LoanRecord:
    """One corporate loan and the interbank legs that funded it."""

    borrower: int
    principal: int
    own_contribution: int
    legs: tuple  # ((lender, amount), ...)
    granted_at: float
    due_at: float


class LoanGraph:
    """Outstanding interbank principal, keyed (lender, borrower).

    An edge exists exactly while some principal is unrepaid in its
    direction; weights are the outstanding totals.
    """

    def __init__(self, m: int) -> None:
        self.m = m
        self.outstanding: dict[tuple[int, int], int] = {}

    def add(self, lender: int, borrower: int, amount: int) -> None:
        key = (lender, borrower)
        self.outstanding[key] = self.outstanding.get(key, 0) + amount

    def reduce(self, lender: int, borrower: int, amount: int) -> None:
        key = (lender, borrower)
        left = self.outstanding.get(key, 0) - amount
        if left < 0:
            raise AccountingError(f"repaying more than outstanding on edge {key}")
        if left == 0:
            self.outstanding.pop(key, None)
        else:
            self.outstanding[key] = left

    def total(self) -> int:
        return sum(self.outstanding.values())

    def to_graph_state(self) -> GraphState:
        a = np.zeros((self.m, self.m))
        for (j, i), w in self.outstanding.items():
            a[j, i] = w / MICRO
        return GraphState(GraphMode.WEIGHTED_DIRECTED, a)

    def binarized(self) -> GraphState:
        a = np.zeros((self.m, self.m), dtype=int)
        for (j, i) in self.outstanding:
            a[j, i] = 1
        return GraphState(GraphMode.DIRECTED, a)


@dataclass(frozen=True)
class EventRow:
    time: float
    kind: str
    bank_i: int  # borrower / affected bank; -1 when not applicable
    bank_j: int  # lender; -1 when not applicable
    amount: int  # micro-units


@dataclass
class MarketState:
    config: MarketConfig
    sheets: list
    graph: LoanGraph
    time: float = 0.0
    events: list = field(default_factory=list)
    pending: list = field(default_factory=list)  # heap of (due_at, seq, LoanRecord)
    seq: int = 0
    grants: int = 0
    repayments: int = 0
    rejected_illiquid: int = 0
    clipped_banks: int = 0

    @classmethod
    def fresh(cls, cfg: MarketConfig) -> "MarketState":
        sheets = [
            BankBalanceSheet(c=c, l=0, ll=0, d=d, b=0, e=c - d)
            for c, d in zip(cfg.initial_c, cfg.initial_d)
        ]
        return cls(config=cfg, sheets=sheets, graph=LoanGraph(cfg.m))

    def check_invariants(self) -> None:
        for bank, sheet in enumerate(self.sheets):
            sheet.check(bank)
        total_ll = sum(s.ll for s in self.sheets)
        total_b = sum(s.b for s in self.sheets)
        if total_ll != total_b:
            raise AccountingError(f"sum(LL)={total_ll} != sum(B)={total_b}")
        if self.graph.total() != total_ll:
            raise AccountingError("loan graph weights disagree with balance sheets")


def draw_weights(m: int, rng: np.random.Generator) -> np.ndarray:
    """Flat-Dirichlet weights: normalized i.i.d. exponentials, sum 1."""
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1:
        rng.standard_exponential(1)  # keep stream consumption uniform in m
        return np.array([1.0])
    w = rng.standard_exponential(m)
    return w / w.sum()


def allocate_amount(total: int, weights: np.ndarray) -> np.ndarray:
    """Split an integer amount by weights with cumulative rounding: parts are
    nonnegative and sum to the total exactly."""
    cum = np.round(np.cumsum(weights) / weights.sum() * total).astype(np.int64)
    parts = np.diff(np.concatenate([[0], cum]))
    parts[-1] += total - cum[-1]  # guard against a final rounding ulp
    return parts


def interbank_cascade(
    state: MarketState, shortfall: int, exclude: set, rng: np.random.Generator
) -> tuple[list, int]:
    """Select lenders uniformly without replacement until the shortfall is
    covered; every selected bank contributes min(its liquidity, residual).

    Returns (legs, covered); covered < shortfall means the candidate pool
    was exhausted without raising the full amount.
    """
    if shortfall <= 0:
        raise ValueError("shortfall must be positive")
    candidates = [b for b in range(state.config.m) if b not in exclude]
    legs: list[tuple[int, int]] = []
    residual = shortfall
    while residual > 0 and candidates:
        pick = candidates.pop(int(rng.integers(0, len(candidates))))
        amount = min(state.sheets[pick].c, residual)
        if amount > 0:
            legs.append((pick, amount))
            residual -= amount
    return legs, shortfall - residual


def grant_corporate_loan(
    state: MarketState, borrower: int, t: float, rng: np.random.Generator
) -> Optional[LoanRecord]:
    """Process one corporate loan request at time t.

    The borrower lends from its own liquidity and covers any shortfall
    through the interbank cascade; the spent loan then flows back into the
    system as deposits split by fresh random weights.  Equity of every bank
    is unchanged.  Returns None (and logs) when the system cannot raise the
    shortfall; the request is then rejected entirely.
    """
    cfg = state.config
    sheets = state.sheets
    ell = cfg.ell
    own = min(sheets[borrower].c, ell)
    shortfall = ell - own
    legs: list[tuple[int, int]] = []
    if shortfall > 0:
        legs, covered = interbank_cascade(state, shortfall, {borrower}, rng)
        if covered < shortfall:
            state.rejected_illiquid += 1
            state.events.append(EventRow(t, SYSTEM_ILLIQUID, borrower, -1, shortfall))
            return None

    equity_before = [s.e for s in sheets]
    inflow = allocate_amount(ell, draw_weights(cfg.m, rng))
    for bank, amount in enumerate(inflow):
        sheets[bank].c += int(amount)
        sheets[bank].d += int(amount)
    sheets[borrower].c -= own
    sheets[borrower].l += ell
    sheets[borrower].b += shortfall
    for lender, amount in legs:
        sheets[lender].c -= amount
        sheets[lender].ll += amount
        state.graph.add(lender, borrower, amount)
        state.events.append(EventRow(t, INTERBANK_LEG, borrower, lender, amount))

    for bank, sheet in enumerate(sheets):
        if sheet.e != equity_before[bank]:
            raise AccountingError(f"grant changed equity of bank {bank}")

    record = LoanRecord(
        borrower=borrower,
        principal=ell,
        own_contribution=own,
        legs=tuple(legs),
        granted_at=t,
        due_at=t + cfg.t_loan,
    )
    heapq.heappush(state.pending, (record.due_at, state.seq, record))
    state.seq += 1
    state.grants += 1
    state.events.append(EventRow(t, GRANT, borrower, -1, ell))
    return record


def _drain_deposits(state: MarketState, total: int, t: float, rng: np.random.Generator) -> None:
    """Remove `total` from deposits and liquidity across banks with freshly
    drawn weights; redraw up to 100 times if some bank cannot absorb its
    share, then clip (the unabsorbed remainder stays with the corporate
    sector and is logged)."""
    sheets = state.sheets
    reduction = None
    for _ in range(100):
        candidate = allocate_amount(total, draw_weights(state.config.m, rng))
        if all(
            candidate[b] <= sheets[b].c and candidate[b] <= sheets[b].d
            for b in range(state.config.m)
        ):
            reduction = candidate
            break
    if reduction is None:
        reduction = candidate
        for b in range(state.config.m):
            allowed = min(int(reduction[b]), sheets[b].c, sheets[b].d)
            if allowed < reduction[b]:
                state.clipped_banks += 1
                state.events.append(
                    EventRow(t, NEGATIVE_BALANCE, b, -1, int(reduction[b]) - allowed)
                )
                reduction[b] = allowed
    for b in range(state.config.m):
        sheets[b].c -= int(reduction[b])
        sheets[b].d -= int(reduction[b])


def repay_due_loans(state: MarketState, t: float, record: LoanRecord,
                    rng: np.random.Generator) -> None:
    """Repay one corporate loan and its interbank legs at its due time.

    The borrower receives principal plus corporate interest, repays every
    lender its principal plus interbank interest, and the gross corporate
    repayment drains deposits (and liquidity) across all banks by fresh
    weights.  Equity deltas are exactly the posted interest amounts:
    corporate interest minus interbank interest paid for the borrower, the
    received interbank interest for each lender.
    """
    cfg = state.config
    sheets = state.sheets
    i = record.borrower
    cr_interest = cfg.corporate_interest

    sheets[i].c += record.principal + cr_interest
    sheets[i].l -= record.principal
    interbank_interest_paid = 0
    for lender, amount in record.legs:
        ib_interest = to_micro(cfg.r_b * amount / MICRO)
        interbank_interest_paid += ib_interest
        sheets[i].c -= amount + ib_interest
        sheets[i].b -= amount
        sheets[lender].c += amount + ib_interest
        sheets[lender].ll -= amount
        sheets[lender].e += ib_interest
        state.graph.reduce(lender, i, amount)
        state.events.append(EventRow(t, INTERBANK_REPAY, i, lender, amount + ib_interest))
    sheets[i].e += cr_interest - interbank_interest_paid

    _drain_deposits(state, record.principal + cr_interest, t, rng)
    state.repayments += 1
    state.events.append(EventRow(t, REPAY, i, -1, record.principal + cr_interest))


@dataclass(frozen=True)
class MarketRun:
    config: MarketConfig
    final_sheets: list
    events: list
    sheet_rows: list  # (time, bank, c, l, ll, d, b, e) after every event
    graph_rows: list  # (time, lender, borrower, outstanding) after every event
    grants: int
    repayments: int
    rejected_illiquid: int
    clipped_banks: int
    total_events: int


def run_market(cfg: MarketConfig, record_series: bool = True) -> MarketRun:
    """Event loop over the merged timeline of loan requests and scheduled
    repayments (ties process repayments first).  Every event is followed by
    an exact invariant check."""
    state = MarketState.fresh(cfg)
    rng = substream(cfg.seed, 0)
    gap_law = law_from_config(cfg.clock) if cfg.clock else Exponential(cfg.lam)

    sheet_rows: list = []
    graph_rows: list = []

    def snapshot(t: float) -> None:
        if not record_series:
            return
        for bank, s in enumerate(state.sheets):
            sheet_rows.append((t, bank, s.c, s.l, s.ll, s.d, s.b, s.e))
        for (j, i), w in sorted(state.graph.outstanding.items()):
            graph_rows.append((t, j, i, w))

    state.check_invariants()
    total_events = 0
    next_request = float(gap_law.sample_n(rng, 1)[0])
    while True:
        due = state.pending[0][0] if state.pending else math.inf
        t = min(due, next_request)
        if t > cfg.horizon:
            break
        if due <= next_request:  # ties: repayments first
            _, _, record = heapq.heappop(state.pending)
            repay_due_loans(state, due, record, rng)
        else:
            borrower = int(rng.integers(0, cfg.m))
            grant_corporate_loan(state, borrower, next_request, rng)
            next_request += float(gap_law.sample_n(rng, 1)[0])
        state.time = t
        state.check_invariants()
        snapshot(t)
        total_events += 1

    return MarketRun(
        config=cfg,
        final_sheets=state.sheets,
        events=state.events,
        sheet_rows=sheet_rows,
        graph_rows=graph_rows,
        grants=state.grants,
        repayments=state.repayments,
        rejected_illiquid=state.rejected_illiquid,
        clipped_banks=state.clipped_banks,
        total_events=total_events,
    )


def loan_graph_metrics(graph: LoanGraph) -> dict:
    """Graph functionals of the binarized (outstanding > 0) loan network."""
    g = graph.binarized()
    return {
        "edge_count": edge_count(g),
        "out_degrees": degree_sequence(g).tolist(),
        "in_degrees": g.a.sum(axis=0).tolist(),
        "strongly_connected_components": connected_components(g),
    }
