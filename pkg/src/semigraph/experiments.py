"""Stopping-time experiments on graph dynamics and the two-state
(non-)ergodicity demonstration.

Example A ("triangle"): starting from the empty simple graph, toggle a
uniformly chosen unordered vertex pair at every transition; stop when the
graph first contains a triangle.

Example B ("info-spread"): vertex 1 holds a piece of information.  At every
transition an informed vertex (uniform over the connected component of
vertex 1) picks a target uniformly among the other M-1 vertices and the edge
between them is added if absent (nothing happens if it already exists, but
the transition still spends a sojourn time); stop when the whole graph is
connected.

Replication r of an experiment draws its chain from the stream keyed by
(master_seed, r, chain) and its clock from (master_seed, r, clock), so runs
are reproducible for any worker count.  The clock block for a replication is
drawn in one batch after the chain reaches the stopping predicate; transition
counts are therefore stream-exact against the generic per-step simulator,
while individual sojourn values pair the underlying uniforms differently.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .graphs import GraphMode, GraphState, connected_components
from .mittag import MLParams
from .renewal import Exponential, MittagLeffler, SojournLaw
from .streams import CHAIN_STREAM, CLOCK_STREAM, substream
from .subordinate import marginal_at_step

__all__ = [
    "EXAMPLE_TRIANGLE",
    "EXAMPLE_INFO_SPREAD",
    "TWO_STATE_MATRIX",
    "ExperimentConfig",
    "SummaryStats",
    "ExperimentResult",
    "kernel_example_a",
    "kernel_example_b",
    "run_experiment",
    "scan_beta",
    "scan_m",
    "ErgodicityResult",
    "ergodicity_experiment",
]

EXAMPLE_TRIANGLE = "triangle"
EXAMPLE_INFO_SPREAD = "info-spread"

# Transition matrix of the two-state demonstration chain; its invariant
# measure is uniform.
TWO_STATE_MATRIX = np.array([[0.1, 0.9], [0.9, 0.1]])


@dataclass(frozen=True)
class ExperimentConfig:
    example: str
    m: int
    law: SojournLaw
    reps: int
    master_seed: int
    max_transitions: int = 1_000_000

    def __post_init__(self) -> None:
        if self.example not in (EXAMPLE_TRIANGLE, EXAMPLE_INFO_SPREAD):
            raise ValueError(f"unknown example {self.example!r}")
        min_m = 3 if self.example == EXAMPLE_TRIANGLE else 2
        if self.m < min_m:
            raise ValueError(f"{self.example} needs at least {min_m} vertices, got {self.m}")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if self.max_transitions < 1:
            raise ValueError("max_transitions must be positive")


@dataclass(frozen=True)
class SummaryStats:
    """Six-number summary over the uncensored stopping times."""

    minimum: float
    q1: float
    median: float
    mean: float
    q3: float
    maximum: float
    censored_count: int

    @classmethod
    def from_samples(cls, values: np.ndarray, censored_count: int = 0) -> "SummaryStats":
        values = np.asarray(values, dtype=float)
        if len(values) == 0:
            raise ValueError("no uncensored samples to summarize")
        # quartiles by linear interpolation at positions 1 + (n-1)p
        q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0])
        stats = cls(
            minimum=float(values.min()),
            q1=float(q1),
            median=float(med),
            mean=float(values.mean()),
            q3=float(q3),
            maximum=float(values.max()),
            censored_count=int(censored_count),
        )
        assert stats.minimum <= stats.q1 <= stats.median <= stats.q3 <= stats.maximum
        assert stats.minimum <= stats.mean <= stats.maximum
        return stats

    def as_row(self) -> tuple[float, float, float, float, float, float]:
        return (self.minimum, self.q1, self.median, self.mean, self.q3, self.maximum)

    def format_line(self) -> str:
        header = f"{'Min.':>11}{'1st Qu.':>11}{'Median':>11}{'Mean':>11}{'3rd Qu.':>11}{'Max.':>11}"
        vals = "".join(f"{v:>11.4g}" for v in self.as_row())
        return header + "\n" + vals


def _pairs(m: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


class EdgeToggleKernel:
    """Example A transition rule on simple undirected graph states.

    Consumes one integer draw per step: the index of the unordered non-loop
    pair to toggle, uniform over the m(m-1)/2 pairs.
    """

    def __init__(self, m: int) -> None:
        if m < 3:
            raise ValueError("need at least 3 vertices")
        self.m = m
        self.pairs = _pairs(m)

    def __call__(self, state: GraphState, rng: np.random.Generator) -> GraphState:
        if state.m != self.m or state.mode is not GraphMode.UNDIRECTED_SIMPLE:
            raise ValueError("state does not match the kernel's space")
        i, j = self.pairs[int(rng.integers(0, len(self.pairs)))]
        return state.with_pair_toggled(i, j)


class InfoSpreadKernel:
    """Example B transition rule on simple undirected graph states.

    Consumes two integer draws per step: the index of the informed chooser
    within the sorted connected component of vertex 0, then the index of the
    target among the other m-1 vertices.  An already-present edge leaves the
    graph unchanged.
    """

    def __init__(self, m: int) -> None:
        if m < 2:
            raise ValueError("need at least 2 vertices")
        self.m = m

    def __call__(self, state: GraphState, rng: np.random.Generator) -> GraphState:
        if state.m != self.m or state.mode is not GraphMode.UNDIRECTED_SIMPLE:
            raise ValueError("state does not match the kernel's space")
        component = next(p for p in connected_components(state) if 0 in p)
        informed = sorted(component)
        chooser = informed[int(rng.integers(0, len(informed)))]
        t = int(rng.integers(0, self.m - 1))
        target = t if t < chooser else t + 1
        return state.with_edge_added(chooser, target)


def kernel_example_a(m: int) -> EdgeToggleKernel:
    return EdgeToggleKernel(m)


def kernel_example_b(m: int) -> InfoSpreadKernel:
    return InfoSpreadKernel(m)


def triangle_transitions(m: int, chain_rng: np.random.Generator, cap: int) -> int:
    """Transitions until the toggling walk from the empty graph first holds a
    triangle; -1 if the cap is hit.  Stream-exact with
    ``stopping_time(kernel_example_a(m), ...)``."""
    pairs = _pairs(m)
    n_pairs = len(pairs)
    adj = [0] * m  # neighbor bitmasks; the walk stays triangle-free until it stops
    steps = 0
    while steps < cap:
        i, j = pairs[int(chain_rng.integers(0, n_pairs))]
        steps += 1
        if (adj[i] >> j) & 1:
            adj[i] ^= 1 << j
            adj[j] ^= 1 << i
        else:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
            if adj[i] & adj[j]:
                return steps
    return -1


def spread_transitions(m: int, chain_rng: np.random.Generator, cap: int) -> int:
    """Transitions until the information graph is connected; -1 on cap."""
    if m == 1:
        return 0
    informed = [0]
    member = bytearray(m)
    member[0] = 1
    adj = [0] * m
    steps = 0
    while steps < cap:
        chooser = informed[int(chain_rng.integers(0, len(informed)))]
        t = int(chain_rng.integers(0, m - 1))
        target = t if t < chooser else t + 1
        steps += 1
        if not (adj[chooser] >> target) & 1:
            adj[chooser] |= 1 << target
            adj[target] |= 1 << chooser
            if not member[target]:
                member[target] = 1
                # keep the list sorted: selection must match the generic
                # kernel, which draws from the sorted component
                lo, hi = 0, len(informed)
                while lo < hi:
                    mid = (lo + hi) // 2
                    if informed[mid] < target:
                        lo = mid + 1
                    else:
                        hi = mid
                informed.insert(lo, target)
                if len(informed) == m:
                    return steps
    return -1


_ENGINES = {EXAMPLE_TRIANGLE: triangle_transitions, EXAMPLE_INFO_SPREAD: spread_transitions}


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    stopping_times: np.ndarray  # NaN where censored
    transitions: np.ndarray  # spent budget where censored
    censored: np.ndarray  # bool
    summary: Optional[SummaryStats]  # None when every replication censored


def _replicate(cfg: ExperimentConfig, rep: int) -> tuple[float, int, bool]:
    engine = _ENGINES[cfg.example]
    chain = substream(cfg.master_seed, rep, CHAIN_STREAM)
    k = engine(cfg.m, chain, cfg.max_transitions)
    if k < 0:
        return float("nan"), cfg.max_transitions, True
    clock = substream(cfg.master_seed, rep, CLOCK_STREAM)
    t = float(cfg.law.sample_n(clock, k).sum())
    return t, k, False


def _chunk(cfg: ExperimentConfig, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    times = np.empty(hi - lo)
    trans = np.empty(hi - lo, dtype=np.int64)
    cens = np.zeros(hi - lo, dtype=bool)
    for r in range(lo, hi):
        times[r - lo], trans[r - lo], cens[r - lo] = _replicate(cfg, r)
    return times, trans, cens


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Independent replications of the configured stopping-time experiment.

    Output is identical for every ``threads`` value: replication r is fully
    determined by (master_seed, r).
    """
    if threads < 1:
        raise ValueError("threads must be positive")
    if threads == 1 or cfg.reps < 256:
        times, trans, cens = _chunk(cfg, 0, cfg.reps)
    else:
        bounds = np.linspace(0, cfg.reps, 4 * threads + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_chunk, *zip(*[(cfg, int(lo), int(hi))
                                                 for lo, hi in zip(bounds, bounds[1:])
                                                 if hi > lo])))
        times = np.concatenate([p[0] for p in parts])
        trans = np.concatenate([p[1] for p in parts])
        cens = np.concatenate([p[2] for p in parts])
    n_censored = int(cens.sum())
    summary = (
        SummaryStats.from_samples(times[~cens], censored_count=n_censored)
        if n_censored < cfg.reps
        else None
    )
    return ExperimentResult(
        config=cfg, stopping_times=times, transitions=trans, censored=cens, summary=summary
    )


def scan_beta(cfg: ExperimentConfig, betas, threads: int = 1) -> list[tuple[float, SummaryStats]]:
    """One summary row per beta, same vertex count and master seed (the chain
    streams coincide across rows, so the rows differ only through the clock)."""
    scale = cfg.law.params.scale if isinstance(cfg.law, MittagLeffler) else 1.0
    rows = []
    for beta in betas:
        law = MittagLeffler(MLParams(beta=float(beta), scale=scale))
        res = run_experiment(replace(cfg, law=law), threads=threads)
        rows.append((float(beta), res.summary))
    return rows


def scan_m(cfg: ExperimentConfig, ms, threads: int = 1) -> list[tuple[int, SummaryStats]]:
    """One summary row per vertex count, fixed law and master seed."""
    rows = []
    for m in ms:
        res = run_experiment(replace(cfg, m=int(m)), threads=threads)
        rows.append((int(m), res.summary))
    return rows


@dataclass(frozen=True)
class ErgodicityResult:
    """Time average versus ensemble measure for the two-state chain with
    state-dependent exponential clocks.

    ``time_fraction_a`` is the occupation fraction of state A along one long
    path.  ``ensemble`` is the distribution of the chain state observed at
    the ``ensemble_transition``-th event across independent paths, which
    estimates the chain's invariant (ensemble) measure.  ``occupation_at``
    is the distribution of Y at a fixed clock time across paths: for unequal
    rates it converges to the sojourn-weighted law, not to the invariant
    measure, and the gap between it (or ``time_fraction_a``) and ``ensemble``
    is the non-ergodicity signal.  ``marginal`` is the analytic chain
    marginal p0 P^(ensemble_transition - 1) started from A.
    """

    time_fraction_a: float
    ensemble: np.ndarray
    ensemble_transition: int
    occupation_at: np.ndarray
    occupation_horizon: float
    marginal: np.ndarray
    long_path_transitions: int


def _two_state_blocks(master_seed: int, traj: int, n: int, lambda_a: float, lambda_b: float):
    """States occupying the first n intervals and the n sojourns, by block.

    Interval k (0-based) is occupied by the state after k transitions; its
    sojourn is drawn from that state's exponential law.
    """
    chain = substream(master_seed, traj, CHAIN_STREAM)
    clock = substream(master_seed, traj, CLOCK_STREAM)
    flips = chain.random(n) >= TWO_STATE_MATRIX[0, 0]  # exit probability 0.9
    states = np.zeros(n, dtype=np.int64)
    states[1:] = np.cumsum(flips[:-1]) % 2
    rates = np.where(states == 0, lambda_a, lambda_b)
    sojourns = clock.standard_exponential(n) / rates
    return states, sojourns


def ergodicity_experiment(
    lambda_a: float,
    lambda_b: float,
    horizon: float,
    reps: int,
    master_seed: int,
    ensemble_transition: int = 50,
    occupation_horizon: Optional[float] = None,
) -> ErgodicityResult:
    """Run the two-state demonstration: one long path for the time average,
    an ensemble of paths for the invariant measure, and the Y-at-fixed-time
    histogram showing the sojourn-weighted law."""
    if min(lambda_a, lambda_b) <= 0:
        raise ValueError("rates must be positive")
    if horizon <= 10.0 / min(lambda_a, lambda_b):
        raise ValueError("horizon too short for a meaningful time average")
    if occupation_horizon is None:
        occupation_horizon = min(horizon, 100.0)

    # Long path (transition counts beyond any plausible need are grown on
    # demand); trajectory id `reps` keeps it off the ensemble streams.
    n_guess = int(3 * horizon * max(lambda_a, lambda_b)) + 64
    states, sojourns = _two_state_blocks(master_seed, reps, n_guess, lambda_a, lambda_b)
    epochs = np.cumsum(sojourns)
    while epochs[-1] <= horizon:  # pragma: no cover - guess is generous
        n_guess *= 2
        states, sojourns = _two_state_blocks(master_seed, reps, n_guess, lambda_a, lambda_b)
        epochs = np.cumsum(sojourns)
    n_long = int(np.searchsorted(epochs, horizon, side="right"))
    in_a = states[:n_long] == 0
    occ = float(sojourns[:n_long][in_a].sum())
    if states[n_long] == 0:  # partial final interval
        occ += float(horizon - (epochs[n_long - 1] if n_long else 0.0))
    time_fraction_a = occ / horizon

    # Ensemble of independent paths.
    n_block = max(ensemble_transition + 1,
                  int(3 * occupation_horizon * max(lambda_a, lambda_b)) + 64)
    at_event = np.empty(reps, dtype=np.int64)
    at_time = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        states, sojourns = _two_state_blocks(master_seed, r, n_block, lambda_a, lambda_b)
        epochs = np.cumsum(sojourns)
        if epochs[ensemble_transition - 1] > horizon:
            raise RuntimeError("path did not reach the observation transition in time")
        # X_m in the chain's own indexing (X_1 = initial state): the state
        # after ensemble_transition - 1 jumps, with law p0 P^(m-1)
        at_event[r] = states[ensemble_transition - 1]
        k = int(np.searchsorted(epochs, occupation_horizon, side="right"))
        at_time[r] = states[min(k, n_block - 1)]
    ensemble = np.array([(at_event == 0).mean(), (at_event == 1).mean()])
    occupation = np.array([(at_time == 0).mean(), (at_time == 1).mean()])
    marginal = marginal_at_step(np.array([1.0, 0.0]), TWO_STATE_MATRIX, ensemble_transition)
    return ErgodicityResult(
        time_fraction_a=time_fraction_a,
        ensemble=ensemble,
        ensemble_transition=ensemble_transition,
        occupation_at=occupation,
        occupation_horizon=float(occupation_horizon),
        marginal=marginal,
        long_path_transitions=n_long,
    )
