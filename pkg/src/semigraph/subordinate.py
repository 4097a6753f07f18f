"""Subordination of a Markov chain to a renewal counting process: the jump
process Y(t) = X_{N(t)}, with globally i.i.d. or state-dependent sojourn
times, stopping-time evaluation, and the stochastic-matrix utilities used by
the two-state demonstration chain.

Chain randomness and clock randomness always come from separate streams
(see :mod:`semigraph.streams`), which realizes the independence of the chain
from the counting process by construction.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from typing import Callable, Generic, Optional, TypeVar, Union

import numpy as np

from .graphs import GraphState, connected_components, contains_triangle, edge_count
from .renewal import EpochSequence, SojournLaw, count_at
from .streams import trajectory_streams

S = TypeVar("S")

__all__ = [
    "TransitionKernel",
    "MatrixKernel",
    "GlobalPolicy",
    "StateDependentPolicy",
    "SojournPolicy",
    "TrajectoryRecord",
    "simulate",
    "state_at",
    "StoppingResult",
    "stopping_time",
    "chapman_kolmogorov_check",
    "marginal_at_step",
    "trajectory_streams",
    "state_digest",
    "trajectory_to_csv",
    "TRAJECTORY_FUNCTIONALS",
]

TransitionKernel = Callable[[S, np.random.Generator], S]

MATRIX_KERNEL_MAX_STATES = 4096


def _check_stochastic(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("transition matrix must be square")
    if (p < 0).any():
        raise ValueError("transition probabilities must be nonnegative")
    if np.abs(p.sum(axis=1) - 1.0).max() > 1e-12:
        raise ValueError("every row must sum to 1 within 1e-12")
    return p


class MatrixKernel(Generic[S]):
    """Explicit stochastic-matrix kernel over an enumerated state space.

    Only sensible for small spaces; refuses more than 4096 states (graph
    state spaces explode immediately, use a procedural kernel there).
    """

    def __init__(self, p, states) -> None:
        p = _check_stochastic(p)
        states = tuple(states)
        if len(states) != p.shape[0]:
            raise ValueError("state enumeration must match the matrix dimension")
        if len(states) > MATRIX_KERNEL_MAX_STATES:
            raise ValueError(f"explicit kernels capped at {MATRIX_KERNEL_MAX_STATES} states")
        self.p = p
        self.states = states
        self._index = {s: i for i, s in enumerate(states)}
        self._cum = np.cumsum(p, axis=1)

    def __call__(self, state: S, rng: np.random.Generator) -> S:
        i = self._index[state]
        j = int(np.searchsorted(self._cum[i], rng.random(), side="right"))
        return self.states[min(j, len(self.states) - 1)]


@dataclass(frozen=True)
class GlobalPolicy:
    """One sojourn law shared by every state (i.i.d. renewal clock)."""

    law: SojournLaw

    def law_for(self, state) -> SojournLaw:
        return self.law


@dataclass(frozen=True)
class StateDependentPolicy:
    """Sojourn law chosen by the state occupied during the interval (the
    pre-jump state)."""

    rule: Callable[[object], SojournLaw]

    def law_for(self, state) -> SojournLaw:
        return self.rule(state)


SojournPolicy = Union[GlobalPolicy, StateDependentPolicy]


@dataclass(frozen=True)
class TrajectoryRecord(Generic[S]):
    """One subordinated run: states X_1..X_n at epochs T_1..T_n, plus the
    time-zero state so Y(t) is defined on all of [0, horizon]."""

    initial_state: S
    states: tuple
    epochs: EpochSequence
    horizon: float

    def __post_init__(self) -> None:
        if len(self.states) != len(self.epochs):
            raise ValueError("need exactly one state per epoch")


def simulate(
    kernel: TransitionKernel,
    policy: SojournPolicy,
    initial: S,
    horizon: float,
    clock_rng: np.random.Generator,
    chain_rng: np.random.Generator,
) -> TrajectoryRecord:
    """Run the subordinated chain on [0, horizon].

    Each sojourn J_n is drawn from the law of the state occupied during
    [T_{n-1}, T_n); the transition at T_n is then drawn from the kernel.
    The first epoch past the horizon is discarded.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    t = 0.0
    state = initial
    times: list[float] = []
    states: list[S] = []
    while True:
        law = policy.law_for(state)
        j = float(law.sample_n(clock_rng, 1)[0])
        if t + j > horizon:
            break
        t += j
        state = kernel(state, chain_rng)
        times.append(t)
        states.append(state)
    return TrajectoryRecord(
        initial_state=initial,
        states=tuple(states),
        epochs=EpochSequence(times=np.asarray(times), horizon=float(horizon)),
        horizon=float(horizon),
    )


def state_at(tr: TrajectoryRecord, t: float):
    """Y(t) = X_{N(t)}: right-continuous lookup, the state at an epoch is the
    post-jump state; index 0 means the initial state."""
    if t < 0 or t > tr.horizon:
        raise ValueError(f"t={t} outside [0, {tr.horizon}]")
    n = count_at(tr.epochs, t)
    return tr.initial_state if n == 0 else tr.states[n - 1]


@dataclass(frozen=True)
class StoppingResult:
    """First epoch whose state satisfies the predicate.

    ``stopped`` is False when the transition budget ran out first; ``time``
    is then None and ``transitions`` holds the spent budget.  A predicate
    already true at the initial state stops at time 0 with 0 transitions.
    """

    time: Optional[float]
    transitions: int
    stopped: bool


def stopping_time(
    kernel: TransitionKernel,
    policy: SojournPolicy,
    initial: S,
    predicate: Callable[[S], bool],
    max_transitions: int,
    clock_rng: np.random.Generator,
    chain_rng: np.random.Generator,
) -> StoppingResult:
    if max_transitions < 1:
        raise ValueError("max_transitions must be positive")
    if predicate(initial):
        return StoppingResult(time=0.0, transitions=0, stopped=True)
    t = 0.0
    state = initial
    for n in range(1, max_transitions + 1):
        law = policy.law_for(state)
        t += float(law.sample_n(clock_rng, 1)[0])
        state = kernel(state, chain_rng)
        if predicate(state):
            return StoppingResult(time=t, transitions=n, stopped=True)
    return StoppingResult(time=None, transitions=max_transitions, stopped=False)


def state_digest(state) -> str:
    """Stable short digest of a state (process-independent, unlike hash())."""
    if isinstance(state, GraphState):
        payload = b"graph:" + state.mode.value.encode() + state.a.tobytes()
    else:
        payload = repr(state).encode()
    return hashlib.sha256(payload).hexdigest()[:12]


TRAJECTORY_FUNCTIONALS = {
    "edges": edge_count,
    "components": lambda g: len(connected_components(g)),
    "triangle": lambda g: int(contains_triangle(g)),
}


def trajectory_to_csv(tr: TrajectoryRecord, fh, functionals: tuple[str, ...] = ()) -> None:
    """Dump a trajectory: one row per transition with columns
    n, t_n, state_hash, plus one column per requested per-step functional
    (graph states only: any of "edges", "components", "triangle")."""
    unknown = [f for f in functionals if f not in TRAJECTORY_FUNCTIONALS]
    if unknown:
        raise ValueError(f"unknown functionals {unknown}; choose from "
                         f"{sorted(TRAJECTORY_FUNCTIONALS)}")
    writer = csv.writer(fh)
    writer.writerow(["n", "t_n", "state_hash", *functionals])
    for n, (t, state) in enumerate(zip(tr.epochs.times, tr.states), start=1):
        extras = [TRAJECTORY_FUNCTIONALS[f](state) for f in functionals]
        writer.writerow([n, format(float(t), ".17g"), state_digest(state), *extras])


def chapman_kolmogorov_check(p: np.ndarray, m: int, r: int) -> float:
    """Max entrywise deviation of P^(m+r) from P^m P^r."""
    p = _check_stochastic(p)
    if m < 1 or r < 1:
        raise ValueError("m and r must be positive integers")
    lhs = np.linalg.matrix_power(p, m + r)
    rhs = np.linalg.matrix_power(p, m) @ np.linalg.matrix_power(p, r)
    return float(np.abs(lhs - rhs).max())


def marginal_at_step(p0: np.ndarray, p: np.ndarray, m: int) -> np.ndarray:
    """Distribution of X_m: p0 P^(m-1); m = 1 returns p0 itself."""
    p = _check_stochastic(p)
    p0 = np.asarray(p0, dtype=float)
    if p0.ndim != 1 or len(p0) != p.shape[0]:
        raise ValueError("p0 must be a row vector matching the matrix dimension")
    if (p0 < 0).any() or abs(p0.sum() - 1.0) > 1e-12:
        raise ValueError("p0 must be a probability vector")
    if m < 1:
        raise ValueError("m must be a positive integer")
    return p0 @ np.linalg.matrix_power(p, m - 1)
