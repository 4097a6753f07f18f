"""Renewal processes: sojourn laws, event epochs, counting processes, and the
closed-form Poisson/Erlang oracles plus Monte Carlo checks of the renewal
function and the first renewal equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol, Union, runtime_checkable

import numpy as np
from scipy.special import gammainc

from .mittag import MLParams, ml_sample_n, ml_survival, ml_survival_vec
from .streams import substream

__all__ = [
    "SojournLaw",
    "Exponential",
    "MittagLeffler",
    "law_from_config",
    "EpochSequence",
    "generate_epochs",
    "count_at",
    "poisson_pmf",
    "erlang_cdf",
    "RenewalEstimate",
    "estimate_renewal_function",
    "verify_first_renewal_equation",
]


@runtime_checkable
class SojournLaw(Protocol):
    """A positive sojourn-time distribution: sampling plus survival."""

    @property
    def mean(self) -> Optional[float]: ...

    def survival(self, t: float) -> float: ...

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray: ...


@dataclass(frozen=True)
class Exponential:
    """Exponential sojourns with the given rate (events per unit time)."""

    rate: float

    def __post_init__(self) -> None:
        if math.isnan(self.rate) or not self.rate > 0.0:
            raise ValueError(f"rate must be positive, got {self.rate!r}")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def survival(self, t: float) -> float:
        if t < 0:
            raise ValueError("t must be nonnegative")
        return math.exp(-self.rate * t)

    def density(self, t: float) -> float:
        if t < 0:
            raise ValueError("t must be nonnegative")
        return self.rate * math.exp(-self.rate * t)

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_exponential(n) / self.rate

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.sample_n(rng, 1)[0])


@dataclass(frozen=True)
class MittagLeffler:
    """Mittag-Leffler sojourns; infinite mean whenever beta < 1."""

    params: MLParams

    @property
    def mean(self) -> Optional[float]:
        # Absent (None) for the heavy-tailed regime.
        return self.params.scale if self.params.beta == 1.0 else None

    def survival(self, t: float) -> float:
        return ml_survival(self.params, t)

    def survival_vec(self, t: np.ndarray) -> np.ndarray:
        return ml_survival_vec(self.params, t)

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return ml_sample_n(self.params, rng, n)

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.sample_n(rng, 1)[0])


LawLike = Union[Exponential, MittagLeffler]


def law_from_config(cfg: dict) -> LawLike:
    """Parse {"law": "exponential", "rate": r} or
    {"law": "mittag-leffler", "beta": b, "scale": s}."""
    kind = cfg.get("law")
    if kind == "exponential":
        return Exponential(rate=float(cfg["rate"]))
    if kind == "mittag-leffler":
        return MittagLeffler(MLParams(beta=float(cfg["beta"]), scale=float(cfg.get("scale", 1.0))))
    raise ValueError(f"unknown sojourn law {kind!r}")


@dataclass(frozen=True)
class EpochSequence:
    """Strictly increasing event epochs on [0, horizon]."""

    times: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        t.setflags(write=False)
        if t.ndim != 1:
            raise ValueError("epochs must form a 1-d array")
        if len(t) and (t[0] <= 0 or (np.diff(t) <= 0).any()):
            raise ValueError("epochs must be strictly increasing and positive")
        if len(t) and t[-1] > self.horizon:
            raise ValueError("epochs beyond the generation horizon")
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return len(self.times)


def generate_epochs(
    law: SojournLaw, horizon: float, rng: np.random.Generator
) -> EpochSequence:
    """Accumulate sojourns until the running sum first exceeds the horizon;
    the exceeding epoch is discarded.  An empty sequence is valid (the first
    sojourn may already overshoot)."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    parts = []
    total = 0.0
    chunk = 64
    while True:
        js = law.sample_n(rng, chunk)
        cum = total + np.cumsum(js)
        over = np.nonzero(cum > horizon)[0]
        if len(over):
            parts.append(cum[: over[0]])
            break
        parts.append(cum)
        total = float(cum[-1])
        chunk = min(2 * chunk, 65536)
    times = np.concatenate(parts) if parts else np.empty(0)
    return EpochSequence(times=times, horizon=float(horizon))


def count_at(es: EpochSequence, t: float) -> int:
    """N(t): number of epochs at or before t (the boundary is inclusive)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t > es.horizon:
        raise ValueError(f"t={t} beyond horizon {es.horizon}: count would be censored")
    return int(np.searchsorted(es.times, t, side="right"))


def poisson_pmf(lam: float, n: int, t: float) -> float:
    """P(N(t) = n) for the Poisson counting process: exp(-lam t)(lam t)^n/n!."""
    if lam <= 0 or t <= 0:
        raise ValueError("lam and t must be positive")
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = lam * t
    return math.exp(n * math.log(x) - x - math.lgamma(n + 1)) if n else math.exp(-x)


def erlang_cdf(lam: float, n: int, t: float) -> float:
    """P(T_n <= t): the n-fold exponential convolution (Erlang/Gamma CDF),
    evaluated as the regularized lower incomplete gamma function."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if n < 1:
        raise ValueError("n must be a positive integer")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    return float(gammainc(n, lam * t))


@dataclass(frozen=True)
class RenewalEstimate:
    """Monte Carlo estimate of the renewal function on a grid."""

    t: np.ndarray
    h_hat: np.ndarray
    stderr: np.ndarray


def estimate_renewal_function(
    law: SojournLaw,
    t_grid: np.ndarray,
    reps: int,
    master_seed: int,
) -> RenewalEstimate:
    """Average N(t) over independent replications on a common grid.

    Replication r draws its epochs from the stream keyed by
    (master_seed, r), so estimates are reproducible and order-independent.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if (np.diff(t_grid) < 0).any():
        raise ValueError("t_grid must be nondecreasing")
    if reps < 1:
        raise ValueError("reps must be positive")
    horizon = float(t_grid[-1]) if len(t_grid) else 0.0
    if horizon <= 0:
        raise ValueError("grid must reach past zero")
    acc = np.zeros(len(t_grid))
    acc2 = np.zeros(len(t_grid))
    for r in range(reps):
        es = generate_epochs(law, horizon, substream(master_seed, r))
        counts = np.searchsorted(es.times, t_grid, side="right")
        acc += counts
        acc2 += counts.astype(float) ** 2
    h_hat = acc / reps
    var = np.maximum(acc2 / reps - h_hat**2, 0.0)
    stderr = np.sqrt(var / reps)
    return RenewalEstimate(t=t_grid, h_hat=h_hat, stderr=stderr)


def verify_first_renewal_equation(
    law: Exponential,
    t_grid: np.ndarray,
    reps: int,
    master_seed: int,
) -> float:
    """Max absolute residual of H(t) = 1 - Psi(t) + int_0^t H(t-u) psi(u) du
    with H estimated by Monte Carlo and the convolution done by trapezoidal
    quadrature on the (uniform) grid.  Exponential sojourns only: the check
    needs the closed-form density."""
    if not isinstance(law, Exponential):
        raise ValueError("the renewal-equation check supports exponential sojourns only")
    t_grid = np.asarray(t_grid, dtype=float)
    steps = np.diff(t_grid)
    if len(t_grid) < 3 or t_grid[0] != 0.0 or not np.allclose(steps, steps[0]):
        raise ValueError("need a uniform grid starting at 0")
    h = float(steps[0])
    est = estimate_renewal_function(law, t_grid, reps, master_seed)
    hh = est.h_hat
    psi = law.rate * np.exp(-law.rate * t_grid)
    surv = np.exp(-law.rate * t_grid)
    conv = np.convolve(hh, psi)[: len(t_grid)] * h
    # trapezoid end-point correction of the rectangle convolution
    conv -= 0.5 * h * (hh * psi[0] + hh[0] * psi)
    rhs = 1.0 - surv + conv
    resid = np.abs(hh - rhs)
    return float(resid.max())
