"""Hoeffding-type tail bounds for the empirical rejection rate.

The rejection indicator of a fresh sample is Bernoulli with the population
rate, so the empirical rate over n samples concentrates at speed
2 exp(-2 n eps^2). Values are returned un-clamped; anything above 1 is a
vacuous bound and callers should label it as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ConcentrationQuery:
    n_train: int
    epsilon_1: float
    n_test: int | None = None
    epsilon_2: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.n_train < 1:
            raise ValueError("n_train must be >= 1")
        if self.epsilon_1 <= 0:
            raise ValueError("epsilon_1 must be > 0")
        if self.n_test is not None and self.n_test < 1:
            raise ValueError("n_test must be >= 1")
        if self.epsilon_2 is not None and self.epsilon_2 <= 0:
            raise ValueError("epsilon_2 must be > 0")
        if self.delta is not None and not (0.0 < self.delta < 1.0):
            raise ValueError("delta must be in (0,1)")


def train_bound(n: int, epsilon: float) -> float:
    """P(|empirical - population rate| >= eps) <= 2 exp(-2 n eps^2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    return 2.0 * math.exp(-2.0 * n * epsilon * epsilon)


def train_test_bound(n_train: int, n_test: int, eps1: float, eps2: float) -> float:
    """Union bound across the train and test deviations: the rates differ by
    at least eps1 + eps2 with probability at most the sum of the two tails."""
    return train_bound(n_train, eps1) + train_bound(n_test, eps2)


def epsilon_for_confidence(n: int, delta: float) -> float:
    """Smallest eps with 2 exp(-2 n eps^2) <= delta: sqrt(ln(2/delta) / (2 n))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must be in (0,1)")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def bounds_table(n: int, epsilons) -> list[dict]:
    """Rows of (n, eps, bound, vacuous) for reporting."""
    rows = []
    for eps in epsilons:
        b = train_bound(n, eps)
        rows.append({"n": n, "epsilon": eps, "bound": b, "vacuous": b > 1.0})
    return rows
