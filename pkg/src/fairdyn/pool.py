"""Applicant pool: Poisson group counts around the mean parameter theta."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PoolConfig:
    expected_total: int = 400
    clip_epsilon: float = 0.01
    fixed_total: bool = True
    theta0: float = 0.25

    def __post_init__(self):
        if self.expected_total < 1:
            raise ValueError("pool.expected_total must be >= 1")
        if not 0.0 < self.clip_epsilon < 0.5:
            raise ValueError("pool.clip_epsilon must lie in (0, 0.5)")
        if not 0.0 <= self.theta0 <= 1.0:
            raise ValueError("pool.theta0 must lie in [0, 1]")


@dataclass(frozen=True)
class PoolState:
    theta: float
    n_minority: int
    n_majority: int

    @property
    def total(self) -> int:
        return self.n_minority + self.n_majority

    @property
    def empty(self) -> bool:
        return self.total == 0

    @property
    def state(self) -> float:
        """Realized minority fraction; NaN for an empty pool."""
        if self.empty:
            return math.nan
        return self.n_minority / self.total


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def clip_mean(theta_raw: float, epsilon: float = 0.01) -> float:
    return min(1.0 - epsilon, max(epsilon, theta_raw))


def sample_pool(theta: float, config: PoolConfig, rng: np.random.Generator) -> PoolState:
    n0 = int(rng.poisson(theta * config.expected_total))
    n1 = int(rng.poisson((1.0 - theta) * config.expected_total))
    if not config.fixed_total or n0 + n1 == 0:
        return PoolState(theta, n0, n1)
    # Keep the drawn composition, rescale the pool to the nominal size.
    total = config.expected_total
    m0 = round_half_up(n0 / (n0 + n1) * total)
    return PoolState(theta, m0, total - m0)
