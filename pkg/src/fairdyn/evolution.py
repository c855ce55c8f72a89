"""Pool evolution: how a round's admissions move the mean parameter theta."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .policy import Thresholds, weighted_mean
from .pool import clip_mean

VARIANTS = ("pure", "order", "weighted", "role_model")


@dataclass(frozen=True)
class StepSchedule:
    kind: str = "fixed"
    eta: float = 0.5
    exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "decaying"):
            raise ValueError(f"evolution.step.kind must be 'fixed' or 'decaying', got {self.kind!r}")
        if not self.eta > 0:
            raise ValueError("evolution.step.eta must be positive")
        if self.kind == "decaying" and not 0.5 < self.exponent <= 1.0:
            raise ValueError("evolution.step.exponent must lie in (0.5, 1]")

    def __call__(self, t: int) -> float:
        if t < 0:
            raise ValueError("round index must be >= 0")
        if self.kind == "fixed":
            return self.eta
        return self.eta / (t + 1) ** self.exponent


def step_size(schedule: StepSchedule, t: int) -> float:
    return schedule(t)


@dataclass(frozen=True)
class EvolutionModel:
    variant: str = "pure"
    beta: float = 1.0
    weights: Optional[tuple] = None
    role_fraction: float = 1.0
    step: StepSchedule = field(default_factory=StepSchedule)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"evolution.variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.beta > 0:
            raise ValueError("evolution.beta must be positive")
        if self.variant == "weighted":
            if not self.weights or any(not z > 0 for z in self.weights):
                raise ValueError("evolution.weights must be a list of positive numbers")
        if not 0.0 < self.role_fraction <= 1.0:
            raise ValueError("evolution.role_fraction must lie in (0, 1]")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(z) for z in self.weights))


def feedback_signal(model: EvolutionModel, actions: Sequence[float], capacities: Sequence[float],
                    role_fractions: Optional[Sequence[float]] = None) -> float:
    """The admission statistic the pool reacts to this round."""
    if model.variant == "weighted":
        if len(model.weights) != len(actions):
            raise ValueError("evolution.weights length must match the number of institutions")
        return weighted_mean(actions, model.weights)
    if model.variant == "role_model":
        if role_fractions is None:
            raise ValueError("role-model evolution needs per-institution role-model fractions")
        return weighted_mean(role_fractions, capacities)
    return weighted_mean(actions, capacities)


def update_theta(model: EvolutionModel, theta: float, signal: float, s: float, t: int,
                 epsilon: float = 0.01) -> float:
    drift = signal - s
    if model.variant == "order":
        drift = math.copysign(abs(drift) ** model.beta, drift)
    return clip_mean(theta + model.step(t) * drift, epsilon)


def role_model_count(r: float, admits: int) -> int:
    # The small offset keeps products like 0.29 * 100 from flooring to 28.
    return int(math.floor(r * admits + 1e-9))


def role_model_fraction(minority_scores: Sequence[float], majority_scores: Sequence[float],
                        r: float, s: float) -> float:
    """Minority share of one institution's top ``floor(r * A)`` admits.

    Equal scores rank the majority applicant first. An institution with no
    role models returns ``s`` so that it exerts no drift.
    """
    x0 = np.asarray(minority_scores, dtype=float)
    x1 = np.asarray(majority_scores, dtype=float)
    n_admit = x0.size + x1.size
    n_role = role_model_count(r, n_admit)
    if n_role == 0:
        return s
    if n_role == n_admit:
        return x0.size / n_admit
    scores = np.concatenate([x0, x1])
    is_minority = np.concatenate([np.ones(x0.size, dtype=int), np.zeros(x1.size, dtype=int)])
    order = np.lexsort((is_minority, -scores))
    return int(is_minority[order[:n_role]].sum()) / n_role


def _mass_above(dist, t, lo, up):
    """P(max(t, lo) <= X <= up) for one group's law."""
    start = max(t, lo)
    if start >= up:
        return 0.0
    top = 1.0 if math.isinf(up) else float(dist.cdf(up))
    return max(top - float(dist.cdf(start)), 0.0)


def role_model_fraction_asymptotic(s: float, a: float, th: Thresholds, dists,
                                   capacity: float, r: float) -> float:
    """Role-model minority share under the threshold (large-pool) picture.

    The role-model cutoff is one score bar shared by both groups, set so that
    the admitted mass above it is ``r * capacity``.
    """
    if r >= 1.0:
        return a
    d0, d1 = dists

    def mass(t):
        return (s * _mass_above(d0, t, th.lower[0], th.upper[0])
                + (1.0 - s) * _mass_above(d1, t, th.lower[1], th.upper[1]))

    target = r * capacity
    lo = min(th.lower[0], th.lower[1])
    finite_up = [u for u in th.upper if math.isfinite(u)]
    hi = max(finite_up + [float(d0.inv_cdf(1 - 1e-15)), float(d1.inv_cdf(1 - 1e-15))])
    if not math.isfinite(lo):
        lo = min(float(d0.inv_cdf(1e-15)), float(d1.inv_cdf(1e-15)))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mass(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    t_r = 0.5 * (lo + hi)
    m0 = s * _mass_above(d0, t_r, th.lower[0], th.upper[0])
    m1 = (1.0 - s) * _mass_above(d1, t_r, th.lower[1], th.upper[1])
    if m0 + m1 <= 0.0:
        return s
    return m0 / (m0 + m1)
