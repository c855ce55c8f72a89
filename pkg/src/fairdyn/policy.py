"""Selection policies for K rank-ordered institutions.

Institutions are passed as a rank-ordered sequence (index 0 is the top
institution). Each institution picks the fraction ``a`` of its admits drawn
from the minority group (group 0), choosing from what higher-ranked
institutions left behind.

Two engines are provided:

* asymptotic: group score laws stand in for the realized scores, so an
  institution's admits are the slice of each group's law between a lower and
  an upper threshold. Rewards are integrals of the quantile function.
* empirical: the realized, finite pool of scores. Each institution admits
  ``A_k = round(c_k * N_t)`` applicants and chooses an integer minority count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import ScoreDistribution

_EDGE_TOL = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Institution:
    capacity: float
    fairness_weight: float = 0.0

    def __post_init__(self):
        if not self.capacity > 0.0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if not self.fairness_weight >= 0.0:
            raise ValueError(f"fairness weight must be >= 0, got {self.fairness_weight}")


def check_institutions(institutions: Sequence[Institution]) -> None:
    if len(institutions) == 0:
        raise ValueError("need at least one institution")
    total = sum(inst.capacity for inst in institutions)
    if not total < 1.0:
        raise ValueError(f"capacities must sum to less than 1, got {total}")


@dataclass(frozen=True)
class ActionProfile:
    actions: tuple
    feasible_intervals: tuple
    capacities: tuple

    @property
    def empty(self) -> bool:
        return len(self.actions) == 0

    @property
    def weighted(self) -> float:
        """Capacity-weighted action (the minority share of all admits)."""
        return weighted_mean(self.actions, self.capacities)


@dataclass(frozen=True)
class Thresholds:
    """Score cutoffs of one institution: ``lower[g] <= X^g <= upper[g]``."""

    lower: tuple
    upper: tuple


def weighted_mean(values: Sequence[float], weights: Sequence[float]) -> float:
    num = 0.0
    den = 0.0
    for v, w in zip(values, weights):
        if math.isnan(v):
            continue
        num += w * v
        den += w
    return num / den if den > 0 else math.nan


def prior_mass(prior_actions: Sequence[float], capacities: Sequence[float]) -> tuple:
    """Mass of each group already admitted by higher-ranked institutions."""
    cb0 = 0.0
    cb1 = 0.0
    for a, c in zip(prior_actions, capacities):
        cb0 += c * a
        cb1 += c * (1.0 - a)
    return cb0, cb1


def feasible_interval(s: float, capacities: Sequence[float],
                      prior_actions: Sequence[float] = ()) -> tuple:
    """Feasible actions of institution ``len(prior_actions)``."""
    k = len(prior_actions)
    c = capacities[k]
    cb0, cb1 = prior_mass(prior_actions, capacities)
    rem0 = s - cb0
    rem1 = 1.0 - s - cb1
    if rem0 < -1e-9 or rem1 < -1e-9:
        raise ValueError("prior actions exceed the available group mass")
    lo = max(0.0, 1.0 - rem1 / c)
    hi = min(1.0, rem0 / c)
    hi = max(hi, 0.0)
    return min(lo, hi), hi


def _slice_quantiles(s, a, prior_actions, capacities):
    """CDF levels (u_lo, u_up) of the admitted slice for each group."""
    k = len(prior_actions)
    c = capacities[k]
    cb0, cb1 = prior_mass(prior_actions, capacities)
    a = np.asarray(a, dtype=float)
    if s > 0.0:
        u0_up = 1.0 - cb0 / s
        u0_lo = 1.0 - (cb0 + a * c) / s
    else:
        u0_up = 1.0
        u0_lo = np.ones_like(a)
    if s < 1.0:
        u1_up = 1.0 - cb1 / (1.0 - s)
        u1_lo = 1.0 - (cb1 + (1.0 - a) * c) / (1.0 - s)
    else:
        u1_up = 1.0
        u1_lo = np.ones_like(a)
    for u in (u0_lo, u1_lo, u0_up, u1_up):
        if np.any(np.asarray(u) < -_EDGE_TOL) or np.any(np.asarray(u) > 1.0 + _EDGE_TOL):
            raise ValueError("action is infeasible: cumulative demand exceeds group mass")
    clip = lambda u: np.clip(u, 0.0, 1.0)
    return clip(u0_lo), clip(u0_up), clip(u1_lo), clip(u1_up)


def thresholds(s: float, a: float, prior_actions: Sequence[float],
               dists: Sequence[ScoreDistribution], capacities: Sequence[float]) -> Thresholds:
    """Group-specific score cutoffs of institution ``len(prior_actions)``.

    A group with no mass in the pool gets ``(inf, inf)``.
    """
    u0_lo, u0_up, u1_lo, u1_up = _slice_quantiles(s, a, prior_actions, capacities)
    d0, d1 = dists
    if s > 0.0:
        t0 = (float(d0.inv_cdf(u0_lo)), float(d0.inv_cdf(u0_up)))
    else:
        t0 = (math.inf, math.inf)
    if s < 1.0:
        t1 = (float(d1.inv_cdf(u1_lo)), float(d1.inv_cdf(u1_up)))
    else:
        t1 = (math.inf, math.inf)
    return Thresholds(lower=(t0[0], t1[0]), upper=(t0[1], t1[1]))


def threshold_set(s: float, actions: Sequence[float], dists, capacities) -> list:
    return [thresholds(s, a, actions[:k], dists, capacities) for k, a in enumerate(actions)]


def score_reward_asymptotic(s: float, a, prior_actions: Sequence[float],
                            dists: Sequence[ScoreDistribution], capacities: Sequence[float]):
    """Mean admitted score of institution ``len(prior_actions)`` at action ``a``.

    Accepts a scalar or an array of actions.
    """
    k = len(prior_actions)
    c = capacities[k]
    u0_lo, u0_up, u1_lo, u1_up = _slice_quantiles(s, a, prior_actions, capacities)
    d0, d1 = dists
    out = 0.0
    if s > 0.0:
        out = out + s * d0.quantile_integral(u0_lo, u0_up)
    if s < 1.0:
        out = out + (1.0 - s) * d1.quantile_integral(u1_lo, u1_up)
    out = np.asarray(out, dtype=float) / c
    return float(out) if out.ndim == 0 else out


def reward_derivative(s, a, prior_actions, dists, capacities) -> float:
    """d reward / d a, the gap between the two lower thresholds."""
    th = thresholds(s, a, prior_actions, dists, capacities)
    return th.lower[0] - th.lower[1]


def fairness_loss(a, alpha: float):
    return (a - alpha) ** 2


def utility(s, a, prior_actions, dists, institutions: Sequence[Institution], alpha: float):
    k = len(prior_actions)
    caps = [inst.capacity for inst in institutions]
    lam = institutions[k].fairness_weight
    return score_reward_asymptotic(s, a, prior_actions, dists, caps) - lam * fairness_loss(a, alpha)


def fairness_optimal_action(s: float, prior_actions, capacities, alpha: float) -> float:
    lo, hi = feasible_interval(s, capacities, prior_actions)
    return min(max(alpha, lo), hi)


def _identical(dists) -> bool:
    return dists[0] == dists[1]


def _bisect_decreasing(g, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Root of a non-increasing function on [lo, hi], clamped to the ends."""
    if hi - lo <= tol:
        return lo
    if not g(lo) > 0.0:
        return lo
    if not g(hi) < 0.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def reward_optimal_action(s: float, prior_actions, dists, capacities) -> float:
    """Action maximizing the score reward alone.

    With identical group laws the optimum has a closed form; otherwise the
    two lower thresholds are equalized by bisection on the reward derivative.
    """
    lo, hi = feasible_interval(s, capacities, prior_actions)
    if _identical(dists):
        k = len(prior_actions)
        raw = s + sum(c * (s - p) for c, p in zip(capacities[:k], prior_actions)) / capacities[k]
        return min(max(raw, lo), hi)
    g = lambda a: reward_derivative(s, a, prior_actions, dists, capacities)
    return _bisect_decreasing(g, lo, hi)


def reward_optimal_unprojected(s: float, prior_actions, capacities) -> float:
    """Closed-form reward optimum before projection onto the feasible set."""
    k = len(prior_actions)
    return s + sum(c * (s - p) for c, p in zip(capacities[:k], prior_actions)) / capacities[k]


def best_response(s, prior_actions, dists, institutions, alpha) -> float:
    """Utility-maximizing action of institution ``len(prior_actions)``."""
    k = len(prior_actions)
    caps = [inst.capacity for inst in institutions]
    lam = institutions[k].fairness_weight
    lo, hi = feasible_interval(s, caps, prior_actions)

    def g(a):
        return reward_derivative(s, a, prior_actions, dists, caps) - 2.0 * lam * (a - alpha)

    return _bisect_decreasing(g, lo, hi)


def mfg_policy(s: float, dists, institutions: Sequence[Institution], alpha: float) -> ActionProfile:
    """Sequential fair-greedy profile: each rank best-responds to those above it."""
    caps = tuple(inst.capacity for inst in institutions)
    if s is None or math.isnan(s):
        return ActionProfile((), (), caps)
    actions: list = []
    intervals: list = []
    for _ in institutions:
        intervals.append(feasible_interval(s, caps, actions))
        actions.append(best_response(s, actions, dists, institutions, alpha))
    return ActionProfile(tuple(actions), tuple(intervals), caps)


def total_utility(s: float, actions, dists, institutions, alpha: float):
    """Sum of utilities; ``actions`` has shape (..., K)."""
    A = np.asarray(actions, dtype=float)
    caps = [inst.capacity for inst in institutions]
    d0, d1 = dists
    cb0 = np.zeros(A.shape[:-1])
    cb1 = np.zeros(A.shape[:-1])
    total = np.zeros(A.shape[:-1])
    for k, inst in enumerate(institutions):
        c = inst.capacity
        a = A[..., k]
        if s > 0.0:
            u0_up = np.clip(1.0 - cb0 / s, 0.0, 1.0)
            u0_lo = np.clip(1.0 - (cb0 + a * c) / s, 0.0, 1.0)
            total = total + s * d0.quantile_integral(u0_lo, u0_up) / c
        if s < 1.0:
            u1_up = np.clip(1.0 - cb1 / (1.0 - s), 0.0, 1.0)
            u1_lo = np.clip(1.0 - (cb1 + (1.0 - a) * c) / (1.0 - s), 0.0, 1.0)
            total = total + (1.0 - s) * d1.quantile_integral(u1_lo, u1_up) / c
        total = total - inst.fairness_weight * (a - alpha) ** 2
        cb0 = cb0 + c * a
        cb1 = cb1 + c * (1.0 - a)
    return total


def _joint_range(s, caps, actions, k) -> tuple:
    """Range of a_k keeping both group budgets, the others held fixed."""
    c = caps[k]
    other0 = sum(caps[j] * actions[j] for j in range(len(caps)) if j != k)
    other1 = sum(caps[j] * (1.0 - actions[j]) for j in range(len(caps)) if j != k)
    lo = max(0.0, 1.0 - (1.0 - s - other1) / c)
    hi = min(1.0, (s - other0) / c)
    return min(lo, max(hi, 0.0)), max(hi, 0.0)


def grid_golden_argmax(f, lo: float, hi: float, alpha: float,
                       step: float = 1e-3, tol: float = 1e-6) -> float:
    """Maximize ``f`` on [lo, hi]: grid search, then golden-section refinement.

    ``f`` must accept an array. Ties on the grid go to the point closest to
    ``alpha``, then to the smallest.
    """
    if hi - lo <= tol:
        return lo
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    grid = np.linspace(lo, hi, n)
    vals = np.asarray(f(grid), dtype=float)
    best = np.max(vals)
    near = np.flatnonzero(vals >= best - 1e-12 * max(1.0, abs(best)))
    i = near[np.argmin(np.abs(grid[near] - alpha))]
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    fx = lambda x: float(np.asarray(f(np.array([x])))[0])
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fx(x1), fx(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fx(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fx(x2)
    x = 0.5 * (a + b)
    return x if fx(x) >= vals[i] else float(grid[i])


def _sequential_profile(s, caps, pick) -> list:
    actions: list = []
    for _ in caps:
        lo, hi = feasible_interval(s, caps, actions)
        actions.append(pick(lo, hi))
    return actions


def cmfg_policy(s: float, dists, institutions: Sequence[Institution], alpha: float,
                max_sweeps: int = 50) -> ActionProfile:
    """Centralized profile maximizing the summed utility.

    Multi-start coordinate ascent; each coordinate move is a grid search over
    the range allowed by the joint group budgets, refined by golden section.
    """
    caps = tuple(inst.capacity for inst in institutions)
    if s is None or math.isnan(s):
        return ActionProfile((), (), caps)
    mfg = mfg_policy(s, dists, institutions, alpha)
    if len(institutions) == 1:
        return mfg
    starts = [
        list(mfg.actions),
        [s] * len(caps),
        _sequential_profile(s, caps, lambda lo, hi: min(max(alpha, lo), hi)),
        _sequential_profile(s, caps, lambda lo, hi: hi),
        _sequential_profile(s, caps, lambda lo, hi: lo),
    ]
    best_actions, best_val = None, -math.inf
    for start in starts:
        actions = list(start)
        val = float(total_utility(s, actions, dists, institutions, alpha))
        for _ in range(max_sweeps):
            prev = val
            for k in range(len(caps)):
                lo, hi = _joint_range(s, caps, actions, k)

                def f(grid, k=k):
                    trial = np.tile(np.asarray(actions, dtype=float), (len(grid), 1))
                    trial[:, k] = grid
                    return total_utility(s, trial, dists, institutions, alpha)

                cand = grid_golden_argmax(f, lo, hi, alpha)
                cand_val = float(f(np.array([cand]))[0])
                if cand_val > val:
                    actions[k] = cand
                    val = cand_val
            if val - prev <= 1e-12:
                break
        closer = best_actions is not None and abs(val - best_val) <= 1e-12 and (
            sum(abs(x - alpha) for x in actions) < sum(abs(x - alpha) for x in best_actions))
        if val > best_val + 1e-12 or closer:
            best_actions, best_val = actions, val
    intervals = tuple(feasible_interval(s, caps, best_actions[:k]) for k in range(len(caps)))
    return ActionProfile(tuple(best_actions), intervals, caps)


# ---------------------------------------------------------------------------
# Empirical engine: realized scores, integer admits.


def admits_per_institution(capacities: Sequence[float], pool_total: int) -> list:
    """``A_k = round(c_k * N_t)`` (half-up), trimmed so the pool is not overdrawn."""
    out = []
    left = pool_total
    for c in capacities:
        a = min(int(math.floor(c * pool_total + 0.5)), left)
        out.append(a)
        left -= a
    return out


def score_reward_empirical(a: float, total_admits: int, remaining_minority: Sequence[float],
                           remaining_majority: Sequence[float]) -> float:
    """Mean of the top ``round(a*A)`` minority and top ``A - round(a*A)`` majority scores."""
    if total_admits <= 0:
        raise ValueError("institution admits nobody")
    n0 = int(math.floor(a * total_admits + 0.5))
    n1 = total_admits - n0
    r0 = np.sort(np.asarray(remaining_minority, dtype=float))[::-1]
    r1 = np.sort(np.asarray(remaining_majority, dtype=float))[::-1]
    if n0 > r0.size or n1 > r1.size:
        raise ValueError("requested admits exceed the remaining pool")
    return float((r0[:n0].sum() + r1[:n1].sum()) / total_admits)


def prefix_sums(desc_scores: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(desc_scores)])


def _pick_best(values: np.ndarray, distance: np.ndarray) -> int:
    """Index of the max; near-ties go to the smallest distance, then lowest index."""
    best = np.max(values)
    near = np.flatnonzero(values >= best - 1e-12 * max(1.0, abs(best)))
    return int(near[np.argmin(distance[near])])


def mfg_counts(p0: np.ndarray, p1: np.ndarray, admits: Sequence[int],
               institutions: Sequence[Institution], alpha: float) -> list:
    """Sequential integer minority counts from prefix sums of sorted scores."""
    n0 = p0.size - 1
    n1 = p1.size - 1
    m0 = m1 = 0
    counts = []
    for A, inst in zip(admits, institutions):
        if A == 0:
            counts.append(0)
            continue
        lo = max(0, A - (n1 - m1))
        hi = min(A, n0 - m0)
        cand = np.arange(lo, hi + 1)
        reward = (p0[m0 + cand] - p0[m0] + p1[m1 + A - cand] - p1[m1]) / A
        frac = cand / A
        util = reward - inst.fairness_weight * (frac - alpha) ** 2
        x = int(cand[_pick_best(util, np.abs(frac - alpha))])
        counts.append(x)
        m0 += x
        m1 += A - x
    return counts


def cmfg_counts(p0: np.ndarray, p1: np.ndarray, admits: Sequence[int],
                institutions: Sequence[Institution], alpha: float) -> list:
    """Joint integer minority counts maximizing the summed utility.

    Exact dynamic program over the cumulative minority count: once the
    higher ranks have taken ``m0`` minority admits, the majority count they
    took is fixed by the total, so ``m0`` is the whole state. Near-ties go to
    the profile closest to ``alpha`` in summed absolute distance, then to the
    smallest count.
    """
    n0 = p0.size - 1
    n1 = p1.size - 1
    K = len(admits)
    before = np.concatenate([[0], np.cumsum(admits)]).astype(int)
    V = np.zeros(before[K] + 1)
    D = np.zeros(before[K] + 1)
    choice = []
    for k in range(K - 1, -1, -1):
        A = admits[k]
        M = before[k]
        m0 = np.arange(M + 1)[:, None]
        x = np.arange(A + 1)[None, :]
        m1 = M - m0
        ok = (m0 + x <= n0) & (m1 + A - x <= n1)
        i0 = np.minimum(m0 + x, n0)
        i1 = np.clip(m1 + A - x, 0, n1)
        j0 = np.minimum(m0, n0)
        j1 = np.clip(m1, 0, n1)
        if A > 0:
            frac = x / A
            util = (p0[i0] - p0[j0] + p1[i1] - p1[j1]) / A
            util = util - institutions[k].fairness_weight * (frac - alpha) ** 2
            dist = np.abs(frac - alpha) + np.zeros_like(util)
        else:
            util = np.zeros((M + 1, 1))
            dist = np.zeros((M + 1, 1))
        nxt = np.minimum(m0 + x, before[K])
        tot = np.where(ok, util + V[nxt], -np.inf)
        dtot = dist + D[nxt]
        best = tot.max(axis=1, keepdims=True)
        near = tot >= best - 1e-12 * np.maximum(1.0, np.abs(best))
        pick = np.argmin(np.where(near, dtot, np.inf), axis=1)
        rows = np.arange(M + 1)
        V = np.full(before[K] + 1, -np.inf)
        D = np.zeros(before[K] + 1)
        V[:M + 1] = tot[rows, pick]
        D[:M + 1] = dtot[rows, pick]
        choice.append(pick)
    choice.reverse()
    counts = []
    m0 = 0
    for k in range(K):
        x = int(choice[k][m0])
        counts.append(x)
        m0 += x
    return counts
