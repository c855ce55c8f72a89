"""Round loop, trajectories, seeded Monte Carlo batches and diagnostics."""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import policy as pol
from .config import ExperimentConfig
from .evolution import (feedback_signal, role_model_fraction, role_model_fraction_asymptotic,
                        update_theta)
from .pool import sample_pool

NAN = math.nan


@dataclass(frozen=True)
class RoundRecord:
    round: int
    theta: float
    state: float
    actions: tuple
    weighted_signal: float
    rewards: tuple
    role_fractions: Optional[tuple]
    # (group-0 per institution, group-1 per institution); NaN where a group had no admits.
    lowest_admit_percentile: tuple
    admits: tuple = ()
    empty: bool = False


@dataclass
class Trajectory:
    seed: int
    records: list

    def __len__(self) -> int:
        return len(self.records)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([r.theta for r in self.records])

    def arrays(self) -> dict:
        K = max((len(r.actions) for r in self.records), default=0)
        pad = lambda vals: tuple(vals) if len(vals) == K else (NAN,) * K
        return {
            "theta": self.thetas,
            "state": np.array([r.state for r in self.records]),
            "actions": np.array([pad(r.actions) for r in self.records], dtype=float).reshape(-1, K),
            "signal": np.array([r.weighted_signal for r in self.records]),
            "role": np.array([pad(r.role_fractions or ()) for r in self.records],
                             dtype=float).reshape(-1, K),
            "low_g0": np.array([pad(r.lowest_admit_percentile[0]) for r in self.records],
                               dtype=float).reshape(-1, K),
            "low_g1": np.array([pad(r.lowest_admit_percentile[1]) for r in self.records],
                               dtype=float).reshape(-1, K),
        }


def _empty_record(t: int, theta: float, K: int, state: float = NAN) -> RoundRecord:
    nan_k = (NAN,) * K
    return RoundRecord(t, theta, state, nan_k, NAN, nan_k, None, (nan_k, nan_k), (0,) * K, True)


def lowest_admit_percentile(dist, lowest_score: Optional[float]) -> float:
    """CDF level of a group's lowest admitted score; NaN if the group had no admits."""
    if lowest_score is None or not math.isfinite(lowest_score):
        return NAN
    return float(dist.cdf(lowest_score))


def _round_empirical(theta, t, rng, cfg: ExperimentConfig):
    K = cfg.K
    ps = sample_pool(theta, cfg.pool, rng)
    if ps.empty:
        return _empty_record(t, theta, K), theta
    s = ps.state
    d0, d1 = cfg.distributions
    x0 = np.sort(d0.sample(ps.n_minority, rng))[::-1]
    x1 = np.sort(d1.sample(ps.n_majority, rng))[::-1]
    admits = pol.admits_per_institution(cfg.capacities, ps.total)
    p0 = pol.prefix_sums(x0)
    p1 = pol.prefix_sums(x1)
    if cfg.policy_kind == "CMFG":
        counts = pol.cmfg_counts(p0, p1, admits, cfg.institutions, cfg.alpha)
    else:
        counts = pol.mfg_counts(p0, p1, admits, cfg.institutions, cfg.alpha)

    role_r = cfg.evolution.role_fraction if cfg.evolution.variant == "role_model" else None
    actions, rewards, roles = [], [], []
    low0 = np.full(K, NAN)
    low1 = np.full(K, NAN)
    m0 = m1 = 0
    for k, (A, n0) in enumerate(zip(admits, counts)):
        n1 = A - n0
        if A == 0:
            actions.append(NAN)
            rewards.append(NAN)
            roles.append(NAN)
        else:
            actions.append(n0 / A)
            rewards.append((p0[m0 + n0] - p0[m0] + p1[m1 + n1] - p1[m1]) / A)
            if role_r is not None:
                roles.append(role_model_fraction(x0[m0:m0 + n0], x1[m1:m1 + n1], role_r, s))
        if n0 > 0:
            low0[k] = x0[m0 + n0 - 1]
        if n1 > 0:
            low1[k] = x1[m1 + n1 - 1]
        m0 += n0
        m1 += n1
    pct0 = np.where(np.isnan(low0), NAN, d0.cdf(np.nan_to_num(low0)))
    pct1 = np.where(np.isnan(low1), NAN, d1.cdf(np.nan_to_num(low1)))
    return _finish(t, theta, s, actions, rewards, roles if role_r is not None else None,
                   (tuple(pct0.tolist()), tuple(pct1.tolist())), tuple(admits), cfg)


def _round_asymptotic(theta, t, rng, cfg: ExperimentConfig):
    # Large-pool limit: the realized minority share equals theta.
    s = theta
    dists = cfg.distributions
    caps = cfg.capacities
    solver = pol.cmfg_policy if cfg.policy_kind == "CMFG" else pol.mfg_policy
    profile = solver(s, dists, cfg.institutions, cfg.alpha)
    actions = list(profile.actions)
    rewards, roles, pct0, pct1 = [], [], [], []
    role_r = cfg.evolution.role_fraction if cfg.evolution.variant == "role_model" else None
    for k, a in enumerate(actions):
        prior = actions[:k]
        th = pol.thresholds(s, a, prior, dists, caps)
        rewards.append(pol.score_reward_asymptotic(s, a, prior, dists, caps))
        pct0.append(float(dists[0].cdf(th.lower[0])) if a * caps[k] > 0 and s > 0 else NAN)
        pct1.append(float(dists[1].cdf(th.lower[1])) if (1 - a) * caps[k] > 0 and s < 1 else NAN)
        if role_r is not None:
            roles.append(role_model_fraction_asymptotic(s, a, th, dists, caps[k], role_r))
    return _finish(t, theta, s, actions, rewards, roles if role_r is not None else None,
                   (tuple(pct0), tuple(pct1)), (), cfg)


def _finish(t, theta, s, actions, rewards, roles, pct, admits, cfg: ExperimentConfig):
    signal = feedback_signal(cfg.evolution, actions, cfg.capacities, roles)
    if math.isnan(signal):
        next_theta = theta
    else:
        next_theta = update_theta(cfg.evolution, theta, signal, s, t, cfg.pool.clip_epsilon)
    rec = RoundRecord(t, theta, s, tuple(actions), signal, tuple(rewards),
                      tuple(roles) if roles is not None else None, pct, admits,
                      math.isnan(signal))
    return rec, next_theta


def run_round(theta: float, t: int, rng: np.random.Generator, cfg: ExperimentConfig):
    """One round: sample the pool, apply the policy, evolve theta.

    Returns ``(RoundRecord, next_theta)``. A round with an empty pool admits
    nobody and leaves theta unchanged. The asymptotic engine draws nothing:
    its state is theta itself.
    """
    if cfg.engine == "asymptotic":
        return _round_asymptotic(theta, t, rng, cfg)
    return _round_empirical(theta, t, rng, cfg)


def run_trajectory(cfg: ExperimentConfig, seed: int, rounds: Optional[int] = None) -> Trajectory:
    rounds = cfg.horizon if rounds is None else rounds
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    rng = np.random.default_rng(seed)
    theta = cfg.pool.theta0
    records = []
    for t in range(rounds):
        rec, theta = run_round(theta, t, rng, cfg)
        records.append(rec)
    return Trajectory(seed, records)


@dataclass
class BatchSummary:
    n_instances: int
    mean_theta: np.ndarray
    se_theta: np.ndarray
    mean_state: np.ndarray
    mean_actions: np.ndarray
    mean_signal: np.ndarray
    mean_role: np.ndarray
    mean_low_g0: np.ndarray
    mean_low_g1: np.ndarray
    theta_paths: np.ndarray
    equilibrium_estimate: float = NAN
    converged: bool = False

    @property
    def rounds(self) -> int:
        return self.mean_theta.size

    @property
    def K(self) -> int:
        return self.mean_actions.shape[1]


def _nanmean(x: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmean(x, axis=0)


def summarize(trajectories: Sequence[Trajectory], window: int = 50, tol: float = 0.01) -> BatchSummary:
    if not trajectories:
        raise ValueError("need at least one trajectory")
    arrs = [tr.arrays() for tr in trajectories]
    stack = {key: np.stack([a[key] for a in arrs]) for key in arrs[0]}
    n = len(trajectories)
    thetas = stack["theta"]
    se = thetas.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(thetas.shape[1], NAN)
    summary = BatchSummary(
        n_instances=n,
        mean_theta=thetas.mean(axis=0),
        se_theta=se,
        mean_state=_nanmean(stack["state"]),
        mean_actions=_nanmean(stack["actions"]),
        mean_signal=_nanmean(stack["signal"]),
        mean_role=_nanmean(stack["role"]),
        mean_low_g0=_nanmean(stack["low_g0"]),
        mean_low_g1=_nanmean(stack["low_g1"]),
        theta_paths=thetas,
    )
    w = min(window, summary.rounds)
    summary.equilibrium_estimate, summary.converged = detect_equilibrium(summary, w, tol)
    return summary


def _trajectory_job(args):
    cfg, seed = args
    return run_trajectory(cfg, seed)


def run_batch(cfg: ExperimentConfig, n_instances: Optional[int] = None,
              base_seed: Optional[int] = None, workers: int = 1,
              window: int = 50, tol: float = 0.01) -> BatchSummary:
    """Independent trajectories with seeds ``base_seed + i``, summarized per round."""
    n = cfg.instances if n_instances is None else n_instances
    if n < 1:
        raise ValueError("n_instances must be >= 1")
    base = cfg.base_seed if base_seed is None else base_seed
    jobs = [(cfg, base + i) for i in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            trajectories = list(ex.map(_trajectory_job, jobs))
    else:
        trajectories = [_trajectory_job(j) for j in jobs]
    return summarize(trajectories, window, tol)


def detect_equilibrium(summary: BatchSummary, window: int = 50, tol: float = 0.01) -> tuple:
    """Mean theta over the last ``window`` rounds, and whether its range is below ``tol``."""
    if window > summary.rounds or window < 1:
        raise ValueError("window must lie in [1, rounds]")
    tail = summary.mean_theta[-window:]
    return float(tail.mean()), bool(tail.max() - tail.min() < tol)


def rounds_to_band(mean_theta: Sequence[float], alpha: float, band: float = 0.02) -> Optional[int]:
    """First round index with ``|theta - alpha| < band``; None if never."""
    hits = np.flatnonzero(np.abs(np.asarray(mean_theta) - alpha) < band)
    return int(hits[0]) if hits.size else None


def summary_header(K: int) -> list:
    cols = ["round", "mean_theta", "se_theta", "mean_state"]
    cols += [f"mean_action_{k}" for k in range(1, K + 1)]
    cols += ["mean_signal"]
    cols += [f"mean_role_frac_{k}" for k in range(1, K + 1)]
    cols += [f"mean_low_pct_g0_{k}" for k in range(1, K + 1)]
    cols += [f"mean_low_pct_g1_{k}" for k in range(1, K + 1)]
    return cols


def _fmt(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def write_summary_csv(summary: BatchSummary, path) -> None:
    K = summary.K
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(summary_header(K))
        for t in range(summary.rounds):
            row = [str(t), _fmt(summary.mean_theta[t]), _fmt(summary.se_theta[t]),
                   _fmt(summary.mean_state[t])]
            row += [_fmt(v) for v in summary.mean_actions[t]]
            row += [_fmt(summary.mean_signal[t])]
            row += [_fmt(v) for v in summary.mean_role[t]]
            row += [_fmt(v) for v in summary.mean_low_g0[t]]
            row += [_fmt(v) for v in summary.mean_low_g1[t]]
            w.writerow(row)
