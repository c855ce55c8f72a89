"""Empirical versus asymptotic slice reward as the pool grows.

For one random configuration, repeat the finite-pool reward many times
at each pool size and report the mean error and its spread. The spread
should fall like 1/sqrt(N) while the mean stays near zero.

    python scripts/finite_sample_error.py --seed 3 --reps 100
"""
import argparse

import numpy as np

from fairdyn.distributions import Gaussian
from fairdyn.policy import feasible_interval, score_reward_asymptotic, score_reward_empirical


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    caps = tuple(rng.dirichlet(np.ones(4))[:3] * rng.uniform(0.2, 0.9))
    s = rng.uniform(0.05, 0.95)
    prior = [rng.uniform(*feasible_interval(s, caps, []))]
    dists = tuple(Gaussian(rng.uniform(-2, 6), rng.uniform(0.3, 3)) for _ in range(2))
    lo, hi = feasible_interval(s, caps, prior)
    a = rng.uniform(lo, hi)
    ref = score_reward_asymptotic(s, a, prior, dists, caps)
    print(f"caps={np.round(caps, 3).tolist()} s={s:.3f} a={a:.3f} asymptotic={ref:.5f}")
    print(f"{'N':>8} {'admits':>7} {'mean err':>10} {'sd':>8}")
    for N in args.sizes:
        n0 = round(s * N)
        m0 = round(caps[0] * prior[0] * N)
        m1 = round(caps[0] * (1 - prior[0]) * N)
        A = round(caps[1] * N)
        errs = np.empty(args.reps)
        for i in range(args.reps):
            x0 = np.sort(dists[0].sample(n0, rng))[::-1]
            x1 = np.sort(dists[1].sample(N - n0, rng))[::-1]
            errs[i] = score_reward_empirical(a, A, x0[m0:], x1[m1:]) - ref
        print(f"{N:>8} {A:>7} {errs.mean():>+10.5f} {errs.std(ddof=1):>8.5f}")


if __name__ == "__main__":
    main()
