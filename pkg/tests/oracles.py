"""Independent reference computations used by the tests.

Nothing here calls into the package: densities are written out by hand and
integrated with adaptive quadrature, quantiles are found by bisection and
argmaxes by brute-force grids.
"""
import math

import numpy as np
from scipy import integrate


def normal_pdf(x, mean=0.0, var=1.0):
    return math.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2 * math.pi * var)


def normal_cdf_quad(x, mean=0.0, var=1.0):
    if x <= mean:
        val, _ = integrate.quad(normal_pdf, -np.inf, x, args=(mean, var), epsabs=1e-14, epsrel=1e-13)
        return val
    val, _ = integrate.quad(normal_pdf, x, np.inf, args=(mean, var), epsabs=1e-14, epsrel=1e-13)
    return 1.0 - val


def normal_quantile_bisect(p, mean=0.0, var=1.0):
    sd = math.sqrt(var)
    lo, hi = mean - 40 * sd, mean + 40 * sd
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if normal_cdf_quad(mid, mean, var) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def truncated_mean_quad(lo, hi, mean=0.0, var=1.0):
    num, _ = integrate.quad(lambda x: x * normal_pdf(x, mean, var), lo, hi, epsabs=1e-13)
    den, _ = integrate.quad(normal_pdf, lo, hi, args=(mean, var), epsabs=1e-13)
    return num / den


def slice_reward_quad(s, a, prior, caps, m0, v0, m1, v1):
    """Mean admitted score of institution len(prior) from tail integrals of the densities.

    Group g's slice is the band of its density between two quantile cutoffs;
    cutoffs are located by bisection on the quadrature CDF.
    """
    k = len(prior)
    c = caps[k]
    cb0 = sum(cj * p for cj, p in zip(caps, prior))
    cb1 = sum(cj * (1 - p) for cj, p in zip(caps, prior))

    def band(mass_above_hi, mass_above_lo, mean, var):
        # quantile levels measured from the top
        def cut(top_mass):
            if top_mass <= 0:
                return np.inf
            if top_mass >= 1:
                return -np.inf
            return normal_quantile_bisect(1 - top_mass, mean, var)
        hi, lo = cut(mass_above_hi), cut(mass_above_lo)
        if not lo < hi:
            return 0.0
        val, _ = integrate.quad(lambda x: x * normal_pdf(x, mean, var), lo, hi, epsabs=1e-12)
        return val

    total = 0.0
    if s > 0:
        total += s * band(cb0 / s, (cb0 + a * c) / s, m0, v0)
    if s < 1:
        total += (1 - s) * band(cb1 / (1 - s), (cb1 + (1 - a) * c) / (1 - s), m1, v1)
    return total / c


def brute_argmax(f, lo, hi, step=1e-4):
    grid = np.arange(lo, hi + step / 2, step)
    grid = grid[grid <= hi]
    vals = np.array([f(x) for x in grid])
    return float(grid[int(np.argmax(vals))])

