"""Group score distributions.

Two kinds are supported: a Gaussian law and an empirical law backed by a
sorted sample. Both expose the same surface (``cdf``, ``inv_cdf``,
``truncated_mean``, ``quantile_integral``, ``sample``) so the policy engine
never needs to know which one it holds.

Infinite bounds are written as ``math.inf`` / ``-math.inf``; ``UNBOUNDED`` is
an alias kept for readability at call sites.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import special

UNBOUNDED = math.inf

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _std_pdf(z):
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore"):
        out = np.exp(-0.5 * z * z) / _SQRT_2PI
    return np.where(np.isfinite(z), out, 0.0)


@dataclass(frozen=True)
class Gaussian:
    mean: float
    variance: float

    def __post_init__(self):
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def pdf(self, x):
        return _std_pdf((np.asarray(x, dtype=float) - self.mean) / self.std) / self.std

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        out = special.ndtr(z)
        return float(out) if np.ndim(out) == 0 else out

    def sf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        out = special.ndtr(-z)
        return float(out) if np.ndim(out) == 0 else out

    def inv_cdf(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise ValueError(f"probability outside [0, 1]: {p}")
        out = self.mean + self.std * special.ndtri(p)
        return float(out) if np.ndim(out) == 0 else out

    def _mass(self, lo: float, hi: float) -> float:
        # Subtract on the side of the mean that keeps the two terms small.
        if lo > self.mean:
            return float(self.sf(lo) - self.sf(hi))
        return float(self.cdf(hi) - self.cdf(lo))

    def truncated_mean(self, lo: float = -UNBOUNDED, hi: float = UNBOUNDED) -> float:
        """E[X | lo <= X <= hi]."""
        if not lo < hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        mass = self._mass(lo, hi)
        if mass <= 0.0:
            raise ValueError(f"interval [{lo}, {hi}] has zero probability")
        a = (lo - self.mean) / self.std
        b = (hi - self.mean) / self.std
        out = self.mean + self.std * float(_std_pdf(a) - _std_pdf(b)) / mass
        return min(max(out, lo), hi)

    def quantile_integral(self, u_lo, u_hi):
        """Integral of the quantile function over [u_lo, u_hi].

        Equals the partial expectation of X between ``inv_cdf(u_lo)`` and
        ``inv_cdf(u_hi)``; zero-width slices contribute exactly zero.
        """
        u_lo = np.clip(np.asarray(u_lo, dtype=float), 0.0, 1.0)
        u_hi = np.clip(np.asarray(u_hi, dtype=float), 0.0, 1.0)
        z_lo = special.ndtri(u_lo)
        z_hi = special.ndtri(u_hi)
        out = self.mean * (u_hi - u_lo) + self.std * (_std_pdf(z_lo) - _std_pdf(z_hi))
        out = np.where(u_hi > u_lo, out, 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.mean, self.std, size=n)

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "mean": self.mean, "variance": self.variance}


@dataclass(frozen=True)
class Empirical:
    """Distribution of a finite sample.

    ``inv_cdf`` uses midpoint plotting positions ``(i + 0.5) / n`` with linear
    interpolation between them and clamping to the extreme order statistics
    beyond the first and last positions.
    """

    sample_values: tuple
    _x: np.ndarray = field(init=False, repr=False, compare=False)
    _knots: np.ndarray = field(init=False, repr=False, compare=False)
    _values: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.sample_values, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("empirical sample must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(x)):
            raise ValueError("empirical sample contains non-finite values")
        if np.any(np.diff(x) < 0):
            raise ValueError("empirical sample must be sorted ascending")
        n = x.size
        knots = np.concatenate([[0.0], (np.arange(n) + 0.5) / n, [1.0]])
        values = np.concatenate([[x[0]], x, [x[-1]]])
        seg = np.diff(knots) * (values[1:] + values[:-1]) / 2.0
        object.__setattr__(self, "sample_values", tuple(float(v) for v in x))
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_knots", knots)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(seg)]))

    @classmethod
    def from_scores(cls, scores: Sequence[float]) -> "Empirical":
        return cls(tuple(sorted(float(s) for s in scores)))

    def cdf(self, x):
        out = np.searchsorted(self._x, np.asarray(x, dtype=float), side="right") / self._x.size
        return float(out) if np.ndim(out) == 0 else out

    def inv_cdf(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise ValueError(f"probability outside [0, 1]: {p}")
        out = np.interp(p, self._knots, self._values)
        return float(out) if np.ndim(out) == 0 else out

    def _integral_to(self, u):
        i = np.clip(np.searchsorted(self._knots, u, side="right") - 1, 0, self._knots.size - 2)
        u0 = self._knots[i]
        q0 = self._values[i]
        qu = np.interp(u, self._knots, self._values)
        return self._cum[i] + (u - u0) * (q0 + qu) / 2.0

    def quantile_integral(self, u_lo, u_hi):
        u_lo = np.clip(np.asarray(u_lo, dtype=float), 0.0, 1.0)
        u_hi = np.clip(np.asarray(u_hi, dtype=float), 0.0, 1.0)
        out = np.where(u_hi > u_lo, self._integral_to(u_hi) - self._integral_to(u_lo), 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def truncated_mean(self, lo: float = -UNBOUNDED, hi: float = UNBOUNDED) -> float:
        if not lo < hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        sel = self._x[(self._x >= lo) & (self._x <= hi)]
        if sel.size == 0:
            raise ValueError(f"interval [{lo}, {hi}] has zero probability")
        return float(sel.mean())

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self._x, size=n, replace=True)

    def to_dict(self) -> dict:
        return {"kind": "empirical", "sample": list(self.sample_values)}


ScoreDistribution = Union[Gaussian, Empirical]


def fit_gaussian(scores: Sequence[float]) -> Gaussian:
    """Gaussian with the sample mean and unbiased sample variance."""
    x = np.asarray(scores, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two scores to fit a Gaussian")
    var = float(x.var(ddof=1))
    if var <= 0.0:
        raise ValueError("scores have zero variance")
    return Gaussian(float(x.mean()), var)


def from_dict(d: dict) -> ScoreDistribution:
    kind = str(d.get("kind", "gaussian")).lower()
    if kind == "gaussian":
        return Gaussian(float(d["mean"]), float(d["variance"]))
    if kind == "empirical":
        return Empirical.from_scores(d["sample"])
    raise ValueError(f"unknown distribution kind {kind!r}")
