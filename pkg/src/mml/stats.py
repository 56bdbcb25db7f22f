"""Empirical distributions, exponential fits, and distributional diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DegenerateSample,
    EmptySample,
    NonPositiveRate,
    ShapeMismatch,
)
from .matching import MatchingOutcome

_GRID_POINTS = 64
_GOLDEN_STEPS = 40
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EmpiricalCDF:
    """Right-continuous empirical CDF of a sample."""

    sorted_samples: np.ndarray

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "EmpiricalCDF":
        samples = np.asarray(samples, dtype=np.float64)
        if samples.size == 0:
            raise EmptySample("empirical CDF needs at least one sample")
        return cls(sorted_samples=np.sort(samples))

    @property
    def n(self) -> int:
        return self.sorted_samples.size

    def evaluate(self, t) -> np.ndarray | float:
        t_arr = np.asarray(t, dtype=np.float64)
        out = np.searchsorted(self.sorted_samples, t_arr, side="right") / self.n
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def _check_sample(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        samples = samples.ravel()
    if samples.size == 0:
        raise EmptySample("statistic needs at least one sample")
    if np.any(samples < 0.0) or not np.all(np.isfinite(samples)):
        raise ValueError("samples must be finite and non-negative")
    return samples


def _ks_exp_sorted(xs: np.ndarray, rate: float) -> float:
    # Exact sup-distance: the extremes sit just before/after the sample jumps.
    n = xs.size
    cdf = -np.expm1(-rate * xs)
    i = np.arange(1, n + 1, dtype=np.float64)
    upper = np.max(i / n - cdf)
    lower = np.max(cdf - (i - 1.0) / n)
    return float(max(upper, lower))


def ks_distance_to_exp(samples: np.ndarray, rate: float) -> float:
    """Exact Kolmogorov-Smirnov distance between a sample and Exp(rate)."""
    samples = _check_sample(samples)
    if not (rate > 0.0) or not math.isfinite(rate):
        raise NonPositiveRate(f"rate must be positive and finite, got {rate}")
    return _ks_exp_sorted(np.sort(samples), rate)


class FitMethod(Enum):
    GRID_REFINE = "grid_refine"
    CLOSED_FORM_YSUM = "closed_form_ysum"
    INVERSE_MEAN = "inverse_mean"


@dataclass(frozen=True)
class ExponentialFit:
    """An exponential rate, the KS distance it achieves, and how it was chosen."""

    rate: float
    ks_distance: float
    method: FitMethod


def exponential_fit_at(
    samples: np.ndarray, rate: float, method: FitMethod = FitMethod.CLOSED_FORM_YSUM
) -> ExponentialFit:
    """Evaluate a caller-supplied rate (e.g. a partner-value sum or 1/mean)."""
    return ExponentialFit(
        rate=float(rate), ks_distance=ks_distance_to_exp(samples, rate), method=method
    )


def best_fit_exponential(samples: np.ndarray) -> ExponentialFit:
    """Minimize the KS distance over rates on a log grid, then refine.

    64 grid points on [0.01/mean, 100/mean], followed by 40 golden-section
    steps (in log-rate) on the bracket around the best grid point.
    """
    samples = _check_sample(samples)
    mean = float(samples.mean())
    if mean <= 0.0:
        raise DegenerateSample("cannot fit an exponential to an all-zero sample")
    xs = np.sort(samples)

    log_grid = np.linspace(math.log(0.01 / mean), math.log(100.0 / mean), _GRID_POINTS)
    ks_grid = [_ks_exp_sorted(xs, math.exp(g)) for g in log_grid]
    best = int(np.argmin(ks_grid))
    lo = log_grid[max(best - 1, 0)]
    hi = log_grid[min(best + 1, _GRID_POINTS - 1)]

    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc = _ks_exp_sorted(xs, math.exp(c))
    fd = _ks_exp_sorted(xs, math.exp(d))
    for _ in range(_GOLDEN_STEPS):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = _ks_exp_sorted(xs, math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = _ks_exp_sorted(xs, math.exp(d))
    log_rate, ks = (c, fc) if fc <= fd else (d, fd)

    grid_best = float(ks_grid[best])
    if grid_best < ks:  # never return worse than the raw grid
        log_rate, ks = log_grid[best], grid_best
    return ExponentialFit(
        rate=math.exp(log_rate), ks_distance=float(ks), method=FitMethod.GRID_REFINE
    )


def rescaled_ranks(rank_men: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Divide each man's rank by his fitness (competitiveness rescaling)."""
    rank_men = np.asarray(rank_men, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if rank_men.shape != phi.shape:
        raise ShapeMismatch(
            f"ranks {rank_men.shape} and fitness {phi.shape} must align"
        )
    return rank_men / phi


def hyperbola_product(x_delta: np.ndarray, y_delta: np.ndarray, n: int) -> float:
    """||x||_1 * ||y||_1 / n — near 1 when values sit on the stable hyperbola."""
    if n < 1:
        raise ValueError("n must be positive")
    x_delta = np.asarray(x_delta, dtype=np.float64)
    y_delta = np.asarray(y_delta, dtype=np.float64)
    return float(np.abs(x_delta).sum() * np.abs(y_delta).sum() / n)


def eig_dispersion(M: np.ndarray, y: np.ndarray, zeta: float) -> tuple[float, float]:
    """How far M @ y is from a constant vector.

    Returns (t_star, violating_fraction) with t_star the median of e = M @ y
    and the fraction of coordinates where |e_i - t_star| >= sqrt(zeta) * t_star.
    """
    if zeta <= 0.0:
        raise ValueError("zeta must be positive")
    e = np.asarray(M, dtype=np.float64) @ np.asarray(y, dtype=np.float64)
    t_star = float(np.median(e))
    violating = float(np.mean(np.abs(e - t_star) >= math.sqrt(zeta) * t_star))
    return t_star, violating


@dataclass(frozen=True)
class RegionFlags:
    in_r1_u: bool
    in_r1_v: bool
    in_r2: bool

    @property
    def all_ok(self) -> bool:
        return self.in_r1_u and self.in_r1_v and self.in_r2


def region_check(
    u: np.ndarray,
    v: np.ndarray,
    M: np.ndarray,
    c1_lo: float,
    c1_hi: float,
    c2: float,
) -> RegionFlags:
    """Check the norm and bilinear-form windows used by the tail analysis.

    A vector is inside its window when c1_lo * log n <= ||.||_1 <= c1_hi * n *
    (log n)^(-7/8); the pair is inside the bilinear window when u' M v <=
    c2 * (log n)^(1/8).  All boundaries inclusive.  Needs n >= 2 (log 1 = 0
    degenerates the window).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    n = u.size
    if n < 2:
        raise ValueError("region check needs n >= 2")
    log_n = math.log(n)
    lo = c1_lo * log_n
    hi = c1_hi * n * log_n ** (-7.0 / 8.0)
    norm_u = float(np.abs(u).sum())
    norm_v = float(np.abs(v).sum())
    bilinear = float(u @ np.asarray(M, dtype=np.float64) @ v)
    return RegionFlags(
        in_r1_u=lo <= norm_u <= hi,
        in_r1_v=lo <= norm_v <= hi,
        in_r2=bilinear <= c2 * log_n ** 0.125,
    )


def dkw_bound(n: int, delta: float, epsilon: float) -> float:
    """Tail bound 4 * exp(-2 n eps^2 / 9) for empirical-CDF deviation.

    Bounds the probability that the empirical CDF of n independent draws, each
    within KS distance delta of a common F, deviates from F by more than
    2*delta + epsilon.  (delta shifts the event, not the bound.)
    """
    if n < 1:
        raise ValueError("n must be positive")
    if delta < 0.0 or epsilon <= 0.0:
        raise ValueError("need delta >= 0 and epsilon > 0")
    return 4.0 * math.exp(-2.0 * n * epsilon * epsilon / 9.0)


def rank_value_ratio_report(
    outcome: MatchingOutcome, phi: np.ndarray, theta: float
) -> float:
    """Fraction of matched men whose rank disagrees with value * fitness.

    For a matched man the rank should be roughly x_i * phi_i (his value times
    the total score mass pointing at him); reports the fraction off by more
    than theta relative.
    """
    if outcome.value_men is None:
        raise ValueError("ratio report needs an outcome with latent values")
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    phi = np.asarray(phi, dtype=np.float64)
    sup = np.nonzero(outcome.rank_men > 0)[0]
    if sup.size == 0:
        return 0.0
    ratio = outcome.rank_men[sup] / (outcome.value_men[sup] * phi[sup])
    return float(np.mean(np.abs(ratio - 1.0) > theta))
