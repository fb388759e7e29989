"""Age-at-first-birth distribution: lognormal fit and discrete PMFs.

The placebo estimator consumes a probability mass function over integer
age bins (yearly or monthly). Two routes produce one: a maximum-likelihood
lognormal fit discretized by CDF differences, and a plain histogram of the
observed ages. Both are truncated to a configured support and renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateSample, EmptySupport, NonPositiveAge

BinWidth = Literal["yearly", "monthly"]

BINS_PER_YEAR = {"yearly": 1, "monthly": 12}


@dataclass(frozen=True)
class LognormalParams:
    """Parameters of the log of age: mean ``mu`` and standard deviation ``sigma``.

    ``n_fit`` records how many observations produced the fit; direct
    construction for synthetic ground truth leaves it at the minimum.
    """

    mu: float
    sigma: float
    n_fit: int = 2

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.n_fit < 2:
            raise ValueError("n_fit must be >= 2")

    @property
    def implied_age_mean(self) -> float:
        return math.exp(self.mu + self.sigma**2 / 2.0)

    @property
    def implied_age_sd(self) -> float:
        """Standard deviation of age itself (not of log age)."""
        return math.sqrt(math.expm1(self.sigma**2)) * self.implied_age_mean

    def to_json_dict(self) -> dict:
        return {
            "mu": self.mu,
            "sigma": self.sigma,
            "n_fit": self.n_fit,
            "implied_age_mean": self.implied_age_mean,
            "implied_age_sd": self.implied_age_sd,
        }


def fit_lognormal(ages_at_first_birth: Sequence[float]) -> LognormalParams:
    """Maximum-likelihood lognormal fit to ages at first birth.

    ``mu`` is the mean of log ages and ``sigma`` the population standard
    deviation of log ages (the MLE, no ddof correction).

    Raises
    ------
    NonPositiveAge
        Any age <= 0.
    DegenerateSample
        Fewer than two observations, or all observations equal.
    """
    ages = np.asarray(ages_at_first_birth, dtype=float)
    if ages.size < 2:
        raise DegenerateSample(f"need at least 2 ages, got {ages.size}")
    if np.any(ages <= 0) or not np.all(np.isfinite(ages)):
        raise NonPositiveAge("ages at first birth must be positive and finite")
    if np.unique(ages).size < 2:
        raise DegenerateSample("all ages equal, sigma would be zero")
    logs = np.log(ages)
    mu = float(logs.mean())
    sigma = float(np.sqrt(np.mean((logs - mu) ** 2)))
    if sigma == 0.0:
        raise DegenerateSample("log ages numerically indistinguishable")
    return LognormalParams(mu=mu, sigma=sigma, n_fit=int(ages.size))


@dataclass(frozen=True)
class AgeAtEventPMF:
    """Probability mass function of age at the event over integer bins.

    ``a_min`` and ``a_max`` are inclusive bin indices in bin units (years
    or months); ``masses`` aligns with ``a_min .. a_max`` and sums to one
    over the truncated support.
    """

    bin_width: BinWidth
    a_min: int
    a_max: int
    masses: np.ndarray

    def __post_init__(self) -> None:
        masses = np.array(self.masses, dtype=float)
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        if self.bin_width not in BINS_PER_YEAR:
            raise ValueError(f"bin_width must be yearly or monthly, got {self.bin_width!r}")
        if masses.shape != (self.m,):
            raise ValueError(f"expected {self.m} masses, got {masses.shape}")
        if np.any(masses < 0):
            raise ValueError("masses must be non-negative")
        if abs(float(masses.sum()) - 1.0) > 1e-9:
            raise ValueError("masses must sum to 1 over the support")

    @property
    def m(self) -> int:
        """Number of bins in the support."""
        return self.a_max - self.a_min + 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.a_min, self.a_max + 1)

    @property
    def bins_per_year(self) -> int:
        return BINS_PER_YEAR[self.bin_width]

    def mass_at(self, bins) -> np.ndarray:
        """Mass at integer bin indices; zero outside the support."""
        bins = np.asarray(bins)
        idx = bins - self.a_min
        inside = (idx >= 0) & (idx < self.m)
        out = np.zeros(bins.shape, dtype=float)
        out[inside] = self.masses[idx[inside]]
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw event-age bins; deterministic given the generator state."""
        cumulative = np.cumsum(self.masses)
        u = rng.random(size)
        idx = np.searchsorted(cumulative, u, side="right")
        return self.a_min + np.minimum(idx, self.m - 1)

    def to_json_dict(self) -> dict:
        return {
            "bin_width": self.bin_width,
            "a_min": self.a_min,
            "a_max": self.a_max,
            "masses": {str(b): float(p) for b, p in zip(self.support, self.masses)},
        }

    @staticmethod
    def from_json_dict(data: dict) -> "AgeAtEventPMF":
        a_min = int(data["a_min"])
        a_max = int(data["a_max"])
        masses = np.zeros(a_max - a_min + 1)
        for key, value in data["masses"].items():
            masses[int(key) - a_min] = float(value)
        return AgeAtEventPMF(data["bin_width"], a_min, a_max, masses)


def _check_support(support: tuple[int, int]) -> tuple[int, int]:
    a_min, a_max = int(support[0]), int(support[1])
    if a_min < 1:
        raise ValueError(f"support lower bound must be >= 1 bin unit, got {a_min}")
    if not a_max > a_min:
        raise ValueError(f"support must satisfy a_max > a_min, got [{a_min}, {a_max}]")
    return a_min, a_max


def discretize_pmf(
    params: LognormalParams,
    bin_width: BinWidth = "yearly",
    support: tuple[int, int] = (15, 49),
) -> AgeAtEventPMF:
    """Discretize a fitted lognormal into bin masses by CDF differences.

    The mass of bin ``t`` is ``F(t+1) - F(t)`` with the CDF evaluated in
    bin units (months divide ages by 12), then renormalized over the
    truncated support. CDF differences are exact for a PMF and avoid the
    midpoint bias a density evaluation would pick up on the skewed left
    edge.

    Raises
    ------
    EmptySupport
        The support carries less than 1e-9 of the distribution's mass.
    """
    a_min, a_max = _check_support(support)
    per = BINS_PER_YEAR[bin_width]
    dist = stats.lognorm(s=params.sigma, scale=math.exp(params.mu))
    edges = np.arange(a_min, a_max + 2, dtype=float) / per
    raw = np.diff(dist.cdf(edges))
    total = float(raw.sum())
    if total < 1e-9:
        raise EmptySupport(
            f"support [{a_min}, {a_max}] ({bin_width}) holds mass {total:.3g}"
        )
    return AgeAtEventPMF(bin_width, a_min, a_max, raw / total)


def empirical_pmf(
    ages_at_first_birth: Sequence[float],
    bin_width: BinWidth = "yearly",
    support: tuple[int, int] = (15, 49),
) -> AgeAtEventPMF:
    """Histogram PMF of the observed ages over the truncated support."""
    a_min, a_max = _check_support(support)
    per = BINS_PER_YEAR[bin_width]
    ages = np.asarray(ages_at_first_birth, dtype=float)
    if ages.size == 0:
        raise EmptySupport("no ages supplied")
    bins = np.floor(ages * per).astype(int)
    inside = (bins >= a_min) & (bins <= a_max)
    if not inside.any():
        raise EmptySupport(f"no ages inside support [{a_min}, {a_max}] ({bin_width})")
    counts = np.bincount(bins[inside] - a_min, minlength=a_max - a_min + 1)
    return AgeAtEventPMF(bin_width, a_min, a_max, counts / counts.sum())


def support_in_bins(support_years: tuple[int, int], bin_width: BinWidth) -> tuple[int, int]:
    """Convert a support stated in years to bin units.

    Monthly mode multiplies the resolution by 12, covering the same age
    span: years [15, 49] become months [180, 599].
    """
    lo, hi = int(support_years[0]), int(support_years[1])
    if bin_width == "yearly":
        return lo, hi
    return lo * 12, (hi + 1) * 12 - 1
