"""Event-time trajectories for parents and placebo controls.

Parents contribute directly: their outcomes are binned by time since
first childbirth. The childless control group has no event, so a placebo
event is aligned to them; rather than randomly drawing a placebo birth
age per person (which injects randomization noise), the estimator here
evaluates the expectation of that procedure in closed form:

    Z(tau) = sum_t w_t(tau) Y_t  /  sum_t w_t(tau)

where Y_t are age-group means, w_t(tau) = p(t - tau) under the default
weighting (p is the age-at-event PMF), or n_t * p(t - tau) under
population weighting, which matches the expectation of individual-level
random assignment. The denominator corrects for age bins missing from
the data. Because Z is a fixed linear map of the age-group means, its
full covariance (not diagonal: neighboring lags share age bins) follows
by propagating the per-age-bin variances through the map. No randomness
enters anywhere, so the randomization noise is zero by construction.

A Monte Carlo implementation of the random-assignment procedure is kept
as a verification oracle: its across-draw mean converges to the
population-weighted closed form, and its across-draw dispersion is the
noise the closed form eliminates.

Trajectories are reported in absolute outcome units, never normalized to
the level just before the event; that keeps constant offsets between
groups (for example anticipatory earnings) visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .errors import EmptyPopulation, NoOverlap
from .event_dist import AgeAtEventPMF, BINS_PER_YEAR, BinWidth
from .ingest import RespondentRecord

OutcomeName = Literal["income", "hours", "full_time_share"]
Weighting = Literal["pmf_only", "population_weighted"]
BinMode = Literal["floor", "nearest"]

FULL_TIME_HOURS = 40.0

#: Estimates more than this many years from the event are flagged: at
#: large lags the birth cohort is nearly a deterministic function of the
#: lag, so cohort and event effects blur together.
COHORT_WINDOW_YEARS = 10.0

RecordFilter = Callable[[RespondentRecord], bool]


def outcome_value(record: RespondentRecord, outcome: OutcomeName) -> float | None:
    """Extract an outcome value; None when the record cannot contribute.

    Zero-imputed incomes and hours count as present zeros. The full-time
    share is the indicator of working at least 40 hours per week.
    """
    if outcome == "income":
        return record.income
    if outcome == "hours":
        return record.hours_weekly
    if outcome == "full_time_share":
        if record.hours_weekly is None:
            return None
        return 1.0 if record.hours_weekly >= FULL_TIME_HOURS else 0.0
    raise ValueError(f"unknown outcome {outcome!r}")


@dataclass(frozen=True)
class AgeGroupStats:
    """Mean outcome of one age bin of a population, with its sampling variance.

    ``variance_of_mean`` is the sample variance divided by the count; it
    is zero for singleton bins.
    """

    age_bin: int
    mean: float
    variance_of_mean: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.variance_of_mean < 0:
            raise ValueError("variance_of_mean must be >= 0")


@dataclass(frozen=True)
class TrajectoryEstimate:
    """Event-time-indexed means with the full covariance of the estimate.

    ``means`` and the covariance diagonal are NaN at lags where
    ``effective_weight_sums`` is zero (no supporting data).
    ``draw_dispersion`` is populated only for the Monte Carlo group: the
    across-draw standard deviation of single-draw estimates, i.e. the
    randomization noise.
    """

    tau_min: int
    tau_max: int
    means: np.ndarray
    covariance: np.ndarray
    group: str
    effective_weight_sums: np.ndarray
    bin_width: BinWidth = "yearly"
    counts: np.ndarray | None = None
    draw_dispersion: np.ndarray | None = None
    flags: tuple[tuple[str, ...], ...] = field(default=())

    @property
    def taus(self) -> np.ndarray:
        return np.arange(self.tau_min, self.tau_max + 1)

    @property
    def tau_range(self) -> tuple[int, int]:
        return (self.tau_min, self.tau_max)

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def covariance_json_dict(self) -> dict:
        return {
            "group": self.group,
            "bin_width": self.bin_width,
            "taus": [int(t) for t in self.taus],
            "covariance": [
                [float(c) if math.isfinite(c) else None for c in row]
                for row in self.covariance
            ],
        }


def _tau_flags(
    taus: np.ndarray,
    weight_sums: np.ndarray,
    counts: np.ndarray | None,
    bins_per_year: int,
) -> tuple[tuple[str, ...], ...]:
    flags = []
    for i, tau in enumerate(taus):
        entry = []
        if weight_sums[i] <= 0:
            entry.append("no_support")
        if counts is not None and counts[i] == 1:
            entry.append("single_observation")
        if abs(tau / bins_per_year) > COHORT_WINDOW_YEARS:
            entry.append("cohort_window")
        flags.append(tuple(entry))
    return tuple(flags)


def _grouped_mean_variance(
    keys: np.ndarray, values: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-bin mean, variance of the mean, and count, two-pass for stability."""
    uniq, inverse = np.unique(keys, return_inverse=True)
    counts = np.bincount(inverse)
    sums = np.bincount(inverse, weights=values)
    means = sums / counts
    deviations = values - means[inverse]
    ss = np.bincount(inverse, weights=deviations**2)
    var_of_mean = np.zeros_like(means)
    multi = counts > 1
    var_of_mean[multi] = ss[multi] / (counts[multi] - 1) / counts[multi]
    return uniq, means, var_of_mean, counts


def age_group_stats(
    records: Iterable[RespondentRecord],
    outcome: OutcomeName,
    where: RecordFilter | None = None,
    bin_width: BinWidth = "yearly",
) -> list[AgeGroupStats]:
    """Per-age-bin mean and variance-of-mean of an outcome.

    Age bins are the floor of age in bin units. Records whose outcome is
    absent are skipped; zero-imputed values are present zeros and stay in.

    Raises
    ------
    EmptyPopulation
        Nothing left after filtering.
    """
    per = BINS_PER_YEAR[bin_width]
    bins: list[int] = []
    values: list[float] = []
    for r in records:
        if where is not None and not where(r):
            continue
        v = outcome_value(r, outcome)
        if v is None:
            continue
        bins.append(math.floor(r.age_w1 * per))
        values.append(v)
    if not bins:
        raise EmptyPopulation(f"no respondents with outcome {outcome!r} after filtering")
    uniq, means, vom, counts = _grouped_mean_variance(
        np.asarray(bins), np.asarray(values)
    )
    return [
        AgeGroupStats(int(b), float(m), float(v), int(c))
        for b, m, v, c in zip(uniq, means, vom, counts)
    ]


def _stats_arrays(
    stats: Sequence[AgeGroupStats],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if not stats:
        raise EmptyPopulation("no age-group statistics supplied")
    t = np.array([s.age_bin for s in stats])
    if np.unique(t).size != t.size:
        raise ValueError("duplicate age bins in stats")
    y = np.array([s.mean for s in stats])
    v = np.array([s.variance_of_mean for s in stats])
    n = np.array([s.count for s in stats], dtype=float)
    return t, y, v, n


def _weight_matrix(
    stats: Sequence[AgeGroupStats],
    pmf: AgeAtEventPMF,
    tau_range: tuple[int, int],
    weighting: Weighting,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if weighting not in ("pmf_only", "population_weighted"):
        raise ValueError(f"unknown weighting {weighting!r}")
    t, y, v, n = _stats_arrays(stats)
    lo, hi = int(tau_range[0]), int(tau_range[1])
    if hi < lo:
        raise ValueError("tau_range upper bound below lower bound")
    taus = np.arange(lo, hi + 1)
    weights = pmf.mass_at(t[None, :] - taus[:, None])
    if weighting == "population_weighted":
        weights = weights * n[None, :]
    return weights, weights.sum(axis=1), y, v, taus


def _covariance_from_weights(
    weights: np.ndarray, weight_sums: np.ndarray, variances: np.ndarray
) -> np.ndarray:
    # Cov(Z_i, Z_j) = sum_t w_it w_jt v_t / (S_i S_j); symmetrized against
    # BLAS association differences, NaN rows where a lag has no support.
    cross = (weights * variances[None, :]) @ weights.T
    denom = np.outer(weight_sums, weight_sums)
    with np.errstate(invalid="ignore", divide="ignore"):
        cov = np.where(denom > 0, cross / denom, np.nan)
    return (cov + cov.T) / 2.0


def placebo_covariance(
    stats: Sequence[AgeGroupStats],
    pmf: AgeAtEventPMF,
    tau_range: tuple[int, int],
    weighting: Weighting = "pmf_only",
) -> np.ndarray:
    """Covariance of the placebo trajectory across lags.

    The estimate at each lag is a weighted average of the same age-group
    means, so distinct lags are correlated wherever their weight windows
    overlap. Entries are NaN for lags with zero weight sum.
    """
    weights, sums, _, v, _ = _weight_matrix(stats, pmf, tau_range, weighting)
    if not (sums > 0).any():
        raise NoOverlap("every lag has zero placebo weight")
    return _covariance_from_weights(weights, sums, v)


def analytical_placebo(
    stats: Sequence[AgeGroupStats],
    pmf: AgeAtEventPMF,
    tau_range: tuple[int, int],
    weighting: Weighting = "pmf_only",
) -> TrajectoryEstimate:
    """Closed-form placebo trajectory for a control population.

    Seed-free and bit-reproducible: repeated calls return identical
    arrays because no randomness is involved.

    Raises
    ------
    NoOverlap
        Every lag in ``tau_range`` has zero weight sum.
    """
    weights, sums, y, v, taus = _weight_matrix(stats, pmf, tau_range, weighting)
    if not (sums > 0).any():
        raise NoOverlap("every lag has zero placebo weight")
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(sums > 0, weights @ y / sums, np.nan)
    cov = _covariance_from_weights(weights, sums, v)
    return TrajectoryEstimate(
        tau_min=int(taus[0]),
        tau_max=int(taus[-1]),
        means=means,
        covariance=cov,
        group="placebo_analytical",
        effective_weight_sums=sums,
        bin_width=pmf.bin_width,
        flags=_tau_flags(taus, sums, None, pmf.bins_per_year),
    )


def _record_arrays(
    records: Iterable[RespondentRecord],
    outcome: OutcomeName,
    where: RecordFilter | None,
    per: int,
) -> tuple[np.ndarray, np.ndarray]:
    ages = []
    values = []
    for r in records:
        if where is not None and not where(r):
            continue
        v = outcome_value(r, outcome)
        if v is None:
            continue
        ages.append(math.floor(r.age_w1 * per))
        values.append(v)
    return np.asarray(ages, dtype=int), np.asarray(values, dtype=float)


def monte_carlo_placebo(
    records: Iterable[RespondentRecord],
    pmf: AgeAtEventPMF,
    tau_range: tuple[int, int],
    draws: int,
    seed: int,
    outcome: OutcomeName = "income",
    where: RecordFilter | None = None,
) -> TrajectoryEstimate:
    """Random placebo assignment, repeated ``draws`` times.

    Each draw samples an event age per respondent from the PMF, bins
    respondents by age minus drawn age, and averages the outcome per lag.
    The returned means average over draws; ``draw_dispersion`` is the
    across-draw standard deviation of the single-draw estimates (the
    randomization noise), and the covariance describes the across-draw
    mean (single-draw covariance divided by ``draws``).

    Each draw derives its randomness from ``(seed, draw_index)``, so
    results are bit-identical for a given seed and independent of
    execution order.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    per = pmf.bins_per_year
    ages, values = _record_arrays(records, outcome, where, per)
    if ages.size == 0:
        raise EmptyPopulation(f"no respondents with outcome {outcome!r} after filtering")
    lo, hi = int(tau_range[0]), int(tau_range[1])
    width = hi - lo + 1
    taus = np.arange(lo, hi + 1)

    z = np.full((draws, width), np.nan)
    count_total = np.zeros(width)
    for d in range(draws):
        rng = np.random.default_rng([seed, d])
        drawn = pmf.sample(rng, ages.size)
        offsets = ages - drawn - lo
        inside = (offsets >= 0) & (offsets < width)
        if not inside.any():
            continue
        idx = offsets[inside]
        counts = np.bincount(idx, minlength=width)
        sums = np.bincount(idx, weights=values[inside], minlength=width)
        occupied = counts > 0
        row = np.full(width, np.nan)
        row[occupied] = sums[occupied] / counts[occupied]
        z[d] = row
        count_total += counts

    valid = ~np.isnan(z)
    n_valid = valid.sum(axis=0)
    if not n_valid.any():
        raise NoOverlap("no draw placed any respondent inside tau_range")

    filled = np.where(valid, z, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(n_valid > 0, filled.sum(axis=0) / n_valid, np.nan)

    centered = np.where(valid, z - np.where(n_valid > 0, means, 0.0), 0.0)
    dispersion = np.full(width, np.nan)
    multi = n_valid > 1
    dispersion[multi] = np.sqrt(
        (centered**2).sum(axis=0)[multi] / (n_valid[multi] - 1)
    )

    # pairwise-complete covariance of single-draw estimates
    pair_n = valid.astype(float).T @ valid.astype(float)
    pair_s = centered.T @ centered
    with np.errstate(invalid="ignore", divide="ignore"):
        cov_single = np.where(pair_n > 1, pair_s / (pair_n - 1), np.nan)
    cov_single = (cov_single + cov_single.T) / 2.0

    return TrajectoryEstimate(
        tau_min=lo,
        tau_max=hi,
        means=means,
        covariance=cov_single / draws,
        group="placebo_monte_carlo",
        effective_weight_sums=count_total / draws,
        bin_width=pmf.bin_width,
        counts=None,
        draw_dispersion=dispersion,
        flags=_tau_flags(taus, count_total, None, per),
    )


def parent_trajectory(
    records: Iterable[RespondentRecord],
    outcome: OutcomeName,
    tau_range: tuple[int, int],
    where: RecordFilter | None = None,
    bin_width: BinWidth = "yearly",
    bin_mode: BinMode = "floor",
) -> TrajectoryEstimate:
    """Observed event-time trajectory of parents, in absolute units.

    Event-time bins take the floor of fractional event time by default,
    so births within the interview year land at lag zero; ``nearest``
    centers bins on integers instead. Lags are independent samples of
    different parents, so the covariance is diagonal. Bins absent from
    ``tau_range`` stay NaN.
    """
    per = BINS_PER_YEAR[bin_width]
    lo, hi = int(tau_range[0]), int(tau_range[1])
    width = hi - lo + 1
    taus = np.arange(lo, hi + 1)

    bins: list[int] = []
    values: list[float] = []
    for r in records:
        if r.parenthood != "parent" or r.event_time_years is None:
            continue
        if where is not None and not where(r):
            continue
        v = outcome_value(r, outcome)
        if v is None:
            continue
        scaled = r.event_time_years * per
        bins.append(math.floor(scaled + 0.5) if bin_mode == "nearest" else math.floor(scaled))
        values.append(v)
    if not bins:
        raise EmptyPopulation(f"no parents with outcome {outcome!r} after filtering")

    uniq, bin_means, bin_vom, bin_counts = _grouped_mean_variance(
        np.asarray(bins), np.asarray(values)
    )
    means = np.full(width, np.nan)
    variances = np.full(width, np.nan)
    counts = np.zeros(width, dtype=int)
    inside = (uniq >= lo) & (uniq <= hi)
    pos = uniq[inside] - lo
    means[pos] = bin_means[inside]
    variances[pos] = bin_vom[inside]
    counts[pos] = bin_counts[inside]

    covariance = np.diag(variances)
    return TrajectoryEstimate(
        tau_min=lo,
        tau_max=hi,
        means=means,
        covariance=covariance,
        group="treated",
        effective_weight_sums=counts.astype(float),
        bin_width=bin_width,
        counts=counts,
        flags=_tau_flags(taus, counts, counts, per),
    )
