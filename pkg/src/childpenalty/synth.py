"""Synthetic populations with known ground truth, plus a validation harness.

Populations are generated from explicit per-gender age profiles and
event-time effects, so every estimator can be checked against the values
it should recover. Ages are drawn at whole-day resolution; a population
written to the raw survey format and re-ingested reproduces the generated
records bit for bit.

The validation harness consumes only public estimator outputs: it checks
the closed-form placebo against the Monte Carlo oracle, recovers the
planted event effect, and measures how averaging M random assignments
shrinks the randomization noise.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidSpec
from .event_dist import (
    AgeAtEventPMF,
    BINS_PER_YEAR,
    BinWidth,
    LognormalParams,
    discretize_pmf,
    support_in_bins,
)
from .ingest import DAYS_PER_YEAR, DEFAULT_SCHEMA, LOGICAL_FIELDS, RespondentRecord
from .trajectory import analytical_placebo, age_group_stats, monte_carlo_placebo, parent_trajectory

GENDERS = ("female", "male")

Knots = tuple[tuple[float, float], ...]

DEFAULT_INTERVIEW_DATE = dt.date(2010, 6, 15)


def _as_knots(knots) -> Knots:
    out = tuple((float(x), float(y)) for x, y in knots)
    if not out:
        raise InvalidSpec("knot list must not be empty")
    xs = [x for x, _ in out]
    if xs != sorted(xs):
        raise InvalidSpec("knots must be sorted by position")
    return out


def _interp_profile(knots: Knots, x: np.ndarray) -> np.ndarray:
    xs = np.array([k[0] for k in knots])
    ys = np.array([k[1] for k in knots])
    return np.interp(x, xs, ys)


def _interp_effect(knots: Knots, x: np.ndarray) -> np.ndarray:
    """Piecewise-linear inside the knot span, exactly zero outside it."""
    xs = np.array([k[0] for k in knots])
    ys = np.array([k[1] for k in knots])
    inside = (x >= xs[0]) & (x <= xs[-1])
    return np.where(inside, np.interp(x, xs, ys), 0.0)


@dataclass(frozen=True)
class PopulationSpec:
    """Recipe for a synthetic two-group population.

    ``income_profile`` maps gender to (age, income) knots covering the
    whole age range; ``child_effect`` maps gender to (event-time, delta)
    knots, zero outside the knot span and required to be zero before
    ``anticipation_onset``. Parents draw their age at first birth from
    ``age_at_birth_dist``; event time is age minus that draw, so recent
    and future (anticipation-window) births arise naturally.
    """

    n_childless: int
    n_parents: int
    age_range: tuple[float, float]
    income_profile: dict[str, Knots]
    child_effect: dict[str, Knots]
    noise_sd: float
    age_at_birth_dist: LognormalParams
    seed: int
    fraction_female: float = 0.5
    anticipation_onset: float = 0.0
    hours_value: float = 40.0

    def __post_init__(self) -> None:
        if self.n_childless < 0 or self.n_parents < 0:
            raise InvalidSpec("population counts must be non-negative")
        if self.n_childless + self.n_parents < 1:
            raise InvalidSpec("population must contain at least one respondent")
        lo, hi = self.age_range
        if not lo < hi or lo <= 0:
            raise InvalidSpec(f"age_range must satisfy 0 < lo < hi, got {self.age_range}")
        if self.noise_sd < 0:
            raise InvalidSpec("noise_sd must be >= 0")
        if not 0.0 <= self.fraction_female <= 1.0:
            raise InvalidSpec("fraction_female must lie in [0, 1]")
        if self.hours_value < 0:
            raise InvalidSpec("hours_value must be >= 0")
        object.__setattr__(
            self, "income_profile", {g: _as_knots(k) for g, k in self.income_profile.items()}
        )
        object.__setattr__(
            self, "child_effect", {g: _as_knots(k) for g, k in self.child_effect.items()}
        )
        for gender in GENDERS:
            if gender not in self.income_profile:
                raise InvalidSpec(f"income_profile missing gender {gender!r}")
            if gender not in self.child_effect:
                raise InvalidSpec(f"child_effect missing gender {gender!r}")
            knots = self.income_profile[gender]
            if len(knots) > 1 and (knots[0][0] > lo or knots[-1][0] < hi):
                raise InvalidSpec(
                    f"income_profile[{gender!r}] does not cover age_range {self.age_range}"
                )
            for x, y in self.child_effect[gender]:
                if x < self.anticipation_onset and y != 0.0:
                    raise InvalidSpec(
                        f"child_effect[{gender!r}] must be zero before "
                        f"anticipation onset {self.anticipation_onset}"
                    )

    def profile_at(self, gender: str, ages: np.ndarray) -> np.ndarray:
        return _interp_profile(self.income_profile[gender], ages)

    def effect_at(self, gender: str, taus: np.ndarray) -> np.ndarray:
        return _interp_effect(self.child_effect[gender], taus)

    def effect_bin_average(self, gender: str, tau_bin: int, bins_per_year: int = 1) -> float:
        """Ground-truth effect averaged over the event-time bin."""
        lo = tau_bin / bins_per_year
        hi = (tau_bin + 1) / bins_per_year
        grid = np.linspace(lo, hi, 65)
        mids = (grid[:-1] + grid[1:]) / 2.0
        return float(self.effect_at(gender, mids).mean())


def _gender_split(n: int, fraction_female: float) -> list[str]:
    n_female = round(n * fraction_female)
    return ["female"] * n_female + ["male"] * (n - n_female)


def generate_population(spec: PopulationSpec) -> list[RespondentRecord]:
    """Generate respondent records; deterministic for a given seed.

    Childless incomes are profile(age) + noise; parents additionally get
    child_effect(event time). Ages are uniform over the age range at
    whole-day resolution.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.age_range
    day_lo = math.ceil(lo * DAYS_PER_YEAR)
    day_hi = math.floor(hi * DAYS_PER_YEAR)

    records: list[RespondentRecord] = []

    childless_genders = _gender_split(spec.n_childless, spec.fraction_female)
    days_c = rng.integers(day_lo, day_hi + 1, size=spec.n_childless)
    noise_c = rng.normal(0.0, spec.noise_sd, size=spec.n_childless)
    ages_c = days_c / DAYS_PER_YEAR
    income_c = np.empty(spec.n_childless)
    for gender in GENDERS:
        mask = np.array([g == gender for g in childless_genders], dtype=bool)
        if mask.any():
            income_c[mask] = spec.profile_at(gender, ages_c[mask])
    income_c += noise_c
    for i in range(spec.n_childless):
        records.append(
            RespondentRecord(
                respondent_id=f"c{i:06d}",
                gender=childless_genders[i],  # type: ignore[arg-type]
                age_w1=float(ages_c[i]),
                parenthood="childless",
                event_time_years=None,
                income=float(income_c[i]),
                hours_weekly=spec.hours_value,
                income_source="exact",
            )
        )

    parent_genders = _gender_split(spec.n_parents, spec.fraction_female)
    days_p = rng.integers(day_lo, day_hi + 1, size=spec.n_parents)
    dist = spec.age_at_birth_dist
    birth_age_years = np.exp(rng.normal(dist.mu, dist.sigma, size=spec.n_parents))
    noise_p = rng.normal(0.0, spec.noise_sd, size=spec.n_parents)
    birth_age_days = np.round(birth_age_years * DAYS_PER_YEAR).astype(int)
    event_days = days_p - birth_age_days
    ages_p = days_p / DAYS_PER_YEAR
    event_times = event_days / DAYS_PER_YEAR
    income_p = np.empty(spec.n_parents)
    for gender in GENDERS:
        mask = np.array([g == gender for g in parent_genders], dtype=bool)
        if mask.any():
            income_p[mask] = spec.profile_at(gender, ages_p[mask]) + spec.effect_at(
                gender, event_times[mask]
            )
    income_p += noise_p
    for i in range(spec.n_parents):
        records.append(
            RespondentRecord(
                respondent_id=f"p{i:06d}",
                gender=parent_genders[i],  # type: ignore[arg-type]
                age_w1=float(ages_p[i]),
                parenthood="parent",
                event_time_years=float(event_times[i]),
                income=float(income_p[i]),
                hours_weekly=spec.hours_value,
                income_source="exact",
            )
        )

    return records


def write_population_raw(
    records: Iterable[RespondentRecord],
    path: str | Path,
    delimiter: str = ",",
    interview_date: dt.date = DEFAULT_INTERVIEW_DATE,
) -> None:
    """Write records in the raw survey layout the ingester consumes.

    Dates are reconstructed from the day counts behind the fractional
    ages, so ingesting the file reproduces the records exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow([DEFAULT_SCHEMA[f] for f in LOGICAL_FIELDS])
        for r in records:
            age_days = round(r.age_w1 * DAYS_PER_YEAR)
            birth = interview_date - dt.timedelta(days=age_days)
            first_child = ""
            if r.event_time_years is not None:
                event_days = round(r.event_time_years * DAYS_PER_YEAR)
                first_child = (interview_date - dt.timedelta(days=event_days)).isoformat()
            writer.writerow(
                [
                    r.respondent_id,
                    r.gender,
                    birth.isoformat(),
                    interview_date.isoformat(),
                    first_child,
                    "yes" if r.parenthood == "parent" else
                    ("no" if r.parenthood == "childless" else ""),
                    "" if r.income is None else repr(float(r.income)),
                    "",  # income_band
                    "0",  # no_income_flag
                    "0",  # refused_flag
                    "" if r.hours_weekly is None else repr(float(r.hours_weekly)),
                    "",  # hours_additional_jobs
                ]
            )


# ---------------------------------------------------------------------------
# validation harness


def _max_abs_z(
    analytical_means: np.ndarray, mc_means: np.ndarray, mc_se: np.ndarray
) -> float:
    both = np.isfinite(analytical_means) & np.isfinite(mc_means) & np.isfinite(mc_se)
    if not both.any():
        return math.nan
    zs = []
    for i in np.flatnonzero(both):
        diff = abs(analytical_means[i] - mc_means[i])
        if mc_se[i] > 0:
            zs.append(diff / mc_se[i])
        else:
            # noiseless estimate: agreement must be exact up to rounding
            zs.append(0.0 if diff < 1e-9 * max(1.0, abs(analytical_means[i])) else math.inf)
    return float(max(zs))


def _sqrt_m_ratio(
    childless: Sequence[RespondentRecord],
    pmf: AgeAtEventPMF,
    tau_range: tuple[int, int],
    rounds: int,
    seed: int,
) -> dict:
    """Measured noise-reduction ratio from averaging M random assignments.

    Compares the across-repetition sd of single-draw estimates with the
    across-repetition sd of M-draw-averaged estimates on the same fixed
    population; the per-lag ratios are summarized by their median.
    """
    m = pmf.m
    n_singles = max(rounds, 30)
    singles = np.stack(
        [
            monte_carlo_placebo(childless, pmf, tau_range, draws=1, seed=seed * 1_000_003 + k).means
            for k in range(n_singles)
        ]
    )
    averaged = np.stack(
        [
            monte_carlo_placebo(
                childless, pmf, tau_range, draws=m, seed=(seed + 1) * 1_000_003 + r
            ).means
            for r in range(rounds)
        ]
    )

    def column_sd(matrix: np.ndarray) -> np.ndarray:
        valid = np.isfinite(matrix)
        n = valid.sum(axis=0)
        filled = np.where(valid, matrix, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(n > 0, filled.sum(axis=0) / n, np.nan)
        centered = np.where(valid, matrix - mean, 0.0)
        out = np.full(matrix.shape[1], np.nan)
        multi = n > 1
        out[multi] = np.sqrt((centered**2).sum(axis=0)[multi] / (n[multi] - 1))
        return out

    sd_single = column_sd(singles)
    sd_avg = column_sd(averaged)
    usable = np.isfinite(sd_single) & np.isfinite(sd_avg) & (sd_avg > 0) & (sd_single > 0)
    ratio = float(np.median(sd_single[usable] / sd_avg[usable])) if usable.any() else math.nan
    expected = math.sqrt(m)
    return {
        "m": m,
        "measured_ratio": ratio,
        "expected_sqrt_m": expected,
        "within_half_double": bool(expected / 2.0 <= ratio <= 2.0 * expected)
        if math.isfinite(ratio)
        else False,
    }


def run_validation(
    spec: PopulationSpec,
    draws: int = 2000,
    rounds: int = 40,
    *,
    bin_width: BinWidth = "yearly",
    support_years: tuple[int, int] = (15, 49),
    tau_range_years: tuple[int, int] = (-5, 15),
    sqrt_m_bin_widths: Sequence[BinWidth] = ("yearly",),
) -> dict:
    """End-to-end check of the estimators on a population with known truth.

    Returns a JSON-ready report with three sections per the harness
    contract: (a) the closed-form placebo (population weighting) against
    the Monte Carlo mean, in MC standard-error units; (b) the recovered
    event effect (parents minus placebo) against the planted effect, in
    combined standard-error units; (c) the measured noise-reduction ratio
    against sqrt(M).
    """
    if draws < 100:
        raise ValueError("draws must be >= 100 for a meaningful oracle comparison")
    records = generate_population(spec)
    childless = [r for r in records if r.parenthood == "childless"]
    parents = [r for r in records if r.parenthood == "parent"]

    per = BINS_PER_YEAR[bin_width]
    support = support_in_bins(support_years, bin_width)
    tau_range = (tau_range_years[0] * per, (tau_range_years[1] + 1) * per - 1)
    pmf = discretize_pmf(spec.age_at_birth_dist, bin_width, support)

    report: dict = {
        "seed": spec.seed,
        "draws": draws,
        "rounds": rounds,
        "bin_width": bin_width,
        "support": list(support),
        "tau_range": list(tau_range),
        "oracle": {},
        "effect_recovery": {},
        "sqrt_m": {},
    }

    for gender in GENDERS:
        childless_g = [r for r in childless if r.gender == gender]
        parents_g = [r for r in parents if r.gender == gender]
        if not childless_g or not parents_g:
            continue
        stats = age_group_stats(childless_g, "income", bin_width=bin_width)
        placebo = analytical_placebo(stats, pmf, tau_range, weighting="population_weighted")
        mc = monte_carlo_placebo(
            childless_g, pmf, tau_range, draws=draws, seed=spec.seed + 101, outcome="income"
        )
        report["oracle"][gender] = {
            "max_abs_z": _max_abs_z(placebo.means, mc.means, mc.std_errors),
            "draws": draws,
        }

        treated = parent_trajectory(parents_g, "income", tau_range, bin_width=bin_width)
        recovered = treated.means - placebo.means
        combined_var = np.diag(treated.covariance) + np.diag(placebo.covariance)
        truth = np.array(
            [spec.effect_bin_average(gender, int(t), per) for t in placebo.taus]
        )
        defined = np.isfinite(recovered)
        deviations = np.where(defined, recovered - truth, np.nan)
        zs = np.full(truth.shape, np.nan)
        for i in np.flatnonzero(defined):
            se = math.sqrt(combined_var[i]) if combined_var[i] > 0 else 0.0
            if se > 0:
                zs[i] = abs(deviations[i]) / se
            else:
                zs[i] = 0.0 if abs(deviations[i]) < 1e-9 * max(1.0, abs(truth[i])) else math.inf
        finite_dev = deviations[np.isfinite(deviations)]
        finite_z = zs[np.isfinite(zs)]
        report["effect_recovery"][gender] = {
            "taus": [int(t) for t in placebo.taus[defined]],
            "recovered": [float(x) for x in recovered[defined]],
            "truth": [float(x) for x in truth[defined]],
            "combined_se": [float(math.sqrt(v)) if v > 0 else 0.0 for v in combined_var[defined]],
            "max_abs_deviation": float(np.max(np.abs(finite_dev))) if finite_dev.size else math.nan,
            "max_abs_z": float(np.max(finite_z)) if finite_z.size else math.inf,
        }

    for width in sqrt_m_bin_widths:
        w_support = support_in_bins(support_years, width)
        w_per = BINS_PER_YEAR[width]
        w_tau = (tau_range_years[0] * w_per, (tau_range_years[1] + 1) * w_per - 1)
        w_pmf = discretize_pmf(spec.age_at_birth_dist, width, w_support)
        report["sqrt_m"][width] = _sqrt_m_ratio(
            childless, w_pmf, w_tau, rounds=rounds, seed=spec.seed + 211
        )

    report["passed"] = {
        "oracle_within_3se": all(
            g["max_abs_z"] <= 3.0 for g in report["oracle"].values() if math.isfinite(g["max_abs_z"])
        )
        and bool(report["oracle"]),
        "recovery_within_2se": all(
            g["max_abs_z"] <= 2.0 for g in report["effect_recovery"].values()
        )
        and bool(report["effect_recovery"]),
        "sqrt_m_within_half_double": all(
            entry["within_half_double"] for entry in report["sqrt_m"].values()
        )
        and bool(report["sqrt_m"]),
    }
    return report


DEFAULT_VALIDATION_SPEC = dict(
    n_childless=2000,
    n_parents=2000,
    age_range=(18.0, 60.0),
    income_profile={
        "female": ((18.0, 2000.0), (60.0, 3400.0)),
        "male": ((18.0, 2000.0), (60.0, 3400.0)),
    },
    child_effect={
        "female": ((0.0, -600.0), (10.0, -600.0)),
        "male": ((0.0, 200.0), (15.0, 200.0)),
    },
    noise_sd=300.0,
    seed=20260809,
)


def default_validation_spec(**overrides) -> PopulationSpec:
    """Convenience spec used by the command line when none is configured."""
    params = dict(DEFAULT_VALIDATION_SPEC)
    params.update(overrides)
    params.setdefault("age_at_birth_dist", LognormalParams(mu=3.30, sigma=0.17))
    return PopulationSpec(**params)
