"""Observed and counterfactual gender gaps in income and wages.

The counterfactual asks what the gender gap would be if nobody had
children. Outcomes are modeled as saturated means over cells of gender,
child status, and age rounded to the nearest multiple of five (a dummy
regression on age indicators collapses to exactly these cell means).
Every respondent, parent or not, is then assigned the childless cell
mean of their own gender and rounded age; averaging those predictions
per gender yields the counterfactual means, compared with raw observed
means of the same sample. Uncertainty comes from an i.i.d. bootstrap
over whole respondent records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .errors import (
    AllCellsEmpty,
    EmptyGender,
    EmptyPopulation,
    ZeroHours,
    ZeroReference,
)
from .ingest import RespondentRecord

GapOutcome = Literal["income", "hours", "wage"]

#: Weeks per month used to convert monthly income to hourly wages.
WEEKS_PER_MONTH = 4.33

GENDERS = ("female", "male")

RecordFilter = Callable[[RespondentRecord], bool]


def round_age_to_multiple_of_5(age: float) -> int:
    """Round to the nearest multiple of 5, ties at exact .5 going up."""
    return int(math.floor(age / 5.0 + 0.5)) * 5


def hourly_wage(income: float, hours: float) -> float:
    """Hourly wage from monthly income and weekly hours."""
    if hours <= 0:
        raise ZeroHours(f"hours must be positive, got {hours}")
    return income / (hours * WEEKS_PER_MONTH)


def gender_gap(mean_f: float, mean_m: float) -> float:
    """Relative gap 1 - female/male; negative when women earn more."""
    if mean_m == 0:
        raise ZeroReference("male mean is zero, gap undefined")
    return 1.0 - mean_f / mean_m


def _gap_value(record: RespondentRecord, outcome: GapOutcome) -> float | None:
    if outcome == "income":
        return record.income
    if outcome == "hours":
        return record.hours_weekly
    if outcome == "wage":
        if record.income is None or not record.hours_weekly:
            return None
        return hourly_wage(record.income, record.hours_weekly)
    raise ValueError(f"unknown outcome {outcome!r}")


@dataclass(frozen=True)
class CellMeanModel:
    """Saturated cell means over (gender, child dummy, rounded age)."""

    coefficients: dict[tuple[str, int, int], float]
    cell_counts: dict[tuple[str, int, int], int]
    outcome: GapOutcome = "income"


@dataclass(frozen=True)
class CounterfactualPrediction:
    """Childless-reference prediction for one respondent.

    ``value`` is None when the (gender, childless, rounded age) cell is
    empty; such respondents are excluded from averages and counted.
    """

    respondent_id: str
    gender: str
    value: float | None


@dataclass(frozen=True)
class CounterfactualAverages:
    means: dict[str, float]
    n_included: dict[str, int]
    n_excluded: dict[str, int]


def fit_age_cell_model(
    records: Iterable[RespondentRecord],
    outcome: GapOutcome = "income",
    where: RecordFilter | None = None,
) -> CellMeanModel:
    """Fit cell means over (gender, child dummy, age rounded to 5s).

    Records with excluded parenthood or an absent outcome are skipped;
    empty cells are absent from the map rather than zero-filled.
    """
    cells: dict[tuple[str, int, int], list[float]] = {}
    for r in records:
        if where is not None and not where(r):
            continue
        if r.parenthood == "excluded":
            continue
        value = _gap_value(r, outcome)
        if value is None:
            continue
        key = (r.gender, 1 if r.parenthood == "parent" else 0, round_age_to_multiple_of_5(r.age_w1))
        cells.setdefault(key, []).append(value)
    if not cells:
        raise EmptyPopulation(f"no respondents with outcome {outcome!r} after filtering")
    coefficients = {k: float(np.mean(np.asarray(v))) for k, v in cells.items()}
    counts = {k: len(v) for k, v in cells.items()}
    return CellMeanModel(coefficients=coefficients, cell_counts=counts, outcome=outcome)


def predict_counterfactual(
    model: CellMeanModel, records: Iterable[RespondentRecord]
) -> list[CounterfactualPrediction]:
    """Assign each respondent the childless cell mean of their gender and age."""
    predictions = []
    for r in records:
        key = (r.gender, 0, round_age_to_multiple_of_5(r.age_w1))
        predictions.append(
            CounterfactualPrediction(r.respondent_id, r.gender, model.coefficients.get(key))
        )
    if predictions and all(p.value is None for p in predictions):
        raise AllCellsEmpty("no respondent has a populated childless reference cell")
    return predictions


def average_counterfactual(
    predictions: Sequence[CounterfactualPrediction],
) -> CounterfactualAverages:
    """Per-gender mean of non-excluded predictions, with exclusion counts."""
    means: dict[str, float] = {}
    included: dict[str, int] = {}
    excluded: dict[str, int] = {}
    for gender in sorted({p.gender for p in predictions}):
        values = [p.value for p in predictions if p.gender == gender and p.value is not None]
        n_all = sum(1 for p in predictions if p.gender == gender)
        if not values:
            raise EmptyGender(f"no usable counterfactual predictions for {gender}")
        means[gender] = float(np.mean(np.asarray(values)))
        included[gender] = len(values)
        excluded[gender] = n_all - len(values)
    return CounterfactualAverages(means, included, excluded)


@dataclass(frozen=True)
class GapReport:
    """Observed and counterfactual gender gaps with bootstrap dispersion.

    Gaps are 1 - female/male. Bootstrap standard deviations are None
    when fewer than two rounds succeeded. Normalized fields divide by
    ``normalization_base``, the pooled observed mean of the full sample.
    """

    outcome: GapOutcome
    observed_mean_f: float
    observed_mean_m: float
    counterfactual_mean_f: float
    counterfactual_mean_m: float
    observed_gap: float
    counterfactual_gap: float
    bootstrap_sd_observed: float | None
    bootstrap_sd_counterfactual: float | None
    rounds: int
    failed_rounds: int
    n_respondents: int
    n_excluded_counterfactual: dict[str, int]
    normalization_base: float
    bootstrap_sd_normalized: dict[str, float | None]

    def to_json_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "observed_mean_f": self.observed_mean_f,
            "observed_mean_m": self.observed_mean_m,
            "counterfactual_mean_f": self.counterfactual_mean_f,
            "counterfactual_mean_m": self.counterfactual_mean_m,
            "observed_gap": self.observed_gap,
            "counterfactual_gap": self.counterfactual_gap,
            "bootstrap_sd_observed": self.bootstrap_sd_observed,
            "bootstrap_sd_counterfactual": self.bootstrap_sd_counterfactual,
            "rounds": self.rounds,
            "failed_rounds": self.failed_rounds,
            "n_respondents": self.n_respondents,
            "n_excluded_counterfactual": dict(self.n_excluded_counterfactual),
            "normalization_base": self.normalization_base,
            "bootstrap_sd_normalized": dict(self.bootstrap_sd_normalized),
        }

    def plot_rows(self) -> list[dict]:
        """Two plot-ready rows: observed vs counterfactual means by gender,
        as multiples of the observed overall mean."""
        base = self.normalization_base
        sd = self.bootstrap_sd_normalized
        return [
            {
                "scenario": "observed",
                "mean_female": self.observed_mean_f / base,
                "mean_male": self.observed_mean_m / base,
                "sd_female": sd.get("observed_f"),
                "sd_male": sd.get("observed_m"),
                "gap": self.observed_gap,
                "gap_sd": self.bootstrap_sd_observed,
            },
            {
                "scenario": "counterfactual",
                "mean_female": self.counterfactual_mean_f / base,
                "mean_male": self.counterfactual_mean_m / base,
                "sd_female": sd.get("counterfactual_f"),
                "sd_male": sd.get("counterfactual_m"),
                "gap": self.counterfactual_gap,
                "gap_sd": self.bootstrap_sd_counterfactual,
            },
        ]


@dataclass(frozen=True)
class _GapArrays:
    """Vectorized view of the analysis sample for fast bootstrap rounds."""

    gender: np.ndarray  # 0 = female, 1 = male
    child: np.ndarray  # 0 = childless, 1 = parent
    age5_idx: np.ndarray  # rounded age divided by 5
    value: np.ndarray
    n_codes: int

    @property
    def n(self) -> int:
        return self.value.size

    def cell_codes(self, gender, child, age5_idx) -> np.ndarray:
        return (age5_idx * 2 + gender) * 2 + child


def _collect_sample(
    records: Iterable[RespondentRecord],
    outcome: GapOutcome,
    where: RecordFilter | None,
) -> tuple[list[RespondentRecord], _GapArrays]:
    sample = []
    gender = []
    child = []
    age5 = []
    value = []
    for r in records:
        if where is not None and not where(r):
            continue
        if r.parenthood == "excluded":
            continue
        v = _gap_value(r, outcome)
        if v is None:
            continue
        sample.append(r)
        gender.append(0 if r.gender == "female" else 1)
        child.append(1 if r.parenthood == "parent" else 0)
        age5.append(round_age_to_multiple_of_5(r.age_w1) // 5)
        value.append(v)
    if not sample:
        raise EmptyPopulation(f"no respondents with outcome {outcome!r} after filtering")
    age5_idx = np.asarray(age5)
    arrays = _GapArrays(
        gender=np.asarray(gender),
        child=np.asarray(child),
        age5_idx=age5_idx,
        value=np.asarray(value, dtype=float),
        n_codes=(int(age5_idx.max()) * 2 + 1) * 2 + 2,
    )
    return sample, arrays


def _round_estimates(arrays: _GapArrays, idx: np.ndarray) -> tuple[float, float, dict] | None:
    """One bootstrap round on resample ``idx``; None when a gap is undefined."""
    g = arrays.gender[idx]
    c = arrays.child[idx]
    k = arrays.age5_idx[idx]
    v = arrays.value[idx]
    if not (g == 0).any() or not (g == 1).any():
        return None
    codes = arrays.cell_codes(g, c, k)
    sums = np.bincount(codes, weights=v, minlength=arrays.n_codes)
    counts = np.bincount(codes, minlength=arrays.n_codes)
    ref_codes = arrays.cell_codes(g, np.zeros_like(c), k)
    ref_counts = counts[ref_codes]
    usable = ref_counts > 0
    if not usable.any():
        return None
    with np.errstate(invalid="ignore", divide="ignore"):
        cf = sums[ref_codes] / ref_counts

    means = {}
    for label, gi in (("f", 0), ("m", 1)):
        g_mask = g == gi
        cf_mask = g_mask & usable
        if not cf_mask.any():
            return None
        means[f"obs_{label}"] = float(v[g_mask].mean())
        means[f"cf_{label}"] = float(cf[cf_mask].mean())
    if means["obs_m"] == 0 or means["cf_m"] == 0:
        return None
    obs_gap = 1.0 - means["obs_f"] / means["obs_m"]
    cf_gap = 1.0 - means["cf_f"] / means["cf_m"]
    base = float(v.mean())
    normalized = {key: val / base for key, val in means.items()}
    return obs_gap, cf_gap, normalized


def bootstrap_gap(
    records: Iterable[RespondentRecord],
    outcome: GapOutcome = "income",
    where: RecordFilter | None = None,
    rounds: int = 50,
    seed: int = 0,
) -> GapReport:
    """Observed and counterfactual gaps with bootstrap standard deviations.

    Point estimates come from the full sample; each round resamples whole
    respondent records with replacement, refits the cell model, and
    recomputes both gaps. Rounds that lose a gender, empty every
    reference cell, or hit a zero male mean are skipped and counted.
    Randomness derives from ``(seed, round_index)``, so reports are
    reproducible and independent of execution order.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    sample, arrays = _collect_sample(records, outcome, where)

    model = fit_age_cell_model(sample, outcome)
    predictions = predict_counterfactual(model, sample)
    averages = average_counterfactual(predictions)
    for gender in GENDERS:
        if gender not in averages.means:
            raise EmptyGender(f"no respondents of gender {gender}")

    observed = {
        gender: float(np.mean([_gap_value(r, outcome) for r in sample if r.gender == gender]))
        for gender in GENDERS
    }
    observed_gap = gender_gap(observed["female"], observed["male"])
    counterfactual_gap_ = gender_gap(averages.means["female"], averages.means["male"])
    base = float(arrays.value.mean())

    obs_gaps = []
    cf_gaps = []
    normalized: dict[str, list[float]] = {k: [] for k in ("obs_f", "obs_m", "cf_f", "cf_m")}
    failed = 0
    for r in range(rounds):
        rng = np.random.default_rng([seed, r])
        idx = rng.integers(0, arrays.n, arrays.n)
        result = _round_estimates(arrays, idx)
        if result is None:
            failed += 1
            continue
        obs_gap_r, cf_gap_r, norm_r = result
        obs_gaps.append(obs_gap_r)
        cf_gaps.append(cf_gap_r)
        for key, val in norm_r.items():
            normalized[key].append(val)

    def sd(values: list[float]) -> float | None:
        return float(np.std(values, ddof=1)) if len(values) >= 2 else None

    return GapReport(
        outcome=outcome,
        observed_mean_f=observed["female"],
        observed_mean_m=observed["male"],
        counterfactual_mean_f=averages.means["female"],
        counterfactual_mean_m=averages.means["male"],
        observed_gap=observed_gap,
        counterfactual_gap=counterfactual_gap_,
        bootstrap_sd_observed=sd(obs_gaps),
        bootstrap_sd_counterfactual=sd(cf_gaps),
        rounds=rounds,
        failed_rounds=failed,
        n_respondents=arrays.n,
        n_excluded_counterfactual=dict(averages.n_excluded),
        normalization_base=base,
        bootstrap_sd_normalized={
            "observed_f": sd(normalized["obs_f"]),
            "observed_m": sd(normalized["obs_m"]),
            "counterfactual_f": sd(normalized["cf_f"]),
            "counterfactual_m": sd(normalized["cf_m"]),
        },
    )
