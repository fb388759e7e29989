from __future__ import annotations

import numpy as np
import pytest

from childpenalty import (
    AllCellsEmpty,
    EmptyGender,
    WEEKS_PER_MONTH,
    ZeroHours,
    ZeroReference,
    average_counterfactual,
    bootstrap_gap,
    fit_age_cell_model,
    gender_gap,
    hourly_wage,
    predict_counterfactual,
    round_age_to_multiple_of_5,
)
from conftest import make_record


def brute_force_cell_means(records, outcome="income"):
    """Independent grouping loop; the interesting logic under test is the
    rounding and keying, so the per-cell mean uses the same np.mean."""
    cells = {}
    for r in records:
        if r.parenthood == "excluded":
            continue
        value = r.income if outcome == "income" else r.hours_weekly
        if value is None:
            continue
        child = 1 if r.parenthood == "parent" else 0
        k = round_age_to_multiple_of_5(r.age_w1)
        cells.setdefault((r.gender, child, k), []).append(value)
    return {key: float(np.mean(np.asarray(vals))) for key, vals in cells.items()}


def symmetric_population(n_per_gender=400, seed=0, gap=0.0):
    rng = np.random.default_rng(seed)
    records = []
    i = 0
    for gender in ("female", "male"):
        offset = -gap if gender == "female" else 0.0
        ages = rng.uniform(25, 50, n_per_gender)
        incomes = 2000.0 + 30.0 * ages + offset + rng.normal(0, 250, n_per_gender)
        for age, income in zip(ages, incomes):
            records.append(
                make_record(
                    respondent_id=f"r{i}", gender=gender, age_w1=float(age), income=float(income)
                )
            )
            i += 1
    return records


# ---------------------------------------------------------------------------
# rounding and cells


def test_age_rounding_fixture():
    assert round_age_to_multiple_of_5(23) == 25
    assert round_age_to_multiple_of_5(27) == 25
    assert round_age_to_multiple_of_5(22.5) == 25  # tie goes up
    assert round_age_to_multiple_of_5(27.5) == 30
    assert round_age_to_multiple_of_5(32.4) == 30


def test_cell_means_match_brute_force_exactly():
    rng = np.random.default_rng(3)
    records = []
    for i in range(300):
        parent = rng.random() < 0.5
        records.append(
            make_record(
                respondent_id=f"r{i}",
                gender="female" if rng.random() < 0.6 else "male",
                age_w1=float(rng.uniform(18, 60)),
                parenthood="parent" if parent else "childless",
                event_time_years=float(rng.uniform(-2, 12)) if parent else None,
                income=float(rng.normal(2500, 600)),
            )
        )
    model = fit_age_cell_model(records, "income")
    assert model.coefficients == brute_force_cell_means(records)


def test_cell_model_matches_saturated_least_squares():
    records = [
        make_record(respondent_id="a", gender="female", age_w1=23.0, income=100.0),
        make_record(respondent_id="b", gender="female", age_w1=24.0, income=300.0),
        make_record(respondent_id="c", gender="female", age_w1=33.0, income=700.0),
        make_record(respondent_id="d", gender="male", age_w1=23.0, income=900.0),
    ]
    model = fit_age_cell_model(records, "income")
    # saturated dummy regression per (gender, child) group: one indicator
    # per rounded age, solved by least squares
    keys = sorted(k for k in model.coefficients if k[0] == "female")
    ages = [round_age_to_multiple_of_5(r.age_w1) for r in records if r.gender == "female"]
    y = np.array([r.income for r in records if r.gender == "female"])
    design = np.array([[1.0 if round5 == k[2] else 0.0 for k in keys] for round5 in ages])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    for key, estimate in zip(keys, beta):
        assert model.coefficients[key] == pytest.approx(estimate, abs=1e-9)


def test_one_respondent_per_cell():
    records = [make_record(respondent_id="a", age_w1=31.0, income=1234.0)]
    model = fit_age_cell_model(records, "income")
    assert model.coefficients[("female", 0, 30)] == 1234.0


def test_cell_with_two_values_averages():
    records = [
        make_record(respondent_id="a", age_w1=31.0, income=10.0),
        make_record(respondent_id="b", age_w1=29.0, income=20.0),
    ]
    model = fit_age_cell_model(records, "income")
    assert model.coefficients[("female", 0, 30)] == 15.0


# ---------------------------------------------------------------------------
# counterfactual predictions


def test_childless_prediction_is_self_consistent():
    records = [make_record(respondent_id="a", age_w1=30.0, income=500.0)]
    model = fit_age_cell_model(records, "income")
    preds = predict_counterfactual(model, records)
    assert preds[0].value == 500.0


def test_parent_lookup_uses_childless_cell():
    records = [
        make_record(respondent_id="a", gender="female", age_w1=30.0, income=500.0),
        make_record(
            respondent_id="b",
            gender="female",
            age_w1=32.0,
            parenthood="parent",
            event_time_years=3.0,
            income=100.0,
        ),
    ]
    model = fit_age_cell_model(records, "income")
    preds = predict_counterfactual(model, records)
    # parent aged 32 rounds to 30 and receives the childless cell mean
    assert preds[1].value == 500.0


def test_parent_only_cell_is_flagged_excluded():
    records = [
        make_record(respondent_id="a", gender="female", age_w1=30.0, income=500.0),
        make_record(
            respondent_id="b",
            gender="female",
            age_w1=47.0,
            parenthood="parent",
            event_time_years=9.0,
            income=900.0,
        ),
    ]
    model = fit_age_cell_model(records, "income")
    preds = predict_counterfactual(model, records)
    assert preds[1].value is None
    averages = average_counterfactual(preds)
    assert averages.means["female"] == 500.0
    assert averages.n_excluded["female"] == 1
    assert averages.n_included["female"] == 1


def test_all_cells_empty():
    records = [
        make_record(
            respondent_id="b",
            age_w1=47.0,
            parenthood="parent",
            event_time_years=9.0,
            income=900.0,
        )
    ]
    model = fit_age_cell_model(records, "income")
    with pytest.raises(AllCellsEmpty):
        predict_counterfactual(model, records)


def test_average_counterfactual_trivial_cases():
    from childpenalty import CounterfactualPrediction

    preds = [CounterfactualPrediction(str(i), "female", 1000.0) for i in range(4)]
    assert average_counterfactual(preds).means["female"] == 1000.0
    preds = [
        CounterfactualPrediction("a", "male", 1000.0),
        CounterfactualPrediction("b", "male", 3000.0),
    ]
    assert average_counterfactual(preds).means["male"] == 2000.0
    with pytest.raises(EmptyGender):
        average_counterfactual([CounterfactualPrediction("a", "male", None)])


# ---------------------------------------------------------------------------
# gap arithmetic


def test_gap_zero_when_equal():
    assert gender_gap(1000.0, 1000.0) == 0.0


def test_gap_thirty_three_percent():
    assert gender_gap(670.0, 1000.0) == pytest.approx(0.33)


def test_gap_negative_when_women_earn_more():
    assert gender_gap(1100.0, 1000.0) == pytest.approx(-0.1)


def test_gap_zero_reference():
    with pytest.raises(ZeroReference):
        gender_gap(500.0, 0.0)


def test_hourly_wage_example():
    assert WEEKS_PER_MONTH == 4.33
    assert hourly_wage(3464.0, 40.0) == pytest.approx(20.0)


def test_hourly_wage_zero_hours():
    with pytest.raises(ZeroHours):
        hourly_wage(1000.0, 0.0)


def test_hourly_wage_linearity():
    assert hourly_wage(2000.0, 40.0) == pytest.approx(2 * hourly_wage(1000.0, 40.0))


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_single_round_has_no_sd():
    report = bootstrap_gap(symmetric_population(100, seed=1), rounds=1, seed=0)
    assert report.bootstrap_sd_observed is None
    assert report.bootstrap_sd_counterfactual is None
    assert report.rounds == 1


def test_bootstrap_same_seed_identical():
    records = symmetric_population(150, seed=2)
    a = bootstrap_gap(records, rounds=20, seed=9)
    b = bootstrap_gap(records, rounds=20, seed=9)
    assert a == b
    c = bootstrap_gap(records, rounds=20, seed=10)
    assert c.bootstrap_sd_observed != a.bootstrap_sd_observed


def test_bootstrap_scale_equivariance():
    records = symmetric_population(150, seed=4, gap=400.0)
    scaled = [
        make_record(
            respondent_id=r.respondent_id,
            gender=r.gender,
            age_w1=r.age_w1,
            income=r.income * 3.0,
        )
        for r in records
    ]
    a = bootstrap_gap(records, rounds=10, seed=0)
    b = bootstrap_gap(scaled, rounds=10, seed=0)
    assert b.observed_gap == pytest.approx(a.observed_gap, abs=1e-12)
    assert b.counterfactual_gap == pytest.approx(a.counterfactual_gap, abs=1e-12)


def test_no_gender_effect_population_has_small_counterfactual_gap():
    report = bootstrap_gap(symmetric_population(2000, seed=5), rounds=30, seed=1)
    assert abs(report.counterfactual_gap) < 3 * report.bootstrap_sd_counterfactual


def test_bootstrap_sd_shrinks_with_replication():
    base = symmetric_population(200, seed=6, gap=300.0)
    replicated = []
    for k in range(9):
        for r in base:
            replicated.append(
                make_record(
                    respondent_id=f"{r.respondent_id}_{k}",
                    gender=r.gender,
                    age_w1=r.age_w1,
                    income=r.income,
                )
            )
    small = bootstrap_gap(base, rounds=30, seed=3)
    big = bootstrap_gap(replicated, rounds=30, seed=3)
    assert big.bootstrap_sd_observed < small.bootstrap_sd_observed
    assert big.bootstrap_sd_counterfactual < small.bootstrap_sd_counterfactual


def test_gap_report_serialization_and_plot_rows():
    report = bootstrap_gap(symmetric_population(120, seed=8), rounds=5, seed=0)
    data = report.to_json_dict()
    assert data["rounds"] == 5
    assert set(data["n_excluded_counterfactual"]) <= {"female", "male"}
    rows = report.plot_rows()
    assert [row["scenario"] for row in rows] == ["observed", "counterfactual"]
    # normalized means hover around 1 by construction
    assert rows[0]["mean_female"] == pytest.approx(
        report.observed_mean_f / report.normalization_base
    )


def test_wage_outcome_requires_positive_hours():
    records = [
        make_record(respondent_id="a", gender="female", age_w1=30.0, income=3464.0, hours_weekly=40.0),
        make_record(respondent_id="b", gender="male", age_w1=30.0, income=3464.0, hours_weekly=40.0),
        # zero hours cannot enter the wage panel
        make_record(respondent_id="c", gender="male", age_w1=30.0, income=0.0, hours_weekly=0.0,
                    income_source="zero_imputed"),
    ]
    report = bootstrap_gap(records, outcome="wage", rounds=2, seed=0)
    assert report.n_respondents == 2
    assert report.observed_mean_m == pytest.approx(20.0)
    assert report.observed_gap == pytest.approx(0.0)
