"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with ``pytest tests/test_acceptance.py -v -s``).

Statistical criteria run with pinned seeds so the suite is deterministic;
the seeds were chosen once and the checks run at the stated tolerances.
"""

from __future__ import annotations

import csv
import json
import math
import time

import numpy as np
import pytest

from childpenalty import (
    AgeAtEventPMF,
    AgeGroupStats,
    LognormalParams,
    PopulationSpec,
    age_group_stats,
    analytical_placebo,
    bootstrap_gap,
    discretize_pmf,
    fit_age_cell_model,
    fit_lognormal,
    generate_population,
    monte_carlo_placebo,
    parent_trajectory,
    placebo_covariance,
    resolve_hours,
    resolve_income,
    classify_parenthood,
    round_age_to_multiple_of_5,
    run_validation,
    write_population_raw,
)
from childpenalty.cli import main
from childpenalty.ingest import PartialDate, RawRespondentRow
from conftest import make_record, sloped_childless_population

DIST = LognormalParams(mu=3.30, sigma=0.17)


def report(number: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    print(f"\n[criterion {number:02d}] {name}: {status}  {detail}")
    assert passed, f"criterion {number:02d} ({name}) failed: {detail}"


def random_pmf(rng) -> AgeAtEventPMF:
    a_min = int(rng.integers(15, 30))
    a_max = a_min + int(rng.integers(3, 25))
    masses = rng.random(a_max - a_min + 1) + 1e-3
    return AgeAtEventPMF("yearly", a_min, a_max, masses / masses.sum())


def covering_stats(pmf, tau_range, rng, constant=None):
    bins = range(pmf.a_min + tau_range[0], pmf.a_max + tau_range[1] + 1)
    return [
        AgeGroupStats(
            b,
            constant if constant is not None else float(rng.normal(1000, 400)),
            float(rng.uniform(0, 4)),
            int(rng.integers(1, 40)),
        )
        for b in bins
    ]


def test_criterion_01_convolution_exactness():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    worst_constant = 0.0
    for _ in range(1000):
        tau = (-int(rng.integers(0, 5)), int(rng.integers(1, 9)))
        pmf = random_pmf(rng)

        c = float(rng.uniform(-1000, 1000))
        stats = covering_stats(pmf, tau, rng, constant=c)
        for weighting in ("pmf_only", "population_weighted"):
            est = analytical_placebo(stats, pmf, tau, weighting)
            deviation = np.max(np.abs(est.means - c))
            worst_constant = max(worst_constant, deviation / max(1.0, abs(c)))

        anchor = int(rng.integers(pmf.a_min, pmf.a_max + 1))
        width = pmf.m
        degenerate_masses = np.zeros(width)
        degenerate_masses[anchor - pmf.a_min] = 1.0
        degenerate = AgeAtEventPMF("yearly", pmf.a_min, pmf.a_max, degenerate_masses)
        stats = covering_stats(degenerate, tau, rng)
        by_bin = {s.age_bin: s.mean for s in stats}
        est = analytical_placebo(stats, degenerate, tau)
        for i, t in enumerate(est.taus):
            assert est.means[i] == by_bin[anchor + t]  # exact shift identity
    elapsed = time.perf_counter() - start
    report(
        1,
        "convolution exactness (1000 randomized cases)",
        worst_constant <= 1e-12 and elapsed < 5.0,
        f"max relative deviation {worst_constant:.2e}, runtime {elapsed:.2f}s",
    )


def test_criterion_02_oracle_equivalence():
    start = time.perf_counter()
    records = sloped_childless_population(2000, seed=101)  # beta-shaped, non-uniform ages
    pmf = discretize_pmf(DIST, "yearly", (15, 49))
    stats = age_group_stats(records, "income")
    analytical = analytical_placebo(stats, pmf, (-5, 15), "population_weighted")
    mc = monte_carlo_placebo(records, pmf, (-5, 15), draws=10_000, seed=102)
    se = mc.std_errors
    both = np.isfinite(analytical.means) & np.isfinite(mc.means) & (se > 0)
    z = np.abs(analytical.means[both] - mc.means[both]) / se[both]
    elapsed = time.perf_counter() - start
    report(
        2,
        "oracle equivalence at 10,000 draws",
        bool(both.sum() == 21 and z.max() <= 3.0 and elapsed < 60.0),
        f"max |z| {z.max():.2f} over {both.sum()} lags, runtime {elapsed:.1f}s",
    )


def test_criterion_03_zero_randomization_noise():
    records = sloped_childless_population(500, seed=31)
    pmf = discretize_pmf(DIST, "yearly", (15, 49))
    stats = age_group_stats(records, "income")

    references = None
    identical = True
    single_draws = []
    for seed in range(10):
        # interleave differently-seeded MC runs to witness that no hidden
        # global randomness can leak into the analytical path
        mc = monte_carlo_placebo(records, pmf, (-5, 15), draws=1, seed=seed)
        single_draws.append(mc.means)
        est = analytical_placebo(stats, pmf, (-5, 15))
        payload = (est.means.tobytes(), est.covariance.tobytes())
        if references is None:
            references = payload
        identical = identical and payload == references

    mc_differs = any(
        not np.array_equal(single_draws[0], other, equal_nan=True) for other in single_draws[1:]
    )
    report(
        3,
        "zero randomization noise",
        identical and mc_differs,
        "analytical bit-identical across 10 runs; single-draw MC varies with the seed",
    )


def test_criterion_04_sqrt_m_soft_check():
    start = time.perf_counter()
    spec = PopulationSpec(
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
        age_at_birth_dist=DIST,
        seed=28,
    )
    result = run_validation(
        spec, draws=200, rounds=30, sqrt_m_bin_widths=("yearly", "monthly")
    )
    yearly = result["sqrt_m"]["yearly"]
    monthly = result["sqrt_m"]["monthly"]
    elapsed = time.perf_counter() - start
    yearly_ok = (
        yearly["m"] == 35
        and math.sqrt(35) / 2 <= yearly["measured_ratio"] <= 2 * math.sqrt(35)
    )
    monthly_ok = 6.0 <= monthly["measured_ratio"] <= 24.0
    report(
        4,
        "sqrt(M) noise-reduction soft check",
        yearly_ok and monthly_ok and elapsed < 300.0,
        f"yearly ratio {yearly['measured_ratio']:.2f} (M=35), "
        f"monthly ratio {monthly['measured_ratio']:.2f} (M={monthly['m']}), "
        f"runtime {elapsed:.1f}s",
    )


def test_criterion_05_covariance_against_linear_map_oracle():
    rng = np.random.default_rng(5005)
    worst_rel = 0.0
    worst_psd = 0.0
    for _ in range(100):
        pmf = random_pmf(rng)
        tau = (-int(rng.integers(0, 4)), int(rng.integers(1, 8)))
        stats = covering_stats(pmf, tau, rng)
        weighting = "population_weighted" if rng.random() < 0.5 else "pmf_only"
        cov = placebo_covariance(stats, pmf, tau, weighting)

        # independent oracle: explicit linear map L, then L diag(v) L'
        taus = list(range(tau[0], tau[1] + 1))
        rows = []
        for t in taus:
            weights = []
            for s in stats:
                w = float(pmf.mass_at(np.array([s.age_bin - t]))[0])
                if weighting == "population_weighted":
                    w *= s.count
                weights.append(w)
            total = sum(weights)
            rows.append([w / total for w in weights])
        L = np.array(rows)
        oracle = L @ np.diag([s.variance_of_mean for s in stats]) @ L.T

        scale = max(np.abs(oracle).max(), 1e-300)
        worst_rel = max(worst_rel, float(np.max(np.abs(cov - oracle)) / scale))
        eigenvalues = np.linalg.eigvalsh(cov)
        trace = float(np.trace(cov))
        worst_psd = max(worst_psd, float(-eigenvalues.min() / trace) if trace > 0 else 0.0)
    report(
        5,
        "covariance equals linear-map oracle (100 fixtures)",
        worst_rel < 1e-10 and worst_psd <= 1e-9,
        f"max relative error {worst_rel:.2e}, worst eigenvalue/trace {worst_psd:.2e}",
    )


def test_criterion_06_ground_truth_recovery():
    spec = PopulationSpec(
        n_childless=5000,
        n_parents=5000,
        age_range=(18.0, 60.0),
        income_profile={
            "female": ((18.0, 3000.0), (60.0, 3000.0)),
            "male": ((18.0, 3000.0), (60.0, 3000.0)),
        },
        child_effect={
            # mothers lose 20 percent of the 3000 base over event years 0..10
            "female": ((0.0, -600.0), (10.0, -600.0)),
            "male": ((0.0, 0.0), (10.0, 0.0)),
        },
        noise_sd=300.0,
        age_at_birth_dist=DIST,
        seed=52,
    )
    records = generate_population(spec)
    mothers = [r for r in records if r.parenthood == "parent" and r.gender == "female"]
    childless_women = [r for r in records if r.parenthood == "childless" and r.gender == "female"]
    pmf = discretize_pmf(DIST, "yearly", (15, 49))
    placebo = analytical_placebo(
        age_group_stats(childless_women, "income"), pmf, (-5, 15), "population_weighted"
    )
    treated = parent_trajectory(mothers, "income", (-5, 15))
    recovered = treated.means - placebo.means
    truth = np.array([-600.0 if 0 <= t <= 9 else 0.0 for t in placebo.taus])
    se = np.sqrt(np.diag(treated.covariance) + np.diag(placebo.covariance))
    both = np.isfinite(recovered) & (se > 0)
    z = np.abs(recovered[both] - truth[both]) / se[both]
    report(
        6,
        "recovery of a -20% mothers' dip at n=5000",
        bool(both.sum() == 21 and z.max() <= 2.0),
        f"max |z| {z.max():.2f} across {both.sum()} lags",
    )


def test_criterion_07_counterfactual_null_calibration():
    base = 1000
    hits = 0
    worlds = 50
    for w in range(worlds):
        spec = PopulationSpec(
            n_childless=2000,
            n_parents=0,
            age_range=(22.0, 55.0),
            income_profile={
                "female": ((22.0, 2200.0), (55.0, 3600.0)),
                "male": ((22.0, 2200.0), (55.0, 3600.0)),
            },
            child_effect={"female": ((0.0, 0.0),), "male": ((0.0, 0.0),)},
            noise_sd=400.0,
            age_at_birth_dist=DIST,
            seed=base + w,
        )
        records = generate_population(spec)
        gap = bootstrap_gap(records, outcome="income", rounds=50, seed=base + w)
        if abs(gap.counterfactual_gap) < 2 * gap.bootstrap_sd_counterfactual:
            hits += 1
    report(
        7,
        "counterfactual gap null calibration",
        hits >= 0.9 * worlds,
        f"{hits}/{worlds} gender-symmetric worlds within 2 bootstrap sd",
    )


def test_criterion_08_saturated_regression_equivalence():
    rng = np.random.default_rng(88)
    all_exact = True
    for _ in range(20):
        records = []
        for i in range(int(rng.integers(40, 200))):
            parent = rng.random() < 0.5
            records.append(
                make_record(
                    respondent_id=f"r{i}",
                    gender="female" if rng.random() < 0.5 else "male",
                    age_w1=float(rng.uniform(18, 60)),
                    parenthood="parent" if parent else "childless",
                    event_time_years=float(rng.uniform(-2, 12)) if parent else None,
                    income=float(rng.normal(2500, 700)),
                )
            )
        model = fit_age_cell_model(records, "income")
        cells = {}
        for r in records:
            key = (r.gender, 1 if r.parenthood == "parent" else 0, round_age_to_multiple_of_5(r.age_w1))
            cells.setdefault(key, []).append(r.income)
        brute = {k: float(np.mean(np.asarray(v))) for k, v in cells.items()}
        all_exact = all_exact and model.coefficients == brute
    report(8, "saturated-regression equivalence", all_exact, "cell means equal brute force exactly")


def test_criterion_09_ingestion_golden_rules():
    def row(**kwargs):
        defaults = dict(
            respondent_id="x",
            gender="female",
            birth_date=PartialDate(1980, 1, 1),
            interview_date_w1=PartialDate(2010, 6, 15),
        )
        defaults.update(kwargs)
        return RawRespondentRow(**defaults)

    checks = [
        resolve_income(row(income_band=3)) == (1250.0, "band_midpoint"),
        resolve_income(row(income_band=13)) == (10000.0, "band_midpoint"),
        resolve_income(row(no_income_flag=True)) == (0.0, "zero_imputed"),
        resolve_hours(row(no_income_flag=True)) == 0.0,
        resolve_hours(row(hours_main_job=40.0, hours_additional_jobs=5.0)) == 45.0,
        classify_parenthood(row(has_children_w2="no")) == "childless",
        classify_parenthood(row(first_child_birth_date=PartialDate(2005, 3, 1))) == "parent",
        classify_parenthood(row(has_children_w2="yes")) == "excluded",
    ]
    report(9, "ingestion golden rules", all(checks), f"{sum(checks)}/{len(checks)} golden fixtures")


def test_criterion_10_lognormal_recovery():
    rng = np.random.default_rng(1010)
    ages = np.exp(rng.normal(3.30, 0.17, 100_000))
    params = fit_lognormal(ages)
    mu_err = abs(params.mu - 3.30) / 3.30
    sigma_err = abs(params.sigma - 0.17) / 0.17
    report(
        10,
        "lognormal refit on 1e5 self-generated draws",
        mu_err < 0.01 and sigma_err < 0.01,
        f"relative errors mu {mu_err:.2e}, sigma {sigma_err:.2e}",
    )


def test_criterion_11_pipeline_shape_on_survey_formatted_fixture(tmp_path):
    spec = PopulationSpec(
        n_childless=600,
        n_parents=600,
        age_range=(20.0, 58.0),
        income_profile={
            "female": ((20.0, 2200.0), (58.0, 3400.0)),
            "male": ((20.0, 2500.0), (58.0, 3900.0)),
        },
        child_effect={
            "female": ((0.0, -500.0), (10.0, -500.0)),
            "male": ((0.0, 250.0), (15.0, 250.0)),
        },
        noise_sd=350.0,
        age_at_birth_dist=DIST,
        seed=77,
    )
    raw = tmp_path / "raw.csv"
    write_population_raw(generate_population(spec), raw)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"input": str(raw), "out_dir": str(tmp_path / "out"), "seed": 4}))

    ok = main(["trajectory", "--config", str(config)]) == 0
    ok = ok and main(["gap", "--config", str(config)]) == 0

    out = tmp_path / "out"
    expected_columns = {
        "outcome", "group", "tau", "mean", "std_error", "weight_sum", "count", "flags",
    }
    expected_groups = {"mothers", "fathers", "placebo_female", "placebo_male"}
    for outcome in ("income", "income_full_time", "hours", "full_time_share"):
        with open(out / f"trajectory_{outcome}.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        ok = ok and set(rows[0]) == expected_columns
        ok = ok and {row["group"] for row in rows} == expected_groups
        taus = sorted({int(row["tau"]) for row in rows})
        ok = ok and taus == list(range(-5, 16))
    for outcome in ("income", "wage"):
        payload = json.loads((out / f"gap_{outcome}.json").read_text())
        ok = ok and payload["rounds"] == 50
        with open(out / f"gap_{outcome}_plot.csv", newline="") as fh:
            plot_rows = list(csv.DictReader(fh))
        ok = ok and [r["scenario"] for r in plot_rows] == ["observed", "counterfactual"]
    report(
        11,
        "pipeline emits figure-shaped tables on a survey-formatted fixture",
        ok,
        "trajectory and gap tables carry the expected columns, groups, and lag range",
    )
