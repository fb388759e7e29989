from __future__ import annotations

import numpy as np
import pytest

from childpenalty import RespondentRecord


def make_record(
    respondent_id="r1",
    gender="female",
    age_w1=30.0,
    parenthood="childless",
    event_time_years=None,
    income=2000.0,
    hours_weekly=40.0,
    income_source="exact",
) -> RespondentRecord:
    return RespondentRecord(
        respondent_id=respondent_id,
        gender=gender,
        age_w1=age_w1,
        parenthood=parenthood,
        event_time_years=event_time_years,
        income=income,
        hours_weekly=hours_weekly,
        income_source=income_source,
    )


def sloped_childless_population(
    n: int,
    seed: int,
    gender: str = "female",
    age_lo: float = 18.0,
    age_hi: float = 62.0,
    base: float = 1500.0,
    slope: float = 45.0,
    noise_sd: float = 400.0,
    uniform: bool = False,
) -> list[RespondentRecord]:
    """Childless records with a linear age-income profile.

    Ages are beta(2, 3)-shaped by default so population weighting and
    PMF-only weighting genuinely differ.
    """
    rng = np.random.default_rng(seed)
    if uniform:
        ages = rng.uniform(age_lo, age_hi, n)
    else:
        ages = age_lo + (age_hi - age_lo) * rng.beta(2.0, 3.0, n)
    incomes = base + slope * ages + rng.normal(0.0, noise_sd, n)
    return [
        make_record(
            respondent_id=f"s{i:06d}",
            gender=gender,
            age_w1=float(ages[i]),
            parenthood="childless",
            income=float(incomes[i]),
        )
        for i in range(n)
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
