"""Parenthood effects on labor-market outcomes.

Estimation toolkit built around two ideas:

* event-time trajectories where childless controls get a *placebo*
  first-birth event, evaluated analytically (the exact expectation of
  random placebo assignment) so randomization noise vanishes and the
  full covariance across lags is available in closed form;
* a counterfactual scenario in which the whole population is childless,
  built from childless age-cell means, to measure how much of the
  observed gender gaps in income and wages parenthood accounts for.

Everything operates on a canonical respondent record resolved from raw
survey rows; synthetic populations with known ground truth validate each
estimator end to end.
"""

__version__ = "0.1.0"

from .errors import (
    AllCellsEmpty,
    ConfigError,
    DataError,
    DegenerateSample,
    DuplicateId,
    EmptyGender,
    EmptyPopulation,
    EmptySupport,
    EngineError,
    InvalidBand,
    InvalidEventDate,
    InvalidHours,
    InvalidSpec,
    MalformedHeader,
    NonPositiveAge,
    NoOverlap,
    NumericalError,
    ZeroHours,
    ZeroReference,
)
from .event_dist import (
    AgeAtEventPMF,
    LognormalParams,
    discretize_pmf,
    empirical_pmf,
    fit_lognormal,
    support_in_bins,
)
from .gaps import (
    CellMeanModel,
    CounterfactualAverages,
    CounterfactualPrediction,
    GapReport,
    WEEKS_PER_MONTH,
    average_counterfactual,
    bootstrap_gap,
    fit_age_cell_model,
    gender_gap,
    hourly_wage,
    predict_counterfactual,
    round_age_to_multiple_of_5,
)
from .ingest import (
    DEFAULT_BAND_TABLE,
    DEFAULT_SCHEMA,
    IncomeBand,
    IncomeBandTable,
    ParseReport,
    PartialDate,
    RawRespondentRow,
    RespondentRecord,
    age_at_interview,
    build_record,
    build_records,
    classify_parenthood,
    compute_event_time,
    ingest_file,
    parse_survey_file,
    read_records,
    resolve_hours,
    resolve_income,
    write_records,
)
from .synth import (
    PopulationSpec,
    default_validation_spec,
    generate_population,
    run_validation,
    write_population_raw,
)
from .trajectory import (
    AgeGroupStats,
    FULL_TIME_HOURS,
    TrajectoryEstimate,
    age_group_stats,
    analytical_placebo,
    monte_carlo_placebo,
    outcome_value,
    parent_trajectory,
    placebo_covariance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
