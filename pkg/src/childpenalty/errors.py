"""Exception hierarchy shared across the package.

Three error classes map onto command-line exit codes: configuration
errors exit 2, data errors exit 3, numerical failures exit 4.
"""


class EngineError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigError(EngineError):
    """Invalid configuration (bad field value, missing schema entry)."""

    exit_code = 2


class DataError(EngineError):
    """Input data violates a contract the engine cannot repair."""

    exit_code = 3


class NumericalError(EngineError):
    """An estimator cannot produce a defined result from valid inputs."""

    exit_code = 4


# survey ingestion
class DuplicateId(DataError):
    """Two rows share a respondent id; the ambiguity cannot be resolved."""


class MalformedHeader(DataError):
    """The input file header does not contain the mapped columns."""


class InvalidBand(DataError):
    """Income band identifier outside the configured band table."""


class InvalidHours(DataError):
    """Negative weekly hours."""


class InvalidEventDate(DataError):
    """First-child birth date after the second-wave cutoff."""


# event distribution
class NonPositiveAge(DataError):
    """Ages must be strictly positive to fit a lognormal."""


class DegenerateSample(NumericalError):
    """Too few distinct ages to identify the distribution."""


class EmptySupport(NumericalError):
    """The requested support carries essentially no probability mass."""


# trajectories
class EmptyPopulation(DataError):
    """No respondents left after filtering."""


class NoOverlap(NumericalError):
    """Every event-time bin has zero placebo weight."""


# counterfactual gaps
class AllCellsEmpty(DataError):
    """No respondent has a populated childless reference cell."""


class EmptyGender(DataError):
    """A gender has no usable predictions to average."""


class ZeroReference(NumericalError):
    """Gap undefined because the reference (male) mean is zero."""


class ZeroHours(DataError):
    """Hourly wage requires strictly positive weekly hours."""


# synthetic populations
class InvalidSpec(ConfigError):
    """Synthetic population specification is internally inconsistent."""
