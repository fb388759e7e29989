"""Survey microdata ingestion.

Parses delimiter-separated survey files into raw rows and resolves each
row into a canonical respondent record: post-tax monthly income, weekly
working hours, parenthood status, and signed event time (years between
the first-wave interview and the first childbirth).

Resolution rules
----------------
Income is resolved in strict priority order: an exact amount wins over a
band, a band wins over the no-income flag, and a refusal or fully missing
answer yields a missing income. Banded income maps to the band midpoint;
an open-ended top band maps to its lower bound. Respondents who report
having no income get both income and weekly hours imputed as zero; they
stay in every aggregate rather than being dropped as missing.

All functions here are pure transformations of their inputs and can be
called concurrently without locking.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal

from .errors import (
    ConfigError,
    DataError,
    DuplicateId,
    InvalidBand,
    InvalidEventDate,
    InvalidHours,
    MalformedHeader,
)

DAYS_PER_YEAR = 365.25

Gender = Literal["female", "male"]
Parenthood = Literal["parent", "childless", "excluded"]
IncomeSource = Literal["exact", "band_midpoint", "zero_imputed", "missing"]
TriState = Literal["yes", "no", "unknown"]

#: Logical field names every input schema must map to physical columns.
LOGICAL_FIELDS = (
    "respondent_id",
    "gender",
    "birth_date",
    "interview_date_w1",
    "first_child_birth_date",
    "has_children_w2",
    "income_exact",
    "income_band",
    "no_income_flag",
    "refused_flag",
    "hours_main_job",
    "hours_additional_jobs",
)

DEFAULT_SCHEMA = {name: name for name in LOGICAL_FIELDS}

#: Event ages (parent's age at first birth) outside this window are flagged
#: in the parse report but never excluded.
PLAUSIBLE_EVENT_AGE = (12.0, 60.0)

_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{1,2})(?:-(\d{1,2}))?)?$")


@dataclass(frozen=True, slots=True)
class PartialDate:
    """Calendar date whose month and day may be unknown."""

    year: int
    month: int | None = None
    day: int | None = None

    def resolve(self) -> dt.date:
        """Impute a missing month or day as the first of the year/month."""
        return dt.date(self.year, self.month or 1, self.day or 1)

    @property
    def is_complete(self) -> bool:
        return self.month is not None and self.day is not None

    def isoformat(self) -> str:
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"

    @staticmethod
    def parse(text: str) -> "PartialDate | None":
        """Parse ISO-8601 (full or year-month) or a bare year; None if invalid."""
        m = _DATE_RE.match(text.strip())
        if m is None:
            return None
        year = int(m.group(1))
        month = int(m.group(2)) if m.group(2) else None
        day = int(m.group(3)) if m.group(3) else None
        candidate = PartialDate(year, month, day)
        try:
            candidate.resolve()
        except ValueError:
            return None
        return candidate


@dataclass(frozen=True, slots=True)
class RawRespondentRow:
    """One survey row as parsed, before any resolution logic.

    Unparseable or empty cells are represented as None / 'unknown' /
    False, never as silent defaults with data-like values.
    """

    respondent_id: str
    gender: Gender | None = None
    birth_date: PartialDate | None = None
    interview_date_w1: PartialDate | None = None
    first_child_birth_date: PartialDate | None = None
    has_children_w2: TriState = "unknown"
    income_exact: float | None = None
    income_band: int | None = None
    no_income_flag: bool = False
    refused_flag: bool = False
    hours_main_job: float | None = None
    hours_additional_jobs: float | None = None


@dataclass(frozen=True, slots=True)
class RespondentRecord:
    """Canonical resolved respondent."""

    respondent_id: str
    gender: Gender
    age_w1: float
    parenthood: Parenthood
    event_time_years: float | None
    income: float | None
    hours_weekly: float | None
    income_source: IncomeSource

    def __post_init__(self) -> None:
        if self.parenthood == "parent" and self.event_time_years is None:
            raise ValueError("parent record requires event_time_years")
        if self.parenthood != "parent" and self.event_time_years is not None:
            raise ValueError("event_time_years only defined for parents")
        if self.income_source == "zero_imputed" and (
            self.income != 0.0 or self.hours_weekly != 0.0
        ):
            raise ValueError("zero_imputed requires income = 0 and hours = 0")


@dataclass(frozen=True, slots=True)
class IncomeBand:
    band_id: int
    lower: float
    upper: float | None  # None marks an open-ended top band


@dataclass(frozen=True)
class IncomeBandTable:
    """Ordered table of 13 income bands with a midpoint rule.

    Closed bands resolve to their midpoint; an open-ended band resolves
    to its lower bound.
    """

    bands: tuple[IncomeBand, ...]

    def __post_init__(self) -> None:
        if len(self.bands) != 13:
            raise ConfigError(f"band_table: expected 13 bands, got {len(self.bands)}")
        ids = [b.band_id for b in self.bands]
        if ids != list(range(1, 14)):
            raise ConfigError("band_table: band ids must be 1..13 in order")
        prev_upper = None
        for b in self.bands:
            if b.upper is not None and not b.lower < b.upper:
                raise ConfigError(f"band_table: band {b.band_id} has lower >= upper")
            if prev_upper is not None and b.lower < prev_upper:
                raise ConfigError(f"band_table: band {b.band_id} overlaps its predecessor")
            if b.upper is None and b is not self.bands[-1]:
                raise ConfigError("band_table: only the top band may be open-ended")
            prev_upper = b.upper if b.upper is not None else b.lower
        if any(self.bands[i].lower >= self.bands[i + 1].lower for i in range(12)):
            raise ConfigError("band_table: bands must ascend")

    def midpoint(self, band_id: int) -> float:
        if not 1 <= band_id <= 13:
            raise InvalidBand(f"income band {band_id} outside 1..13")
        band = self.bands[band_id - 1]
        if band.upper is None:
            return float(band.lower)
        return (band.lower + band.upper) / 2.0


#: Default band boundaries (currency units per month) for the two-wave
#: Polish survey layout this engine was built around. The survey card
#: defines 13 bands with an open "10,000+" top band; override the table
#: via configuration when your instrument differs.
DEFAULT_BAND_TABLE = IncomeBandTable(
    bands=(
        IncomeBand(1, 0.0, 500.0),
        IncomeBand(2, 500.0, 1000.0),
        IncomeBand(3, 1000.0, 1500.0),
        IncomeBand(4, 1500.0, 2000.0),
        IncomeBand(5, 2000.0, 2500.0),
        IncomeBand(6, 2500.0, 3000.0),
        IncomeBand(7, 3000.0, 4000.0),
        IncomeBand(8, 4000.0, 5000.0),
        IncomeBand(9, 5000.0, 6000.0),
        IncomeBand(10, 6000.0, 7000.0),
        IncomeBand(11, 7000.0, 8500.0),
        IncomeBand(12, 8500.0, 10000.0),
        IncomeBand(13, 10000.0, None),
    )
)


@dataclass
class ParseReport:
    """Per-field missingness counts plus data-quality flags."""

    n_rows: int = 0
    n_records: int = 0
    missing_counts: dict[str, int] = field(default_factory=dict)
    dropped_rows: int = 0
    implausible_event_age_ids: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_records": self.n_records,
            "missing_counts": dict(sorted(self.missing_counts.items())),
            "dropped_rows": self.dropped_rows,
            "implausible_event_age_ids": list(self.implausible_event_age_ids),
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# cell parsers


def _parse_gender(text: str) -> Gender | None:
    t = text.strip().casefold()
    if t in ("female", "f"):
        return "female"
    if t in ("male", "m"):
        return "male"
    return None


def _parse_tristate(text: str) -> TriState:
    t = text.strip().casefold()
    if t in ("yes", "y", "1", "true"):
        return "yes"
    if t in ("no", "n", "0", "false"):
        return "no"
    return "unknown"


def _parse_bool(text: str) -> bool | None:
    t = text.strip().casefold()
    if t in ("1", "true", "yes", "y"):
        return True
    if t in ("0", "false", "no", "n", ""):
        return False
    return None


def _parse_float(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    return value if value == value else None  # reject NaN cells


def _parse_int(text: str) -> int | None:
    try:
        return int(text.strip())
    except ValueError:
        return None


def parse_survey_file(
    path: str | Path,
    schema: dict[str, str] | None = None,
    delimiter: str = ",",
) -> tuple[list[RawRespondentRow], ParseReport]:
    """Parse a delimiter-separated survey file into raw rows.

    Parameters
    ----------
    path : str or Path
        Input file with a header row.
    schema : dict, optional
        Mapping from every logical field name in ``LOGICAL_FIELDS`` to the
        physical column name in the file. Defaults to the identity mapping.
    delimiter : str
        Cell separator.

    Returns
    -------
    (rows, report)
        One ``RawRespondentRow`` per usable input row, and a
        ``ParseReport`` with per-field missingness counts. Unparseable
        cells become absent values and are counted, never defaulted.

    Raises
    ------
    ConfigError
        The schema does not map every logical field.
    DataError
        Missing file.
    MalformedHeader
        A mapped column is absent from the header.
    DuplicateId
        Two rows share a respondent id (fatal: rows cannot be matched).
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    unmapped = [f for f in LOGICAL_FIELDS if f not in schema]
    if unmapped:
        raise ConfigError(f"schema: missing column mapping for {', '.join(unmapped)}")

    p = Path(path)
    if not p.is_file():
        raise DataError(f"file not found: {p}")

    report = ParseReport(missing_counts={f: 0 for f in LOGICAL_FIELDS})
    rows: list[RawRespondentRow] = []
    seen_ids: set[str] = set()

    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise MalformedHeader(f"{p}: empty file, no header row")
        missing_cols = [schema[f] for f in LOGICAL_FIELDS if schema[f] not in reader.fieldnames]
        if missing_cols:
            raise MalformedHeader(f"{p}: header lacks columns {', '.join(missing_cols)}")

        for lineno, raw in enumerate(reader, start=2):
            report.n_rows += 1

            def cell(logical: str) -> str:
                value = raw.get(schema[logical])
                return "" if value is None else value.strip()

            def miss(logical: str) -> None:
                report.missing_counts[logical] += 1

            rid = cell("respondent_id")
            if rid == "":
                miss("respondent_id")
                report.dropped_rows += 1
                report.warnings.append(f"line {lineno}: missing respondent_id, row dropped")
                continue
            if rid in seen_ids:
                raise DuplicateId(f"line {lineno}: duplicate respondent_id {rid!r}")
            seen_ids.add(rid)

            def parse_date(logical: str) -> PartialDate | None:
                text = cell(logical)
                if text == "":
                    miss(logical)
                    return None
                value = PartialDate.parse(text)
                if value is None:
                    miss(logical)
                    report.warnings.append(f"line {lineno}: unparseable {logical} {text!r}")
                return value

            def parse_num(logical: str, conv) -> float | int | None:
                text = cell(logical)
                if text == "":
                    miss(logical)
                    return None
                value = conv(text)
                if value is None:
                    miss(logical)
                    report.warnings.append(f"line {lineno}: unparseable {logical} {text!r}")
                return value

            gender_text = cell("gender")
            gender = _parse_gender(gender_text) if gender_text else None
            if gender is None:
                miss("gender")
                if gender_text:
                    report.warnings.append(f"line {lineno}: unparseable gender {gender_text!r}")

            tri_text = cell("has_children_w2")
            tri = _parse_tristate(tri_text)
            if tri == "unknown":
                miss("has_children_w2")

            def parse_flag(logical: str) -> bool:
                text = cell(logical)
                if text == "":
                    miss(logical)
                    return False
                value = _parse_bool(text)
                if value is None:
                    miss(logical)
                    report.warnings.append(f"line {lineno}: unparseable {logical} {text!r}")
                    return False
                return value

            rows.append(
                RawRespondentRow(
                    respondent_id=rid,
                    gender=gender,
                    birth_date=parse_date("birth_date"),
                    interview_date_w1=parse_date("interview_date_w1"),
                    first_child_birth_date=parse_date("first_child_birth_date"),
                    has_children_w2=tri,
                    income_exact=parse_num("income_exact", _parse_float),
                    income_band=parse_num("income_band", _parse_int),
                    no_income_flag=parse_flag("no_income_flag"),
                    refused_flag=parse_flag("refused_flag"),
                    hours_main_job=parse_num("hours_main_job", _parse_float),
                    hours_additional_jobs=parse_num("hours_additional_jobs", _parse_float),
                )
            )

    return rows, report


# ---------------------------------------------------------------------------
# row resolution


def resolve_income(
    row: RawRespondentRow, bands: IncomeBandTable = DEFAULT_BAND_TABLE
) -> tuple[float | None, IncomeSource]:
    """Resolve income in priority order: exact > band > no-income flag.

    A refusal or fully missing answer resolves to (None, "missing").
    """
    if row.income_exact is not None:
        return float(row.income_exact), "exact"
    if row.income_band is not None:
        return bands.midpoint(row.income_band), "band_midpoint"
    if row.no_income_flag:
        return 0.0, "zero_imputed"
    return None, "missing"


def resolve_hours(row: RawRespondentRow) -> float | None:
    """Total weekly hours: main job plus additional jobs.

    The no-income flag forces zero hours even when hour fields are
    populated (respondents without income are not working). With no flag
    and no hour fields the result is absent, not zero.
    """
    for value in (row.hours_main_job, row.hours_additional_jobs):
        if value is not None and value < 0:
            raise InvalidHours(f"{row.respondent_id}: negative hours {value}")
    if row.no_income_flag:
        return 0.0
    present = [v for v in (row.hours_main_job, row.hours_additional_jobs) if v is not None]
    if not present:
        return None
    return float(sum(present))


def classify_parenthood(row: RawRespondentRow) -> Parenthood:
    """Partition a row into childless / parent / excluded.

    Childless requires an explicit "no children by wave 2"; a parent
    requires a known first-child birth date (year suffices); everything
    else, including children with unknown birth year, is excluded.
    """
    if row.has_children_w2 == "no":
        return "childless"
    if row.first_child_birth_date is not None:
        return "parent"
    return "excluded"


def compute_event_time(
    row: RawRespondentRow, *, wave2_cutoff: dt.date | None = None
) -> float | None:
    """Signed fractional years from first childbirth to the wave-1 interview.

    Missing month/day components are imputed as the first month/day of
    the year. Negative values are valid: they are births after the
    wave-1 interview (observed at wave 2), the anticipation window.
    """
    if row.first_child_birth_date is None or row.interview_date_w1 is None:
        return None
    birth = row.first_child_birth_date.resolve()
    interview = row.interview_date_w1.resolve()
    if wave2_cutoff is not None and birth > wave2_cutoff:
        raise InvalidEventDate(
            f"{row.respondent_id}: first-child birth {birth.isoformat()} "
            f"after wave-2 cutoff {wave2_cutoff.isoformat()}"
        )
    return (interview - birth).days / DAYS_PER_YEAR


def age_at_interview(row: RawRespondentRow) -> float | None:
    """Respondent age in fractional years at the wave-1 interview."""
    if row.birth_date is None or row.interview_date_w1 is None:
        return None
    days = (row.interview_date_w1.resolve() - row.birth_date.resolve()).days
    return days / DAYS_PER_YEAR


def build_record(
    row: RawRespondentRow,
    bands: IncomeBandTable = DEFAULT_BAND_TABLE,
    *,
    wave2_cutoff: dt.date | None = None,
) -> RespondentRecord | None:
    """Resolve one raw row into a canonical record.

    Returns None when identity or demographics are unusable (missing
    gender, birth date, or interview date); such rows cannot enter any
    age-indexed aggregate.
    """
    if row.gender is None or row.birth_date is None or row.interview_date_w1 is None:
        return None
    age = age_at_interview(row)
    assert age is not None
    income, source = resolve_income(row, bands)
    hours = resolve_hours(row)
    parenthood = classify_parenthood(row)
    event_time = None
    if parenthood == "parent":
        event_time = compute_event_time(row, wave2_cutoff=wave2_cutoff)
    return RespondentRecord(
        respondent_id=row.respondent_id,
        gender=row.gender,
        age_w1=age,
        parenthood=parenthood,
        event_time_years=event_time,
        income=income,
        hours_weekly=hours,
        income_source=source,
    )


def build_records(
    rows: Iterable[RawRespondentRow],
    bands: IncomeBandTable = DEFAULT_BAND_TABLE,
    *,
    wave2_cutoff: dt.date | None = None,
    report: ParseReport | None = None,
) -> tuple[list[RespondentRecord], ParseReport]:
    """Resolve raw rows into records, flagging implausible event ages.

    A parent whose age at first birth falls outside ``PLAUSIBLE_EVENT_AGE``
    is flagged in the report but kept.
    """
    report = report if report is not None else ParseReport()
    records: list[RespondentRecord] = []
    for row in rows:
        record = build_record(row, bands, wave2_cutoff=wave2_cutoff)
        if record is None:
            report.dropped_rows += 1
            report.warnings.append(
                f"{row.respondent_id}: missing gender or dates, row dropped"
            )
            continue
        if record.parenthood == "parent" and record.event_time_years is not None:
            age_at_birth = record.age_w1 - record.event_time_years
            lo, hi = PLAUSIBLE_EVENT_AGE
            if not lo <= age_at_birth <= hi:
                report.implausible_event_age_ids.append(record.respondent_id)
        records.append(record)
    report.n_records = len(records)
    return records, report


def ingest_file(
    path: str | Path,
    schema: dict[str, str] | None = None,
    bands: IncomeBandTable = DEFAULT_BAND_TABLE,
    *,
    delimiter: str = ",",
    wave2_cutoff: dt.date | None = None,
) -> tuple[list[RespondentRecord], ParseReport]:
    """Parse and resolve a survey file in one step."""
    rows, report = parse_survey_file(path, schema, delimiter)
    return build_records(rows, bands, wave2_cutoff=wave2_cutoff, report=report)


# ---------------------------------------------------------------------------
# canonical respondent table

RECORD_COLUMNS = (
    "respondent_id",
    "gender",
    "age_w1",
    "parenthood",
    "event_time_years",
    "income",
    "hours_weekly",
    "income_source",
)


def _fmt(value: float | None) -> str:
    # repr round-trips doubles exactly through the text table
    return "" if value is None else repr(float(value))


def write_records(
    records: Iterable[RespondentRecord], path: str | Path, delimiter: str = ","
) -> None:
    """Write the canonical respondent table."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.respondent_id,
                    r.gender,
                    _fmt(r.age_w1),
                    r.parenthood,
                    _fmt(r.event_time_years),
                    _fmt(r.income),
                    _fmt(r.hours_weekly),
                    r.income_source,
                ]
            )


def read_records(path: str | Path, delimiter: str = ",") -> list[RespondentRecord]:
    """Read a canonical respondent table written by :func:`write_records`."""
    p = Path(path)
    if not p.is_file():
        raise DataError(f"file not found: {p}")
    records = []
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None or list(reader.fieldnames) != list(RECORD_COLUMNS):
            raise MalformedHeader(f"{p}: not a canonical respondent table")
        for raw in reader:
            def num(col: str) -> float | None:
                text = (raw[col] or "").strip()
                return None if text == "" else float(text)

            records.append(
                RespondentRecord(
                    respondent_id=raw["respondent_id"],
                    gender=raw["gender"],  # type: ignore[arg-type]
                    age_w1=float(raw["age_w1"]),
                    parenthood=raw["parenthood"],  # type: ignore[arg-type]
                    event_time_years=num("event_time_years"),
                    income=num("income"),
                    hours_weekly=num("hours_weekly"),
                    income_source=raw["income_source"],  # type: ignore[arg-type]
                )
            )
    return records
