"""Run configuration: a flat JSON document with nested sections for the
column schema, the income band table, and the synthetic-population spec.

Command-line flags override file values field by field. A configuration
is fully serializable; replaying the echoed config reproduces a run
bit-identically (the manifest timestamp lives in its own field).
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .event_dist import LognormalParams
from .fileio import sha256_text
from .ingest import DEFAULT_SCHEMA, IncomeBand, IncomeBandTable, DEFAULT_BAND_TABLE
from .synth import PopulationSpec, default_validation_spec

_CHOICES = {
    "pmf_mode": ("lognormal", "empirical"),
    "bin_width": ("yearly", "monthly"),
    "weighting": ("pmf_only", "population_weighted"),
    "full_time_rule": ("exact_40", "at_least_40"),
    "event_time_binning": ("floor", "nearest"),
}

TRAJECTORY_OUTCOMES = ("income", "income_full_time", "hours", "full_time_share")
GAP_OUTCOMES = ("income", "wage")


@dataclass
class RunConfig:
    input: str | None = None
    out_dir: str = "out"
    delimiter: str = ","
    schema: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_SCHEMA))
    band_table: list = field(
        default_factory=lambda: [
            [b.band_id, b.lower, b.upper] for b in DEFAULT_BAND_TABLE.bands
        ]
    )
    pmf_mode: str = "lognormal"
    bin_width: str = "yearly"
    support: list = field(default_factory=lambda: [15, 49])  # years
    tau_range: list = field(default_factory=lambda: [-5, 15])  # years
    weighting: str = "pmf_only"
    outcomes: list = field(default_factory=lambda: list(TRAJECTORY_OUTCOMES))
    gap_outcomes: list = field(default_factory=lambda: list(GAP_OUTCOMES))
    full_time_rule: str = "exact_40"
    event_time_binning: str = "floor"
    bootstrap_rounds: int = 50
    validate_draws: int = 2000
    validate_rounds: int = 40
    seed: int = 0
    wave2_cutoff: str | None = None
    population_spec: dict | None = None

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def config_hash(self) -> str:
        return sha256_text(json.dumps(self.to_dict(), sort_keys=True))

    # resolved views -------------------------------------------------------

    def bands(self) -> IncomeBandTable:
        try:
            rows = [
                IncomeBand(int(b[0]), float(b[1]), None if b[2] is None else float(b[2]))
                for b in self.band_table
            ]
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"band_table: malformed entry ({exc})") from exc
        return IncomeBandTable(tuple(rows))

    def wave2_cutoff_date(self) -> dt.date | None:
        if self.wave2_cutoff is None:
            return None
        try:
            return dt.date.fromisoformat(self.wave2_cutoff)
        except ValueError as exc:
            raise ConfigError(f"wave2_cutoff: not an ISO date ({self.wave2_cutoff!r})") from exc

    def resolved_population_spec(self) -> PopulationSpec:
        if self.population_spec is None:
            return default_validation_spec(seed=self.seed)
        data = dict(self.population_spec)
        try:
            dist = data.pop("age_at_birth_dist", None)
            if dist is not None:
                data["age_at_birth_dist"] = LognormalParams(
                    mu=float(dist["mu"]),
                    sigma=float(dist["sigma"]),
                    n_fit=int(dist.get("n_fit", 2)),
                )
            for key in ("age_range",):
                if key in data:
                    data[key] = tuple(data[key])
            for key in ("income_profile", "child_effect"):
                if key in data:
                    data[key] = {
                        g: tuple((float(x), float(y)) for x, y in knots)
                        for g, knots in data[key].items()
                    }
            data.setdefault("seed", self.seed)
            spec = default_validation_spec(**data)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"population_spec: {exc}") from exc
        return spec

    # validation -----------------------------------------------------------

    def validate(self) -> None:
        for name, choices in _CHOICES.items():
            value = getattr(self, name)
            if value not in choices:
                raise ConfigError(f"{name}: must be one of {', '.join(choices)}, got {value!r}")
        if len(self.delimiter) != 1:
            raise ConfigError("delimiter: must be a single character")
        if not isinstance(self.schema, dict):
            raise ConfigError("schema: must be a mapping of logical field to column name")
        for key, pair_name in (("support", "support"), ("tau_range", "tau_range")):
            pair = getattr(self, key)
            if (
                not isinstance(pair, (list, tuple))
                or len(pair) != 2
                or not all(isinstance(v, int) for v in pair)
            ):
                raise ConfigError(f"{pair_name}: must be a pair of integers")
        if not self.support[0] < self.support[1]:
            raise ConfigError("support: lower bound must be below upper bound")
        if self.support[0] < 1:
            raise ConfigError("support: lower bound must be >= 1 year")
        if self.tau_range[0] > self.tau_range[1]:
            raise ConfigError("tau_range: lower bound must not exceed upper bound")
        for name in ("bootstrap_rounds", "validate_rounds"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be a positive integer")
        if not isinstance(self.validate_draws, int) or self.validate_draws < 100:
            raise ConfigError("validate_draws: must be an integer >= 100")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed: must be a non-negative integer")
        unknown_outcomes = [o for o in self.outcomes if o not in TRAJECTORY_OUTCOMES]
        if unknown_outcomes:
            raise ConfigError(
                f"outcomes: unknown {', '.join(map(str, unknown_outcomes))}; "
                f"choose from {', '.join(TRAJECTORY_OUTCOMES)}"
            )
        unknown_gaps = [o for o in self.gap_outcomes if o not in GAP_OUTCOMES]
        if unknown_gaps:
            raise ConfigError(
                f"gap_outcomes: unknown {', '.join(map(str, unknown_gaps))}; "
                f"choose from {', '.join(GAP_OUTCOMES)}"
            )
        self.bands()
        self.wave2_cutoff_date()


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus flag overrides."""
    data: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {p}: top level must be an object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**{k: v for k, v in data.items() if k in known})
    cfg.validate()
    return cfg
