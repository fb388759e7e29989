"""Command-line surface: ingest -> fit-dist -> trajectory -> gap -> validate.

Every command reads one JSON config (flags override fields), writes its
outputs atomically into the output directory, and records a manifest
with the config hash, input hashes, and per-file output hashes. Identical
configs and inputs produce byte-identical outputs; only the manifest's
timestamp field differs between runs.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import math
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .config import GAP_OUTCOMES, RunConfig, TRAJECTORY_OUTCOMES, load_config
from .errors import DataError, EngineError, EmptyPopulation
from .event_dist import discretize_pmf, empirical_pmf, fit_lognormal, support_in_bins
from .fileio import atomic_write_text, sha256_file, write_json_atomic
from .gaps import bootstrap_gap
from .ingest import RespondentRecord, ingest_file, write_records
from .synth import run_validation
from .trajectory import (
    FULL_TIME_HOURS,
    TrajectoryEstimate,
    age_group_stats,
    analytical_placebo,
    parent_trajectory,
)

GROUPS = {
    ("parent", "female"): "mothers",
    ("parent", "male"): "fathers",
    ("childless", "female"): "placebo_female",
    ("childless", "male"): "placebo_male",
}

TRAJECTORY_COLUMNS = ("outcome", "group", "tau", "mean", "std_error", "weight_sum", "count", "flags")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return "" if not math.isfinite(value) else repr(float(value))
    return str(value)


def _full_time_filter(rule: str) -> Callable[[RespondentRecord], bool]:
    if rule == "exact_40":
        return lambda r: r.hours_weekly is not None and r.hours_weekly == FULL_TIME_HOURS
    return lambda r: r.hours_weekly is not None and r.hours_weekly >= FULL_TIME_HOURS


def _outcome_plan(outcome: str, cfg: RunConfig):
    """Map a configured outcome label to (extractor name, record filter)."""
    if outcome == "income":
        return "income", None
    if outcome == "income_full_time":
        return "income", _full_time_filter(cfg.full_time_rule)
    if outcome == "hours":
        return "hours", None
    if outcome == "full_time_share":
        return "full_time_share", None
    raise ValueError(f"unknown outcome {outcome!r}")


def _require_input(cfg: RunConfig) -> Path:
    if cfg.input is None:
        raise DataError("no input file configured (set 'input' or pass --input)")
    return Path(cfg.input)


def _ingest(cfg: RunConfig):
    path = _require_input(cfg)
    return ingest_file(
        path,
        schema=cfg.schema,
        bands=cfg.bands(),
        delimiter=cfg.delimiter,
        wave2_cutoff=cfg.wave2_cutoff_date(),
    )


def _parent_birth_ages(records: Sequence[RespondentRecord], gender: str) -> list[float]:
    ages = []
    for r in records:
        if r.parenthood == "parent" and r.gender == gender and r.event_time_years is not None:
            age_at_birth = r.age_w1 - r.event_time_years
            if age_at_birth > 0:
                ages.append(age_at_birth)
    return ages


def _gender_pmf(records: Sequence[RespondentRecord], gender: str, cfg: RunConfig):
    """Fit the age-at-first-birth PMF for one gender's parents."""
    ages = _parent_birth_ages(records, gender)
    if not ages:
        raise EmptyPopulation(f"no parents of gender {gender} to fit the event distribution")
    support = support_in_bins(tuple(cfg.support), cfg.bin_width)
    params = None
    if cfg.pmf_mode == "lognormal":
        params = fit_lognormal(ages)
        pmf = discretize_pmf(params, cfg.bin_width, support)
    else:
        pmf = empirical_pmf(ages, cfg.bin_width, support)
    return params, pmf, len(ages)


def _tau_bins(cfg: RunConfig) -> tuple[int, int]:
    lo, hi = cfg.tau_range
    if cfg.bin_width == "monthly":
        return lo * 12, (hi + 1) * 12 - 1
    return lo, hi


def _manifest(cfg: RunConfig, command: str, out_dir: Path, outputs: dict[str, Path]) -> Path:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "input_hashes": (
            {str(cfg.input): sha256_file(cfg.input)} if cfg.input and Path(cfg.input).is_file() else {}
        ),
        "outputs": {rel: sha256_file(p) for rel, p in sorted(outputs.items())},
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
    }
    path = out_dir / f"manifest_{command.replace('-', '_')}.json"
    write_json_atomic(path, manifest)
    return path


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence], delimiter: str) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter=delimiter)
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buffer.getvalue())


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(cfg: RunConfig) -> dict[str, Path]:
    records, report = _ingest(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # canonical table goes through a sibling temp file, then a rename
    table = out_dir / "respondents.csv"
    tmp_path = out_dir / ".respondents.csv.tmp"
    write_records(records, tmp_path, delimiter=cfg.delimiter)
    tmp_path.replace(table)

    report_path = out_dir / "parse_report.json"
    write_json_atomic(report_path, report.to_json_dict())

    outputs = {"respondents.csv": table, "parse_report.json": report_path}
    _manifest(cfg, "ingest", out_dir, outputs)
    return outputs


def cmd_fit_dist(cfg: RunConfig) -> dict[str, Path]:
    records, _ = _ingest(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}
    support = support_in_bins(tuple(cfg.support), cfg.bin_width)
    for gender in ("female", "male"):
        ages = _parent_birth_ages(records, gender)
        if not ages:
            raise EmptyPopulation(f"no parents of gender {gender} to fit the event distribution")
        params = fit_lognormal(ages)
        lognormal = discretize_pmf(params, cfg.bin_width, support)
        empirical = empirical_pmf(ages, cfg.bin_width, support)
        payload = {
            "gender": gender,
            "n_parents": len(ages),
            "lognormal_params": params.to_json_dict(),
            "lognormal_pmf": lognormal.to_json_dict(),
            "empirical_pmf": empirical.to_json_dict(),
        }
        path = out_dir / f"pmf_{gender}.json"
        write_json_atomic(path, payload)
        outputs[path.name] = path
    _manifest(cfg, "fit-dist", out_dir, outputs)
    return outputs


def _trajectory_rows(est: TrajectoryEstimate, outcome: str, group: str) -> list[list]:
    rows = []
    std_errors = est.std_errors
    for i, tau in enumerate(est.taus):
        rows.append(
            [
                outcome,
                group,
                int(tau),
                _cell(est.means[i]),
                _cell(std_errors[i]),
                _cell(est.effective_weight_sums[i]),
                _cell(int(est.counts[i])) if est.counts is not None else "",
                ";".join(est.flags[i]) if est.flags else "",
            ]
        )
    return rows


def cmd_trajectory(cfg: RunConfig) -> dict[str, Path]:
    records, _ = _ingest(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}
    tau_bins = _tau_bins(cfg)

    pmfs = {gender: _gender_pmf(records, gender, cfg)[1] for gender in ("female", "male")}

    for outcome in cfg.outcomes:
        outcome_name, where = _outcome_plan(outcome, cfg)
        rows: list[list] = []
        estimates: dict[str, TrajectoryEstimate] = {}
        for gender in ("female", "male"):
            treated_label = GROUPS[("parent", gender)]
            placebo_label = GROUPS[("childless", gender)]

            parents_g = lambda r, g=gender: r.gender == g and (where is None or where(r))
            treated = parent_trajectory(
                records,
                outcome_name,
                tau_bins,
                where=parents_g,
                bin_width=cfg.bin_width,
                bin_mode=cfg.event_time_binning,
            )
            estimates[treated_label] = treated

            childless_g = [r for r in records if r.parenthood == "childless" and r.gender == gender]
            stats = age_group_stats(childless_g, outcome_name, where=where, bin_width=cfg.bin_width)
            placebo = analytical_placebo(stats, pmfs[gender], tau_bins, weighting=cfg.weighting)
            estimates[placebo_label] = placebo

        for label in ("mothers", "fathers", "placebo_female", "placebo_male"):
            rows.extend(_trajectory_rows(estimates[label], outcome, label))

        table_path = out_dir / f"trajectory_{outcome}.csv"
        _write_csv(table_path, TRAJECTORY_COLUMNS, rows, cfg.delimiter)
        outputs[table_path.name] = table_path
        for label, est in estimates.items():
            cov_path = out_dir / f"covariance_{outcome}_{label}.json"
            write_json_atomic(cov_path, est.covariance_json_dict())
            outputs[cov_path.name] = cov_path

    _manifest(cfg, "trajectory", out_dir, outputs)
    return outputs


def cmd_gap(cfg: RunConfig) -> dict[str, Path]:
    records, _ = _ingest(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}
    for outcome in cfg.gap_outcomes:
        where = None if outcome == "income" else _full_time_filter(cfg.full_time_rule)
        report = bootstrap_gap(
            records,
            outcome=outcome,  # type: ignore[arg-type]
            where=where,
            rounds=cfg.bootstrap_rounds,
            seed=cfg.seed,
        )
        json_path = out_dir / f"gap_{outcome}.json"
        write_json_atomic(json_path, report.to_json_dict())
        outputs[json_path.name] = json_path

        plot_path = out_dir / f"gap_{outcome}_plot.csv"
        plot_rows = report.plot_rows()
        header = ("scenario", "mean_female", "mean_male", "sd_female", "sd_male", "gap", "gap_sd")
        _write_csv(
            plot_path,
            header,
            [[_cell(row[k]) if not isinstance(row[k], str) else row[k] for k in header] for row in plot_rows],
            cfg.delimiter,
        )
        outputs[plot_path.name] = plot_path
    _manifest(cfg, "gap", out_dir, outputs)
    return outputs


def cmd_validate(cfg: RunConfig) -> dict[str, Path]:
    spec = cfg.resolved_population_spec()
    report = run_validation(
        spec,
        draws=cfg.validate_draws,
        rounds=cfg.validate_rounds,
        bin_width=cfg.bin_width,  # type: ignore[arg-type]
        support_years=tuple(cfg.support),
        tau_range_years=tuple(cfg.tau_range),
    )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "validation_report.json"
    write_json_atomic(path, report)
    outputs = {path.name: path}
    _manifest(cfg, "validate", out_dir, outputs)
    return outputs


COMMANDS = {
    "ingest": cmd_ingest,
    "fit-dist": cmd_fit_dist,
    "trajectory": cmd_trajectory,
    "gap": cmd_gap,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its fields")
    sub.add_argument("--input", help="input survey file")
    sub.add_argument("--out", dest="out_dir", help="output directory")
    sub.add_argument("--seed", type=int, help="top-level random seed")
    sub.add_argument("--delimiter", help="cell separator in input and output tables")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="childpenalty",
        description=(
            "Parenthood effects on labor-market outcomes: placebo event "
            "trajectories and counterfactual gender gaps"
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p_ingest = subparsers.add_parser("ingest", help="parse a survey file into canonical records")
    _add_common(p_ingest)

    p_fit = subparsers.add_parser("fit-dist", help="fit the age-at-first-birth distribution")
    _add_common(p_fit)
    p_fit.add_argument("--bin-width", choices=("yearly", "monthly"), dest="bin_width")
    p_fit.add_argument("--support", nargs=2, type=int, metavar=("LO", "HI"))

    p_traj = subparsers.add_parser("trajectory", help="event-time trajectory tables")
    _add_common(p_traj)
    p_traj.add_argument("--pmf-mode", choices=("lognormal", "empirical"), dest="pmf_mode")
    p_traj.add_argument("--bin-width", choices=("yearly", "monthly"), dest="bin_width")
    p_traj.add_argument("--weighting", choices=("pmf_only", "population_weighted"))
    p_traj.add_argument("--support", nargs=2, type=int, metavar=("LO", "HI"))
    p_traj.add_argument("--tau-range", nargs=2, type=int, metavar=("LO", "HI"), dest="tau_range")
    p_traj.add_argument("--full-time-rule", choices=("exact_40", "at_least_40"), dest="full_time_rule")
    p_traj.add_argument("--outcomes", nargs="+", choices=TRAJECTORY_OUTCOMES)

    p_gap = subparsers.add_parser("gap", help="observed vs counterfactual gender gaps")
    _add_common(p_gap)
    p_gap.add_argument("--rounds", type=int, dest="bootstrap_rounds", help="bootstrap rounds")
    p_gap.add_argument("--full-time-rule", choices=("exact_40", "at_least_40"), dest="full_time_rule")
    p_gap.add_argument("--gap-outcomes", nargs="+", choices=GAP_OUTCOMES, dest="gap_outcomes")

    p_val = subparsers.add_parser("validate", help="synthetic ground-truth validation report")
    _add_common(p_val)
    p_val.add_argument("--draws", type=int, dest="validate_draws", help="Monte Carlo draws")
    p_val.add_argument("--rounds", type=int, dest="validate_rounds", help="repetitions for noise measurement")
    p_val.add_argument("--bin-width", choices=("yearly", "monthly"), dest="bin_width")

    return parser


_OVERRIDE_KEYS = (
    "input",
    "out_dir",
    "seed",
    "delimiter",
    "pmf_mode",
    "bin_width",
    "weighting",
    "support",
    "tau_range",
    "full_time_rule",
    "outcomes",
    "gap_outcomes",
    "bootstrap_rounds",
    "validate_draws",
    "validate_rounds",
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {key: getattr(args, key, None) for key in _OVERRIDE_KEYS}
    try:
        cfg = load_config(args.config, overrides)
        COMMANDS[args.command](cfg)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def entrypoint() -> None:
    raise SystemExit(main())
