"""Command line front end.

Subcommands: ``run`` (one mechanism), ``compare`` (all mechanisms on one
scenario), ``sweep`` (vary one scenario parameter).  Settings resolve as
defaults < config file (``--config``, flat ``key=value`` lines, ``#``
comments) < command-line flags.  Each invocation writes three files into
``--out``: per-round aggregates (``rounds.csv``), one summary row per
mechanism/sweep cell (``summary.csv``), and a replayable manifest
(``manifest.txt``) that pins every resolved setting.

Exit codes: 0 success, 1 bad usage or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import fields

from .errors import ConfigError
from .harness import ExperimentPlan, MetricSeries, run_experiment
from .metrics import retention_vs_average
from .model import Mechanism, ScenarioConfig

ROUND_CSV_COLUMNS = (
    "round",
    "mechanism",
    "sweep_value",
    "active_mean",
    "active_std",
    "auction_cost_mean",
    "auction_cost_std",
    "mpi_mean",
    "bar_mean",
    "bai_mean",
    "roi_mean",
    "recruited_mean",
    "dropped_mean",
)

SUMMARY_CSV_COLUMNS = (
    "mechanism",
    "sweep_value",
    "rounds",
    "runs",
    "final_active_mean",
    "mean_active",
    "mean_auction_cost",
    "mean_mpi",
    "mean_bar",
    "mean_bai",
    "mean_roi",
    "retention_delta_pct",
)

# Friendlier spellings accepted wherever a config field is named.
FIELD_ALIASES = {
    "participants": "initial_population",
    "winners": "winners_per_round",
    "rounds": "num_rounds",
    "threshold": "satisfaction_threshold",
    "runs": "num_runs",
}

_CONFIG_FIELDS = {f.name: f.type for f in fields(ScenarioConfig)}


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def fmt6(value: float | None) -> str:
    """Render a number with 6 significant digits; undefined values as empty."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(value, ".6g")


def resolve_field_name(name: str) -> str:
    resolved = FIELD_ALIASES.get(name, name)
    if resolved not in _CONFIG_FIELDS:
        raise ConfigError(f"unknown configuration key: {name}")
    return resolved


def _coerce(name: str, raw: str) -> object:
    kind = _CONFIG_FIELDS[name]
    try:
        if name == "mechanism":
            return Mechanism(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw}") from exc


def read_config_file(path: str) -> dict[str, object]:
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {text!r}")
            key, _, raw = text.partition("=")
            name = resolve_field_name(key.strip())
            values[name] = _coerce(name, raw.strip())
    return values


def build_parser() -> _Parser:
    parser = _Parser(prog="crowd-auction", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--participants", type=int, help="initial population size")
    common.add_argument("--winners", type=int, help="winners selected per round")
    common.add_argument("--rounds", type=int, help="rounds to simulate")
    common.add_argument("--threshold", type=float, help="satisfaction threshold")
    common.add_argument("--runs", type=int, help="independently seeded runs per cell")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--recruitment-rate", type=float, help="expected recruits per round")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--config", help="key=value configuration file")

    p_run = sub.add_parser("run", parents=[common], help="simulate one mechanism")
    p_run.add_argument(
        "--mechanism", choices=[m.value for m in Mechanism], help="mechanism to simulate"
    )
    sub.add_parser("compare", parents=[common], help="simulate every mechanism")
    p_sweep = sub.add_parser("sweep", parents=[common], help="vary one parameter")
    p_sweep.add_argument("--param", required=True, help="configuration field to vary")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument(
        "--mechanism",
        choices=[m.value for m in Mechanism],
        help="restrict the sweep to one mechanism",
    )
    return parser


def _resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    values: dict[str, object] = {}
    if args.config:
        values.update(read_config_file(args.config))
    flag_map = {
        "participants": "initial_population",
        "winners": "winners_per_round",
        "rounds": "num_rounds",
        "threshold": "satisfaction_threshold",
        "runs": "num_runs",
        "seed": "seed",
        "recruitment_rate": "recruitment_rate",
    }
    for flag, field_name in flag_map.items():
        flag_value = getattr(args, flag, None)
        if flag_value is not None:
            values[field_name] = flag_value
    mechanism = getattr(args, "mechanism", None)
    if mechanism is not None:
        values["mechanism"] = Mechanism(mechanism)
    return ScenarioConfig(**values)


def _plan_for(args: argparse.Namespace) -> tuple[ExperimentPlan, list[str]]:
    """Build the experiment plan plus the replay arguments for the manifest."""
    config = _resolve_config(args)
    if args.command == "run":
        return (
            ExperimentPlan(base=config, mechanisms=(config.mechanism,)),
            ["run"],
        )
    if args.command == "compare":
        return (
            ExperimentPlan(
                base=config,
                mechanisms=(Mechanism.RA_ABC, Mechanism.RA_ABC_DR, Mechanism.TULLOCK),
            ),
            ["compare"],
        )
    param = resolve_field_name(args.param)
    try:
        sweep_values = tuple(float(v) for v in args.values.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad sweep values: {args.values}") from exc
    if mechanism_flag := getattr(args, "mechanism", None):
        mechanisms = (Mechanism(mechanism_flag),)
    else:
        mechanisms = (Mechanism.RA_ABC, Mechanism.RA_ABC_DR)
    plan = ExperimentPlan(
        base=config,
        mechanisms=mechanisms,
        sweep_param=param,
        sweep_values=sweep_values,
    )
    replay = ["sweep", "--param", param, "--values", args.values]
    if mechanism_flag:
        replay += ["--mechanism", mechanism_flag]
    return plan, replay


def _sweep_sort_key(value: float | None) -> tuple[int, float]:
    return (0, 0.0) if value is None else (1, value)


def write_round_csv(path: str, series_list: list[MetricSeries]) -> None:
    ordered = sorted(
        series_list, key=lambda s: (s.mechanism.value, _sweep_sort_key(s.sweep_value))
    )
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ROUND_CSV_COLUMNS)
        for series in ordered:
            sweep_text = fmt6(series.sweep_value) if series.sweep_value is not None else ""
            for r in range(series.num_rounds):
                writer.writerow(
                    [
                        r + 1,
                        series.mechanism.value,
                        sweep_text,
                        fmt6(series.means["active"][r]),
                        fmt6(series.stds["active"][r]),
                        fmt6(series.means["auction_cost"][r]),
                        fmt6(series.stds["auction_cost"][r]),
                        fmt6(series.means["mpi"][r]),
                        fmt6(series.means["bar"][r]),
                        fmt6(series.means["bai"][r]),
                        fmt6(series.means["roi"][r]),
                        fmt6(series.means["recruited"][r]),
                        fmt6(series.means["dropped"][r]),
                    ]
                )


def _nan_mean(values: list[float]) -> float | None:
    defined = [v for v in values if not math.isnan(v)]
    if not defined:
        return None
    return math.fsum(defined) / len(defined)


def write_summary_csv(path: str, series_list: list[MetricSeries]) -> None:
    ordered = sorted(
        series_list, key=lambda s: (s.mechanism.value, _sweep_sort_key(s.sweep_value))
    )
    # Retention deltas compare mechanisms within the same sweep cell.
    deltas: dict[tuple[str, float | None], float] = {}
    by_value: dict[float | None, list[MetricSeries]] = {}
    for series in ordered:
        by_value.setdefault(series.sweep_value, []).append(series)
    for value, group in by_value.items():
        summary = retention_vs_average(
            {s.mechanism.value: s.means["active"] for s in group}
        )
        for name, delta in summary.delta_pct.items():
            deltas[(name, value)] = delta
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_CSV_COLUMNS)
        for series in ordered:
            active = series.means["active"]
            writer.writerow(
                [
                    series.mechanism.value,
                    fmt6(series.sweep_value) if series.sweep_value is not None else "",
                    series.num_rounds,
                    series.num_runs,
                    fmt6(active[-1]),
                    fmt6(_nan_mean(active)),
                    fmt6(_nan_mean(series.means["auction_cost"])),
                    fmt6(_nan_mean(series.means["mpi"])),
                    fmt6(_nan_mean(series.means["bar"])),
                    fmt6(_nan_mean(series.means["bai"])),
                    fmt6(_nan_mean(series.means["roi"])),
                    fmt6(deltas[(series.mechanism.value, series.sweep_value)]),
                ]
            )


def write_manifest(path: str, plan: ExperimentPlan, replay_args: list[str]) -> None:
    lines = [
        "# crowd-auction run manifest; rerun with:",
        f"# replay-args: {' '.join(replay_args)}",
        f"# mechanisms: {','.join(m.value for m in plan.mechanisms)}",
    ]
    if plan.sweep_param is not None:
        sweep_text = ",".join(repr(v) for v in plan.sweep_values)
        lines.append(f"# sweep: {plan.sweep_param} in [{sweep_text}]")
    lines.append("# child seeds: FNV-1a(master, mechanism, sweep, run)")
    for f in fields(ScenarioConfig):
        value = getattr(plan.base, f.name)
        if isinstance(value, Mechanism):
            value = value.value
        lines.append(f"{f.name}={value}")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(lines) + "\n")


def _report(series_list: list[MetricSeries]) -> str:
    lines = ["mechanism        sweep    final_active  mean_cost"]
    for s in series_list:
        sweep_text = fmt6(s.sweep_value) if s.sweep_value is not None else "-"
        lines.append(
            f"{s.mechanism.value:<16} {sweep_text:<8} "
            f"{fmt6(s.means['active'][-1]):>12}  {fmt6(_nan_mean(s.means['auction_cost'])):>9}"
        )
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        plan, replay_args = _plan_for(args)
        os.makedirs(args.out, exist_ok=True)
        series_list = run_experiment(plan, workers=args.workers)
        rounds_path = os.path.join(args.out, "rounds.csv")
        summary_path = os.path.join(args.out, "summary.csv")
        manifest_path = os.path.join(args.out, "manifest.txt")
        write_round_csv(rounds_path, series_list)
        write_summary_csv(summary_path, series_list)
        write_manifest(manifest_path, plan, replay_args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(_report(series_list))
    print(f"wrote {rounds_path}, {summary_path}, {manifest_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
