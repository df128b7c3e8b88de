"""Multi-run experiment orchestration.

A plan names a base scenario, the mechanisms to compare, an optional
parameter sweep, and a run count.  Every run's seed is derived, not chosen:
the 64-bit FNV-1a hash of the master seed (8 little-endian bytes) followed
by each label's UTF-8 bytes, each label terminated with byte 0x1F.  Labels
are (mechanism, sweep assignment, run index), so any (mechanism, sweep
value, run) cell of any experiment is reproducible in isolation.

Aggregation merges runs in plan order whatever order workers finish in, and
uses exactly rounded summation, so aggregates are bit-identical for any
worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .errors import ConfigError
from .mechanisms import MechanismEngine
from .model import Mechanism, RoundRecord, ScenarioConfig, numeric_field_names

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

# RoundRecord fields exported as per-round metric series.
_SERIES_FIELDS = {
    "active": "active_count",
    "auction_cost": "auction_cost",
    "mpi": "mpi",
    "bar": "mean_bar",
    "bai": "mean_bai",
    "roi": "mean_roi",
    "dropped": "dropped_this_round",
    "rejoined": "rejoined_this_round",
    "recruited": "recruited_this_round",
}

METRIC_NAMES = tuple(_SERIES_FIELDS)


def derive_seed(master_seed: int, *labels: object) -> int:
    """Deterministic 64-bit child seed for a labelled slice of an experiment."""
    h = _FNV_OFFSET
    for byte in (master_seed & _MASK64).to_bytes(8, "little"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    for label in labels:
        for byte in str(label).encode("utf-8"):
            h = ((h ^ byte) * _FNV_PRIME) & _MASK64
        h = ((h ^ 0x1F) * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class MetricSeries:
    """Cross-run aggregate for one (mechanism, sweep value) cell.

    ``means[name][r]`` / ``stds[name][r]`` hold the cross-run mean and sample
    standard deviation of metric ``name`` in round ``r + 1``, computed over
    the runs where the metric was defined; NaN marks rounds where it never
    was.  A single defined value has standard deviation 0.
    """

    mechanism: Mechanism
    sweep_param: str | None
    sweep_value: float | None
    num_rounds: int
    num_runs: int
    means: dict[str, list[float]]
    stds: dict[str, list[float]]


@dataclass(frozen=True)
class ExperimentPlan:
    base: ScenarioConfig
    mechanisms: tuple[Mechanism, ...]
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    num_runs: int | None = None      # defaults to base.num_runs
    master_seed: int | None = None   # defaults to base.seed

    def __post_init__(self) -> None:
        if not self.mechanisms:
            raise ConfigError("plan needs at least one mechanism")
        if len(set(self.mechanisms)) != len(self.mechanisms):
            raise ConfigError("plan lists a mechanism twice")
        if (self.sweep_param is None) != (not self.sweep_values):
            raise ConfigError("sweep_param and sweep_values go together")
        if self.sweep_param is not None:
            if self.sweep_param not in numeric_field_names():
                raise ConfigError(f"unknown sweep parameter: {self.sweep_param}")
            if self.sweep_param in ("seed", "num_runs"):
                raise ConfigError(f"{self.sweep_param} governs the experiment itself and cannot be swept")
            for value in self.sweep_values:
                if not math.isfinite(value):
                    raise ConfigError(f"sweep values must be finite, got {value}")
                self._cell_config(Mechanism.RA_ABC, value, 0)  # validates range
        if self.num_runs is not None and self.num_runs < 1:
            raise ConfigError("num_runs must be >= 1")

    @property
    def runs(self) -> int:
        return self.num_runs if self.num_runs is not None else self.base.num_runs

    @property
    def seed(self) -> int:
        return self.master_seed if self.master_seed is not None else self.base.seed

    def cells(self) -> list[tuple[Mechanism, float | None]]:
        values: tuple[float | None, ...] = self.sweep_values or (None,)
        return [(m, v) for m in self.mechanisms for v in values]

    def cell_seed(self, mechanism: Mechanism, value: float | None, run: int) -> int:
        sweep_label = "-" if value is None else f"{self.sweep_param}={value!r}"
        return derive_seed(self.seed, mechanism.value, sweep_label, run)

    def _cell_config(
        self, mechanism: Mechanism, value: float | None, run: int
    ) -> ScenarioConfig:
        overrides: dict[str, object] = {
            "mechanism": mechanism,
            "seed": self.cell_seed(mechanism, value, run),
        }
        if value is not None:
            assert self.sweep_param is not None
            field_type = int if self.sweep_param in _INT_FIELDS else float
            overrides[self.sweep_param] = field_type(value)
        return replace(self.base, **overrides)


_INT_FIELDS = tuple(
    name
    for name in numeric_field_names()
    if isinstance(getattr(ScenarioConfig(), name), int)
)


def run_series(history: list[RoundRecord]) -> dict[str, list[float | None]]:
    """Extract the per-round metric vectors of a single finished run."""
    return {
        name: [getattr(record, attr) for record in history]
        for name, attr in _SERIES_FIELDS.items()
    }


def _run_cell_task(config: ScenarioConfig) -> dict[str, list[float | None]]:
    engine = MechanismEngine.from_config(config)
    return run_series(engine.run())


def aggregate_runs(
    runs: list[dict[str, list[float | None]]], num_rounds: int
) -> tuple[dict[str, list[float]], dict[str, list[float]]]:
    """Per-round cross-run mean and sample standard deviation.

    Sums are exactly rounded (math.fsum), so the result does not depend on
    the order runs arrive in.
    """
    means: dict[str, list[float]] = {}
    stds: dict[str, list[float]] = {}
    for name in METRIC_NAMES:
        mean_row = []
        std_row = []
        for r in range(num_rounds):
            values = [run[name][r] for run in runs if run[name][r] is not None]
            if not values:
                mean_row.append(math.nan)
                std_row.append(math.nan)
                continue
            mean = math.fsum(values) / len(values)
            mean_row.append(mean)
            if len(values) < 2:
                std_row.append(0.0)
            else:
                var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
                std_row.append(math.sqrt(var))
        means[name] = mean_row
        stds[name] = std_row
    return means, stds


def run_experiment(plan: ExperimentPlan, workers: int = 1) -> list[MetricSeries]:
    """Execute every (mechanism, sweep value, run) cell and aggregate.

    Results arrive in plan order regardless of worker scheduling, so output
    is identical for any ``workers`` value.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    cells = plan.cells()
    configs = [
        plan._cell_config(mechanism, value, run)
        for mechanism, value in cells
        for run in range(plan.runs)
    ]
    if workers == 1:
        results = [_run_cell_task(config) for config in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_task, configs))
    series: list[MetricSeries] = []
    for i, (mechanism, value) in enumerate(cells):
        cell_runs = results[i * plan.runs : (i + 1) * plan.runs]
        # Sweeping num_rounds itself makes the cell's horizon differ from the base.
        cell_rounds = plan._cell_config(mechanism, value, 0).num_rounds
        means, stds = aggregate_runs(cell_runs, cell_rounds)
        series.append(
            MetricSeries(
                mechanism=mechanism,
                sweep_param=plan.sweep_param,
                sweep_value=value,
                num_rounds=cell_rounds,
                num_runs=plan.runs,
                means=means,
                stds=stds,
            )
        )
    return series
