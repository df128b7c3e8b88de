"""Domain types: scenario configuration, participants, per-round records.

Everything here is a plain value type.  The engine in :mod:`mechanisms`
mutates participants in place; nothing holds hidden shared state, so records
and participants can be handed freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Callable

from .bidding import BidEstimator, initial_bid
from .errors import ConfigError
from .rng import Rng


class Status(Enum):
    ACTIVE = "active"
    DROPPED = "dropped"
    EXITED = "exited"


class Mechanism(Enum):
    RA_ABC = "ra-abc"
    RA_ABC_DR = "ra-abcdr"
    TULLOCK = "tullock"


@dataclass(frozen=True)
class ScenarioConfig:
    """All tunables for one simulated market.

    Validated on construction; invalid values raise :class:`ConfigError`.
    ``participation_fee`` is carried for downstream accounting only: no
    update rule in the simulator consumes it.
    """

    initial_population: int = 100
    winners_per_round: int = 20
    num_rounds: int = 100
    satisfaction_threshold: float = 0.5
    risk_alpha: float = 0.5
    ewma_alpha: float = 0.1          # weight on the newest participation event
    ewma_beta: float = 0.5           # weight on the newest earnings event
    penalty_gamma: float = 1.0
    prior_variance: float = 0.5
    observation_variance: float = 1.0
    cost_mean: float = 5.0
    cost_stddev: float = 1.0
    tolerance_min: float = 0.5
    tolerance_max: float = 1.5
    initial_roi_epsilon: float = 0.1
    participation_fee: float = 0.0
    recruitment_rate: float = 1.0    # expected fresh recruits per round (RA-ABCDR)
    tullock_exponent: float = 1.0
    exit_patience: int = 10          # consecutive failed rejoin checks before exit
    clamp_monotone: bool = True
    freeze_dropped_trackers: bool = False
    tullock_rejoin: bool = False     # lottery baseline reveals no price signal by default
    mpi_include_exited: bool = False
    mechanism: Mechanism = Mechanism.RA_ABC
    seed: int = 42
    num_runs: int = 50

    def __post_init__(self) -> None:
        if self.initial_population < 1:
            raise ConfigError("initial_population must be >= 1")
        if self.winners_per_round < 1:
            raise ConfigError("winners_per_round must be >= 1")
        if self.winners_per_round > self.initial_population:
            raise ConfigError("winners_per_round must not exceed initial_population")
        if self.num_rounds < 1:
            raise ConfigError("num_rounds must be >= 1")
        if not 0.0 < self.satisfaction_threshold <= 1.0:
            raise ConfigError("satisfaction_threshold must lie in (0, 1]")
        if self.risk_alpha < 0.0:
            raise ConfigError("risk_alpha must be >= 0")
        for name in ("ewma_alpha", "ewma_beta"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie strictly in (0, 1)")
        if self.penalty_gamma < 0.0:
            raise ConfigError("penalty_gamma must be >= 0")
        if self.prior_variance <= 0.0 or self.observation_variance <= 0.0:
            raise ConfigError("variances must be > 0")
        if self.cost_mean <= 0.0:
            raise ConfigError("cost_mean must be > 0")
        if self.cost_stddev <= 0.0:
            raise ConfigError("cost_stddev must be > 0")
        if self.tolerance_min < 0.0 or self.tolerance_max < self.tolerance_min:
            raise ConfigError("tolerance bounds must satisfy 0 <= min <= max")
        if self.initial_roi_epsilon <= 0.0:
            raise ConfigError("initial_roi_epsilon must be > 0")
        if self.participation_fee < 0.0:
            raise ConfigError("participation_fee must be >= 0")
        if self.recruitment_rate < 0.0:
            raise ConfigError("recruitment_rate must be >= 0")
        if self.tullock_exponent <= 0.0:
            raise ConfigError("tullock_exponent must be > 0")
        if self.exit_patience < 1:
            raise ConfigError("exit_patience must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.num_runs < 1:
            raise ConfigError("num_runs must be >= 1")


_NUMERIC_FIELDS = tuple(
    f.name for f in fields(ScenarioConfig) if f.type in ("int", "float")
)


def numeric_field_names() -> tuple[str, ...]:
    """Config fields a sweep may vary."""
    return _NUMERIC_FIELDS


@dataclass
class Participant:
    """One bidder's full lifecycle state."""

    id: int
    true_cost: float
    assumed_cost: float
    tolerance: float
    entry_bid: float
    current_bid: float
    estimator: BidEstimator
    join_round: int
    status: Status = Status.ACTIVE
    knows_true_cost: bool = False
    participation_freq: float = 0.0
    avg_earnings: float = 0.0
    roi: float = 0.0
    rounds_participated: int = 0
    rounds_won: int = 0
    dropped_streak: int = 0   # consecutive failed rejoin checks while dropped
    last_bid: float = field(default=0.0, repr=False)  # ask submitted this round


def sample_positive_gaussian(rng: Rng, mean: float, stddev: float) -> float:
    """Gaussian draw, rejection-resampled until strictly positive."""
    while True:
        value = rng.gauss(mean, stddev)
        if value > 0.0:
            return value


def new_participant(
    pid: int,
    join_round: int,
    rng: Rng,
    config: ScenarioConfig,
    cost_sampler: Callable[[], float] | None = None,
) -> Participant:
    """Create a fresh participant.

    Draw order (one participant): true cost via ``cost_sampler`` (default:
    positive-rejection Gaussian), then the assumed-cost factor uniform in
    [0.9, 1.05], then the tolerance uniform in the configured band.  The
    entry bid comes from a cost-seeded estimator, so it equals the assumed
    cost.  ROI starts a little above the satisfaction threshold so a first
    lost round is judged on its own numbers, not on the initial placeholder.
    """
    if cost_sampler is None:
        true_cost = sample_positive_gaussian(rng, config.cost_mean, config.cost_stddev)
    else:
        true_cost = cost_sampler()
    if not (math.isfinite(true_cost) and true_cost > 0.0):
        raise ConfigError(f"cost sampler must yield positive reals, got {true_cost}")
    assumed_cost = true_cost * rng.uniform(0.9, 1.05)
    tolerance = rng.uniform(config.tolerance_min, config.tolerance_max)
    estimator = BidEstimator.seeded(assumed_cost)
    entry = initial_bid(estimator, config.risk_alpha)
    return Participant(
        id=pid,
        true_cost=true_cost,
        assumed_cost=assumed_cost,
        tolerance=tolerance,
        entry_bid=entry,
        current_bid=entry,
        estimator=estimator,
        join_round=join_round,
        roi=config.satisfaction_threshold + config.initial_roi_epsilon,
    )


@dataclass(frozen=True)
class RoundRecord:
    """Per-round outcome snapshot; metric fields are None when undefined."""

    round: int                      # 1-based
    winner_ids: tuple[int, ...]     # selection order
    payments: tuple[float, ...]     # aligned with winner_ids
    auction_cost: float
    active_count: int               # bidders at selection time
    dropped_this_round: int
    rejoined_this_round: int
    recruited_this_round: int
    mpi: float | None
    mean_bar: float | None
    mean_bai: float | None
    mean_roi: float | None
