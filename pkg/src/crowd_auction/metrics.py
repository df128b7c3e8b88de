"""Market-level outcome measures: cost, fairness, bid accuracy, retention."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import UndefinedMetricError


def auction_cost(payments: Iterable[float]) -> float:
    """Total paid to the round's winners."""
    return math.fsum(payments)


def mpi(win_freqs: Sequence[float]) -> float | None:
    """Market participation index: fairness of the win-frequency spread.

    1 minus the mean squared win frequency minus the deviation of the top
    winner's share from a perfectly even share.  Maximal for a uniform
    spread, lower the more wins concentrate.  None (undefined, not zero)
    when nobody has won anything yet.
    """
    n = len(win_freqs)
    if n == 0:
        raise ValueError("win_freqs must be non-empty")
    total = math.fsum(win_freqs)
    if total == 0.0:
        return None
    mean_square = math.fsum(w * w for w in win_freqs) / n
    top_share_gap = abs(max(win_freqs) / total - 1.0 / n)
    return 1.0 - mean_square - top_share_gap


def bar(bid: float, true_cost: float) -> float:
    """Bid accuracy ratio: relative gap between the ask and the real cost."""
    if true_cost <= 0.0:
        raise UndefinedMetricError(f"true cost must be positive, got {true_cost}")
    return abs(bid - true_cost) / true_cost


class WinTally:
    """Per-participant win counts with frequency extraction for fairness."""

    __slots__ = ("_wins",)

    def __init__(self) -> None:
        self._wins: dict[int, int] = {}

    def record(self, winner_ids: Iterable[int]) -> None:
        for pid in winner_ids:
            self._wins[pid] = self._wins.get(pid, 0) + 1

    def wins(self, pid: int) -> int:
        return self._wins.get(pid, 0)

    def frequencies(self, rounds_elapsed: int, population: Sequence[int]) -> list[float]:
        """Win frequency (wins / rounds elapsed) for each listed participant."""
        if rounds_elapsed < 1:
            raise ValueError("rounds_elapsed must be >= 1")
        return [self._wins.get(pid, 0) / rounds_elapsed for pid in population]


@dataclass(frozen=True)
class RetentionSummary:
    per_mechanism_mean: dict[str, float]
    grand_mean: float
    delta_pct: dict[str, float]   # percent above/below the grand mean


def retention_vs_average(active_series: Mapping[str, Sequence[float]]) -> RetentionSummary:
    """Compare mechanisms' mean active counts against their common average."""
    if not active_series:
        raise ValueError("active_series must contain at least one mechanism")
    lengths = {len(series) for series in active_series.values()}
    if len(lengths) != 1 or lengths == {0}:
        raise ValueError("all series must be non-empty and equally long")
    means = {name: math.fsum(s) / len(s) for name, s in active_series.items()}
    grand = math.fsum(means.values()) / len(means)
    if grand == 0.0:
        raise UndefinedMetricError("grand mean retention is zero")
    deltas = {name: 100.0 * (m - grand) / grand for name, m in means.items()}
    return RetentionSummary(per_mechanism_mean=means, grand_mean=grand, delta_pct=deltas)
