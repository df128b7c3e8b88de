"""Bid formation and revision.

Bids are asking prices in a reverse auction: sellers name the payment they
want, the platform prefers low asks.  A participant forms an entry bid from a
running estimate of market prices, then nudges it once per round toward noisy
real-time observations with a fixed-gain Bayesian update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, UndefinedMetricError

# A bid observation is just a finite real; functions below validate finiteness.
Observation = float


@dataclass
class BidEstimator:
    """Streaming mean/variance of the market prices a participant has seen.

    Seeded with a single pseudo-observation (the participant's own cost
    estimate), so a fresh estimator has zero variance and the entry bid
    equals that cost estimate.  Variance is the population variance of the
    observed values, maintained with Welford's update.
    """

    historical_mean: float
    historical_variance: float
    sample_count: int

    @classmethod
    def seeded(cls, value: float) -> BidEstimator:
        return cls(historical_mean=value, historical_variance=0.0, sample_count=1)

    def observe(self, value: Observation) -> None:
        if not math.isfinite(value):
            raise ValueError(f"observation must be finite, got {value}")
        self.sample_count += 1
        delta = value - self.historical_mean
        self.historical_mean += delta / self.sample_count
        m2 = self.historical_variance * (self.sample_count - 1)
        m2 += delta * (value - self.historical_mean)
        self.historical_variance = m2 / self.sample_count


def initial_bid(estimator: BidEstimator, risk_alpha: float) -> float:
    """Entry bid: estimated mean price plus a risk premium on its variance."""
    if risk_alpha < 0.0:
        raise ConfigError(f"risk_alpha must be >= 0, got {risk_alpha}")
    return estimator.historical_mean + risk_alpha * estimator.historical_variance


def bayesian_revise(
    prev_bid: float,
    observation: Observation,
    prior_variance: float,
    observation_variance: float,
    clamp_monotone: bool = True,
) -> float:
    """One fixed-gain update of the bid toward a noisy price observation.

    The gain is prior_variance / (prior_variance + observation_variance).
    In clamped mode (the default) the bid never moves down: the revised value
    is max(prev_bid, update).  Unclamped mode keeps the raw update, floored
    at zero so an extreme negative observation cannot produce a negative ask.
    """
    if not math.isfinite(observation):
        raise ValueError(f"observation must be finite, got {observation}")
    if prior_variance < 0.0 or observation_variance < 0.0:
        raise ConfigError("variances must be non-negative")
    total = prior_variance + observation_variance
    if total == 0.0:
        raise ZeroDivisionError("prior_variance + observation_variance is zero")
    gain = prior_variance / total
    revised = prev_bid + gain * (observation - prev_bid)
    if clamp_monotone:
        return max(prev_bid, revised)
    return max(0.0, revised)


def deviation_penalty(final_bid: float, entry_bid: float, penalty_gamma: float) -> float:
    """Ranking handicap proportional to how far a bid drifted from entry."""
    return penalty_gamma * abs(final_bid - entry_bid)


def win_probability(rounds_won: int, rounds_participated: int) -> float:
    """Empirical win frequency; zero before the first participation."""
    if rounds_participated == 0:
        return 0.0
    return rounds_won / rounds_participated


def bid_adjustment_impact(final_bid: float, entry_bid: float, win_prob: float) -> float:
    """Relative bid drift weighted by how often the bidder actually wins."""
    if entry_bid <= 0.0:
        raise UndefinedMetricError(f"entry bid must be positive, got {entry_bid}")
    return ((final_bid - entry_bid) / entry_bid) * win_prob
