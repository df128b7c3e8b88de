"""Bid formation: worked examples frozen first, then behavioural properties."""

from __future__ import annotations

import math
import random

import pytest

from crowd_auction.bidding import (
    BidEstimator,
    bayesian_revise,
    bid_adjustment_impact,
    deviation_penalty,
    initial_bid,
    win_probability,
)
from crowd_auction.errors import ConfigError, UndefinedMetricError


def test_initial_bid_worked_example():
    estimator = BidEstimator(historical_mean=5.0, historical_variance=2.0, sample_count=4)
    assert initial_bid(estimator, 0.5) == 6.0


def test_initial_bid_zero_variance_equals_mean():
    assert initial_bid(BidEstimator.seeded(4.7), 0.9) == 4.7


def test_initial_bid_rejects_negative_risk():
    with pytest.raises(ConfigError):
        initial_bid(BidEstimator.seeded(4.7), -0.1)


def test_estimator_seeding():
    estimator = BidEstimator.seeded(3.2)
    assert estimator.historical_mean == 3.2
    assert estimator.historical_variance == 0.0
    assert estimator.sample_count == 1


def test_estimator_streaming_matches_batch():
    rnd = random.Random(31)
    for _ in range(50):
        values = [rnd.uniform(0.1, 10.0) for _ in range(rnd.randint(1, 40))]
        estimator = BidEstimator.seeded(values[0])
        for v in values[1:]:
            estimator.observe(v)
        mean = sum(values) / len(values)
        variance = sum((v - mean) ** 2 for v in values) / len(values)
        assert estimator.historical_mean == pytest.approx(mean, rel=1e-12)
        assert estimator.historical_variance == pytest.approx(variance, rel=1e-9, abs=1e-12)
        assert estimator.sample_count == len(values)


def test_estimator_rejects_non_finite():
    estimator = BidEstimator.seeded(1.0)
    with pytest.raises(ValueError):
        estimator.observe(math.inf)


def test_bayesian_revise_worked_examples():
    assert bayesian_revise(4.0, 8.0, 3.0, 1.0) == 7.0
    assert bayesian_revise(4.0, 6.0, 1.0, 1.0) == 5.0
    # Downward pull is clamped by default, applied when unclamped.
    assert bayesian_revise(4.0, 2.0, 1.0, 1.0) == 4.0
    assert bayesian_revise(4.0, 2.0, 1.0, 1.0, clamp_monotone=False) == 3.0


def test_bayesian_revise_zero_total_variance():
    with pytest.raises(ZeroDivisionError):
        bayesian_revise(4.0, 5.0, 0.0, 0.0)


def test_bayesian_revise_rejects_non_finite_observation():
    with pytest.raises(ValueError):
        bayesian_revise(4.0, math.nan, 1.0, 1.0)


def test_bayesian_revise_clamped_never_decreases():
    rnd = random.Random(7)
    for _ in range(500):
        bid = rnd.uniform(0.0, 10.0)
        for _ in range(50):
            nxt = bayesian_revise(bid, rnd.uniform(-20.0, 20.0), rnd.uniform(0.1, 3.0), rnd.uniform(0.1, 3.0))
            assert nxt >= bid
            bid = nxt


def test_bayesian_revise_unclamped_floors_at_zero():
    assert bayesian_revise(1.0, -100.0, 1.0, 1.0, clamp_monotone=False) == 0.0


def test_bayesian_revise_fixed_point():
    # Observing the current bid leaves it unchanged in both modes.
    for clamp in (True, False):
        assert bayesian_revise(5.5, 5.5, 1.0, 2.0, clamp) == 5.5


def test_deviation_penalty_examples_and_symmetry():
    assert deviation_penalty(7.0, 5.0, 1.0) == 2.0
    assert deviation_penalty(5.0, 7.0, 1.0) == 2.0
    assert deviation_penalty(7.0, 5.0, 0.0) == 0.0
    rnd = random.Random(3)
    for _ in range(200):
        a, b, g = rnd.uniform(0, 10), rnd.uniform(0, 10), rnd.uniform(0, 5)
        assert deviation_penalty(a, b, g) == deviation_penalty(b, a, g) >= 0.0


def test_win_probability():
    assert win_probability(0, 0) == 0.0
    assert win_probability(3, 4) == 0.75
    assert win_probability(4, 4) == 1.0


def test_bid_adjustment_impact_worked_example():
    assert bid_adjustment_impact(6.0, 5.0, 0.5) == pytest.approx(0.1)


def test_bid_adjustment_impact_zero_entry_bid():
    with pytest.raises(UndefinedMetricError):
        bid_adjustment_impact(6.0, 0.0, 0.5)


def test_bid_adjustment_impact_sign_tracks_drift():
    assert bid_adjustment_impact(4.0, 5.0, 1.0) < 0.0
    assert bid_adjustment_impact(5.0, 5.0, 1.0) == 0.0
