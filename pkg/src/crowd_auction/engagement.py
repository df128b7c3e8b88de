"""Participation tracking, returns on investment, and the stay/leave cycle.

Participants judge the platform by a tolerance-smoothed ratio of earnings to
effort.  When it falls below their satisfaction threshold they stop bidding;
each later round they weigh an optimistic rejoin estimate (what if I had won
at the round's marginal price?) against the same threshold, and walk away for
good after too many failed checks.
"""

from __future__ import annotations

from . import bidding
from .errors import ConfigError, UndefinedMetricError
from .model import Participant, ScenarioConfig, Status


def update_participation(prev: float, event: int, ewma_alpha: float) -> float:
    """Fold one participation event (0 or 1) into the running frequency."""
    if not 0.0 < ewma_alpha < 1.0:
        raise ConfigError(f"ewma_alpha must lie strictly in (0, 1), got {ewma_alpha}")
    if event not in (0, 1):
        raise ValueError(f"participation event must be 0 or 1, got {event}")
    return ewma_alpha * event + (1.0 - ewma_alpha) * prev


def update_earnings(prev: float, won: bool, amount: float, ewma_beta: float) -> float:
    """Fold one round's payout into the running earnings average.

    A lost round contributes nothing and decays the average by (1 - beta).
    """
    if won:
        return ewma_beta * amount + (1.0 - ewma_beta) * prev
    return (1.0 - ewma_beta) * prev


def roi_active(earnings: float, participation: float, cost: float, tolerance: float) -> float:
    """Satisfaction ratio for a bidding participant.

    Tolerance pads both sides: it keeps a newcomer with no history from
    dividing by zero and damps the ratio's swings for patient users.
    """
    denominator = participation * cost + tolerance
    if denominator == 0.0:
        raise UndefinedMetricError("participation * cost + tolerance is zero")
    return (earnings + tolerance) / denominator


def roi_estimate_dropped(
    participant: Participant, projected_win_bid: float, config: ScenarioConfig
) -> float:
    """Hypothetical next-round ROI for a dropped participant.

    Assumes the participant would bid and win at ``projected_win_bid`` and
    prices effort at the assumed cost, since sitting out reveals nothing
    about the true one.  Pure: the participant is not modified.
    """
    p_next = update_participation(participant.participation_freq, 1, config.ewma_alpha)
    m_next = update_earnings(participant.avg_earnings, True, projected_win_bid, config.ewma_beta)
    return roi_active(m_next, p_next, participant.assumed_cost, participant.tolerance)


def lifecycle_step(
    participant: Participant,
    marginal_winning_bid: float | None,
    config: ScenarioConfig,
) -> str | None:
    """Apply at most one status transition; returns its name or None.

    Active participants leave when their updated ROI falls strictly below
    the threshold.  Dropped participants rejoin when the optimistic estimate
    clears the threshold; a missing price signal counts as a failed check,
    and ``exit_patience`` consecutive failures retire them permanently.
    Exited participants never transition again.
    """
    threshold = config.satisfaction_threshold
    if participant.status is Status.EXITED:
        return None
    if participant.status is Status.ACTIVE:
        if participant.roi < threshold:
            participant.status = Status.DROPPED
            participant.dropped_streak = 0
            return "dropped"
        return None
    # Dropped: weigh rejoining against walking away.
    if marginal_winning_bid is not None:
        estimate = roi_estimate_dropped(participant, marginal_winning_bid, config)
        if estimate >= threshold:
            participant.status = Status.ACTIVE
            participant.dropped_streak = 0
            # The revealed price both informs the estimator and anchors the
            # comeback ask, which restarts the revision chain near market level.
            participant.estimator.observe(marginal_winning_bid)
            participant.current_bid = bidding.initial_bid(
                participant.estimator, config.risk_alpha
            )
            return "rejoined"
    participant.dropped_streak += 1
    if participant.dropped_streak >= config.exit_patience:
        participant.status = Status.EXITED
        return "exited"
    return None
