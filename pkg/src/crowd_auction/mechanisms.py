"""Winner selection rules and the round-by-round market engine.

Each round advances through fixed phases so that a seed pins down every
outcome byte-for-byte:

1. Bid revision: every active participant, in id order, draws one noisy
   cost observation and revises its ask.
2. Winner selection: reverse-auction ranking (RA-ABC, RA-ABCDR) or a
   weighted lottery (Tullock).  Auction winners are paid their ask; lottery
   winners split a fixed budget of winners_per_round * cost_mean evenly.
3. Task performance: winners learn their true cost and log the win.
4. Tracker updates: bidders fold the round into their participation and
   earnings averages and recompute ROI; sidelined dropped participants'
   averages decay (unless frozen); bidders also fold the round's lowest
   winning ask into their price estimators.
5. Lifecycle: participants dropped before this round weigh rejoining, then
   unsatisfied bidders drop and immediately weigh the next round the same
   way.  The rejoin signal is the round's highest winning ask; the lottery
   baseline publishes no asks, so its dropouts only run down their patience
   (flip ``tullock_rejoin`` to hand it the same signal).
6. Recruitment (RA-ABCDR only): a Poisson number of fresh participants
   join; they start bidding next round.
7. Metrics are computed and the round is recorded.

RNG draw order per round: one Gaussian per bidder in phase 1, lottery draws
in phase 2, then the Poisson count and per-recruit draws in phase 6.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from . import bidding, engagement, metrics
from .errors import StateError
from .model import (
    Mechanism,
    Participant,
    RoundRecord,
    ScenarioConfig,
    Status,
    new_participant,
)
from .rng import Rng

# Asks are floored here when inverted into lottery efforts.
_MIN_EFFORT_BID = 1e-9


class BidEntry(NamedTuple):
    pid: int
    bid: float
    penalty: float
    participation_freq: float


class EffortEntry(NamedTuple):
    pid: int
    effort: float


def select_winners_ra_abc(
    entries: list[BidEntry], winners_per_round: int
) -> list[BidEntry]:
    """Pick the cheapest asks after penalty, deterministically.

    Ranking key: ask + drift penalty, ascending; ties prefer the stronger
    participation record, then the lower id.
    """
    ranked = sorted(entries, key=lambda e: (e.bid + e.penalty, -e.participation_freq, e.pid))
    return ranked[: min(winners_per_round, len(ranked))]


def select_winners_tullock(
    entries: list[EffortEntry], winners_per_round: int, exponent: float, rng: Rng
) -> list[EffortEntry]:
    """Draw winners without replacement, odds proportional to effort**exponent.

    If every remaining weight is zero the draw is uniform over the remainder.
    """
    remaining = list(entries)
    winners: list[EffortEntry] = []
    for _ in range(min(winners_per_round, len(entries))):
        weights = [e.effort**exponent for e in remaining]
        total = sum(weights)
        if total <= 0.0:
            index = int(rng.random() * len(remaining))
        else:
            u = rng.random() * total
            acc = 0.0
            index = len(remaining) - 1
            for i, w in enumerate(weights):
                acc += w
                if u < acc:
                    index = i
                    break
        winners.append(remaining.pop(index))
    return winners


@dataclass
class MechanismEngine:
    """Mutable simulation state for one seeded run."""

    config: ScenarioConfig
    rng: Rng
    participants: list[Participant]
    round: int = 0   # completed rounds
    history: list[RoundRecord] = field(default_factory=list)
    win_tally: metrics.WinTally = field(default_factory=metrics.WinTally)
    _last_marginal: float | None = None
    _next_id: int = 0

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> MechanismEngine:
        rng = Rng(config.seed)
        engine = cls(config=config, rng=rng, participants=[])
        for _ in range(config.initial_population):
            engine.participants.append(
                new_participant(engine._next_id, 0, rng, config)
            )
            engine._next_id += 1
        return engine

    def recruit(self) -> list[Participant]:
        """Poisson-sized batch of fresh participants; they bid next round."""
        count = self.rng.poisson(self.config.recruitment_rate)
        fresh = []
        for _ in range(count):
            fresh.append(new_participant(self._next_id, self.round, self.rng, self.config))
            self._next_id += 1
        self.participants.extend(fresh)
        return fresh

    def run(self) -> list[RoundRecord]:
        while self.round < self.config.num_rounds:
            self.advance_round()
        return self.history

    def advance_round(self) -> RoundRecord:
        config = self.config
        if self.round >= config.num_rounds:
            raise StateError(f"all {config.num_rounds} rounds already simulated")
        round_index = self.round + 1
        is_lottery = config.mechanism is Mechanism.TULLOCK

        # Phase 1: revise asks.
        bidders = [p for p in self.participants if p.status is Status.ACTIVE]
        noise_sd = config.observation_variance**0.5
        for p in bidders:
            believed_cost = p.true_cost if p.knows_true_cost else p.assumed_cost
            observation = believed_cost + self.rng.gauss(0.0, noise_sd)
            p.current_bid = bidding.bayesian_revise(
                p.current_bid,
                observation,
                config.prior_variance,
                config.observation_variance,
                config.clamp_monotone,
            )
            p.last_bid = p.current_bid

        # Phase 2: select winners and fix payments.
        by_id = {p.id: p for p in bidders}
        if is_lottery:
            efforts = [
                EffortEntry(p.id, 1.0 / max(p.current_bid, _MIN_EFFORT_BID))
                for p in bidders
            ]
            chosen = select_winners_tullock(
                efforts, config.winners_per_round, config.tullock_exponent, self.rng
            )
            winners = [by_id[e.pid] for e in chosen]
            payments = [config.cost_mean] * len(winners)
        else:
            entries = [
                BidEntry(
                    p.id,
                    p.current_bid,
                    bidding.deviation_penalty(p.current_bid, p.entry_bid, config.penalty_gamma),
                    p.participation_freq,
                )
                for p in bidders
            ]
            chosen_bids = select_winners_ra_abc(entries, config.winners_per_round)
            winners = [by_id[e.pid] for e in chosen_bids]
            payments = [e.bid for e in chosen_bids]

        # Phase 3: winners perform the task.
        winning_asks = [p.last_bid for p in winners]
        lowest_ask = min(winning_asks) if winning_asks else None
        highest_ask = max(winning_asks) if winning_asks else None
        won_payment = {p.id: pay for p, pay in zip(winners, payments)}
        bar_values = [
            metrics.bar(p.last_bid, p.true_cost) for p in winners if p.knows_true_cost
        ]
        for p in winners:
            p.knows_true_cost = True
            p.rounds_won += 1
        self.win_tally.record(p.id for p in winners)

        # Phase 4: tracker updates and ROI.
        for p in bidders:
            p.rounds_participated += 1
            p.participation_freq = engagement.update_participation(
                p.participation_freq, 1, config.ewma_alpha
            )
            p.avg_earnings = engagement.update_earnings(
                p.avg_earnings, p.id in won_payment, won_payment.get(p.id, 0.0), config.ewma_beta
            )
            cost = p.true_cost if p.knows_true_cost else p.assumed_cost
            p.roi = engagement.roi_active(p.avg_earnings, p.participation_freq, cost, p.tolerance)
        if not config.freeze_dropped_trackers:
            for p in self.participants:
                if p.status is Status.DROPPED:
                    p.participation_freq = engagement.update_participation(
                        p.participation_freq, 0, config.ewma_alpha
                    )
                    p.avg_earnings = engagement.update_earnings(
                        p.avg_earnings, False, 0.0, config.ewma_beta
                    )
        if lowest_ask is not None:
            for p in bidders:
                p.estimator.observe(lowest_ask)

        # Phase 5: lifecycle.
        if highest_ask is not None:
            self._last_marginal = highest_ask
        if is_lottery and not config.tullock_rejoin:
            rejoin_signal = None
        else:
            rejoin_signal = self._last_marginal
        dropped_count = 0
        rejoined_count = 0
        # Only participants dropped in earlier rounds are DROPPED here; this
        # round's bidders drop (and re-decide) in the loop below.
        for p in self.participants:
            if p.status is Status.DROPPED:
                if engagement.lifecycle_step(p, rejoin_signal, config) == "rejoined":
                    rejoined_count += 1
        for p in bidders:
            if engagement.lifecycle_step(p, rejoin_signal, config) == "dropped":
                dropped_count += 1
                # A fresh dropout immediately weighs the next round.
                if engagement.lifecycle_step(p, rejoin_signal, config) == "rejoined":
                    rejoined_count += 1

        # Phase 6: recruitment.  The round counter advances first so recruits
        # log the round they arrived in; they start bidding the round after.
        self.round = round_index
        recruited = self.recruit() if config.mechanism is Mechanism.RA_ABC_DR else []

        # Phase 7: metrics.
        if config.mpi_include_exited:
            population = [p.id for p in self.participants]
        else:
            population = [
                p.id for p in self.participants if p.status is not Status.EXITED
            ]
        mpi_value = (
            metrics.mpi(self.win_tally.frequencies(round_index, population))
            if population
            else None
        )
        bai_values = [
            bidding.bid_adjustment_impact(
                p.last_bid,
                p.entry_bid,
                bidding.win_probability(p.rounds_won, p.rounds_participated),
            )
            for p in bidders
        ]
        record = RoundRecord(
            round=round_index,
            winner_ids=tuple(p.id for p in winners),
            payments=tuple(payments),
            auction_cost=metrics.auction_cost(payments),
            active_count=len(bidders),
            dropped_this_round=dropped_count,
            rejoined_this_round=rejoined_count,
            recruited_this_round=len(recruited),
            mpi=mpi_value,
            mean_bar=_mean_or_none(bar_values),
            mean_bai=_mean_or_none(bai_values),
            mean_roi=_mean_or_none([p.roi for p in bidders]),
        )
        self.history.append(record)
        return record


def _mean_or_none(values: list[float]) -> float | None:
    if not values:
        return None
    return sum(values) / len(values)
