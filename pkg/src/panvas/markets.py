"""Parimutuel prediction markets on paper acceptance at target venues.

All stakes are pooled per market. At resolution a basis-point fee goes to
the treasury and the rest is split among winning-side stakers proportionally
to stake, using largest-remainder apportionment so the integer payouts sum
to the distributable pool exactly. One-sided markets are voided and fully
refunded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import errors
from .errors import PanvasError
from .identity import Identity
from .ledger import Ledger, HoldReason, TREASURY
from .papers import PaperStore


class MarketState(str, Enum):
    OPEN = "OPEN"
    CLOSED = "CLOSED"
    RESOLVED = "RESOLVED"
    VOIDED = "VOIDED"


class Side(str, Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"


class Outcome(str, Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"
    VOID = "VOID"


@dataclass
class Market:
    market_id: str
    paper_id: str
    venue: str
    close_time: int
    fee_bps: int
    state: MarketState = MarketState.OPEN
    stake_ids: list[str] = field(default_factory=list)


@dataclass
class Stake:
    stake_id: str
    market_id: str
    staker: str       # account id
    side: Side
    amount: int
    escrow_hold: str


@dataclass(frozen=True)
class PayoutSchedule:
    market_id: str
    outcome: Outcome
    fee_taken: int
    payouts: tuple[tuple[str, int], ...]   # (account, credits) per stake, winners only


def apportion_largest_remainder(
    distributable: int,
    stakes: list[tuple[str, str, int]],
) -> list[tuple[str, str, int]]:
    """Split `distributable` across (stake_id, account, amount) proportionally
    to amount with exact integer totals. Leftover units go to the largest
    fractional remainders; ties broken by larger stake, then account id,
    then stake id."""
    total = sum(amount for _, _, amount in stakes)
    if total <= 0:
        raise PanvasError(errors.VALIDATION, "cannot apportion over a zero pool")
    base = []
    for stake_id, account, amount in stakes:
        quota = distributable * amount
        base.append({
            "stake_id": stake_id,
            "account": account,
            "amount": amount,
            "payout": quota // total,
            "remainder": quota % total,
        })
    leftover = distributable - sum(entry["payout"] for entry in base)
    order = sorted(
        base,
        key=lambda e: (-e["remainder"], -e["amount"], e["account"], e["stake_id"]),
    )
    for entry in order[:leftover]:
        entry["payout"] += 1
    return [(e["stake_id"], e["account"], e["payout"]) for e in base]


class PredictionMarket:
    def __init__(
        self,
        ledger: Ledger,
        papers: PaperStore,
        identity: Identity,
        clock: Callable[[], int],
        default_fee_bps: int = 200,
    ):
        self.ledger = ledger
        self.papers = papers
        self.identity = identity
        self._clock = clock
        self.default_fee_bps = default_fee_bps
        self.markets: dict[str, Market] = {}
        self.stakes: dict[str, Stake] = {}
        self.schedules: dict[str, PayoutSchedule] = {}
        self._next_market = 1
        self._next_stake = 1

    def open_market(self, paper_id: str, venue: str, close_time: int, fee_bps: Optional[int] = None) -> Market:
        self.papers.paper(paper_id)
        if not venue or not venue.strip():
            raise PanvasError(errors.VALIDATION, "venue must be non-empty")
        if close_time <= self._clock():
            raise PanvasError(errors.VALIDATION, "close_time must be in the future")
        fee = self.default_fee_bps if fee_bps is None else fee_bps
        if not 0 <= fee <= 10000:
            raise PanvasError(errors.VALIDATION, "fee_bps must be 0-10000")
        for m in self.markets.values():
            if m.paper_id == paper_id and m.venue == venue and m.state in (MarketState.OPEN, MarketState.CLOSED):
                raise PanvasError(errors.DUPLICATE_MARKET, f"market for ({paper_id}, {venue}) still open")
        market = Market(f"m{self._next_market}", paper_id, venue, close_time, fee)
        self._next_market += 1
        self.markets[market.market_id] = market
        return market

    def market(self, market_id: str) -> Market:
        market = self.markets.get(market_id)
        if market is None:
            raise PanvasError(errors.UNKNOWN_MARKET, f"no market {market_id}")
        return market

    def _close_if_due(self, market: Market, now: int) -> None:
        if market.state is MarketState.OPEN and now >= market.close_time:
            market.state = MarketState.CLOSED

    def sweep(self, now: int) -> None:
        for market_id in sorted(self.markets):
            self._close_if_due(self.markets[market_id], now)

    def place_stake(self, market_id: str, staker_account: str, side: Side, amount: int) -> Stake:
        market = self.market(market_id)
        now = self._clock()
        self._close_if_due(market, now)
        if market.state is not MarketState.OPEN:
            raise PanvasError(errors.MARKET_CLOSED, f"market {market_id} is {market.state.value}")
        if amount <= 0:
            raise PanvasError(errors.VALIDATION, "stake amount must be positive")
        owner = self.ledger.account(staker_account).owner
        if owner in self.papers.paper(market.paper_id).author_ids:
            raise PanvasError(errors.AUTHOR_CANNOT_BET, "authors cannot bet on their own paper")
        hold = self.ledger.hold_escrow(
            staker_account, amount, HoldReason.STAKE, memo=f"market:{market_id}",
        )
        stake = Stake(f"stk{self._next_stake}", market_id, staker_account, side, amount, hold.hold_id)
        self._next_stake += 1
        self.stakes[stake.stake_id] = stake
        market.stake_ids.append(stake.stake_id)
        return stake

    def pool_totals(self, market_id: str) -> dict:
        market = self.market(market_id)
        totals = {Side.ACCEPT: 0, Side.REJECT: 0}
        for stake_id in market.stake_ids:
            stake = self.stakes[stake_id]
            totals[stake.side] += stake.amount
        return {
            "market_id": market_id,
            "state": market.state.value,
            "accept": totals[Side.ACCEPT],
            "reject": totals[Side.REJECT],
            "pool": totals[Side.ACCEPT] + totals[Side.REJECT],
        }

    def resolve_market(self, market_id: str, outcome: Side) -> PayoutSchedule:
        market = self.market(market_id)
        if market.state in (MarketState.RESOLVED, MarketState.VOIDED):
            raise PanvasError(errors.ALREADY_RESOLVED, f"market {market_id} already settled")
        now = self._clock()
        self._close_if_due(market, now)
        if market.state is not MarketState.CLOSED:
            raise PanvasError(errors.NOT_CLOSED, f"market {market_id} is still open")
        all_stakes = [self.stakes[s] for s in market.stake_ids]
        winners = [s for s in all_stakes if s.side is outcome]
        losers = [s for s in all_stakes if s.side is not outcome]
        if not winners or not losers:
            return self._void(market, all_stakes)
        pool = sum(s.amount for s in all_stakes)
        fee = pool * market.fee_bps // 10000
        distributable = pool - fee
        shares = apportion_largest_remainder(
            distributable, [(s.stake_id, s.staker, s.amount) for s in winners],
        )
        distribution = [(account, payout) for _, account, payout in shares]
        if fee > 0:
            distribution.append((TREASURY, fee))
        self.ledger.settle_escrow(
            [s.escrow_hold for s in all_stakes], distribution,
            memo=f"market:{market_id}:{outcome.value}",
        )
        market.state = MarketState.RESOLVED
        schedule = PayoutSchedule(
            market_id, Outcome(outcome.value), fee,
            tuple((account, payout) for _, account, payout in shares),
        )
        self.schedules[market_id] = schedule
        return schedule

    def _void(self, market: Market, all_stakes: list[Stake]) -> PayoutSchedule:
        # One-sided market: nobody to trade against; full refunds, no fee.
        for stake in all_stakes:
            self.ledger.refund_escrow(stake.escrow_hold, memo=f"market:{market.market_id}:void")
        market.state = MarketState.VOIDED
        schedule = PayoutSchedule(
            market.market_id, Outcome.VOID, 0,
            tuple((s.staker, s.amount) for s in all_stakes),
        )
        self.schedules[market.market_id] = schedule
        return schedule
