from dataclasses import dataclass, field

import pytest

from panvas.engagement import Engagement
from panvas.identity import Identity
from panvas.ledger import TREASURY, Ledger, LedgerPolicy, TxnKind
from panvas.markets import PredictionMarket
from panvas.moderation import Moderation
from panvas.papers import PaperStore
from panvas.reviews import ReviewMarket


class FakeClock:
    def __init__(self, now: int = 0):
        self.now = now

    def __call__(self) -> int:
        return self.now

    def advance(self, by: int = 1) -> int:
        self.now += by
        return self.now


@dataclass
class Env:
    """Directly wired domain modules (no HTTP, no event log)."""
    clock: FakeClock
    ledger: Ledger
    identity: Identity
    papers: PaperStore
    reviews: ReviewMarket
    markets: PredictionMarket
    engagement: Engagement
    moderation: Moderation
    accounts: dict = field(default_factory=dict)

    def user(self, name: str, expertise=(), credits: int = 0, licensed: bool = False):
        user = self.identity.register_user(name, set(expertise))
        account = self.ledger.open_account(user.user_id)
        self.accounts[user.user_id] = account
        if credits:
            self.ledger.post_transaction(
                TREASURY, account.account_id, credits, TxnKind.DIRECT_REWARD)
        if licensed:
            self.identity.grant_license(user.user_id, set(expertise) or {"general"}, 85)
        return user

    def balance(self, user_id: str) -> int:
        return self.accounts[user_id].balance


def make_env(banned_terms=None, **policy_overrides) -> Env:
    clock = FakeClock()
    ledger = Ledger(LedgerPolicy(**policy_overrides), clock)
    identity = Identity("test-key", clock=clock)
    papers = PaperStore(clock=clock)
    reviews = ReviewMarket(ledger, identity, papers, clock)
    markets = PredictionMarket(ledger, papers, identity, clock)
    engagement = Engagement(papers, identity, clock)
    moderation = Moderation(engagement, reviews, identity, ledger, clock,
                            banned_terms=banned_terms)
    return Env(clock, ledger, identity, papers, reviews, markets,
               engagement, moderation)


@pytest.fixture
def env() -> Env:
    return make_env()
