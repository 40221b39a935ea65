"""Paid review marketplace: escrowed bounties, licensed reviewer bids,
deterministic expertise matching, review delivery, and meta-reviews.

Money model: posting a bounty escrows one hold per slot (floor(reward/slots)
each) plus one for the integer remainder. A delivered review settles its
slot hold into (reviewer: ask, poster: slot - ask); a default refunds the
slot hold; fulfillment refunds the remainder and any never-assigned slots.
Escrowed reward therefore always equals payouts + refunds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import errors
from .errors import PanvasError
from .identity import Identity
from .ledger import Ledger, HoldReason, HoldState
from .papers import PaperStore

SCORE_DIMENSIONS = ("ORIGINALITY", "SOUNDNESS", "IMPACT")


class BountyState(str, Enum):
    OPEN = "OPEN"
    MATCHED = "MATCHED"
    FULFILLED = "FULFILLED"
    EXPIRED = "EXPIRED"


class AssignmentState(str, Enum):
    ASSIGNED = "ASSIGNED"
    DELIVERED = "DELIVERED"
    DEFAULTED = "DEFAULTED"


@dataclass
class Bounty:
    bounty_id: str
    paper_id: str
    poster: str                  # account id
    reward: int
    required_fields: frozenset[str]
    slots: int
    deadline: int
    state: BountyState = BountyState.OPEN
    slot_holds: list[str] = field(default_factory=list)
    remainder_hold: Optional[str] = None
    assignment_ids: list[str] = field(default_factory=list)
    paid_total: int = 0
    refunded_total: int = 0

    @property
    def per_slot(self) -> int:
        return self.reward // self.slots

    @property
    def remainder(self) -> int:
        return self.reward - self.per_slot * self.slots


@dataclass
class Bid:
    bid_id: str
    bounty_id: str
    reviewer: str                # user id
    ask: int
    placed_at: int


@dataclass
class Assignment:
    assignment_id: str
    bounty_id: str
    reviewer: str
    match_score: float
    slot_index: int
    ask: int
    state: AssignmentState = AssignmentState.ASSIGNED


@dataclass
class Review:
    review_id: str
    assignment_id: str
    scores: dict[str, int]
    text: str
    submitted_at: int
    reviewer: str
    paper_id: str
    paid: int
    hidden: bool = False
    forfeited: int = 0


@dataclass(frozen=True)
class MetaReview:
    meta_id: str
    review_id: str
    rater: str
    quality: int


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


class ReviewMarket:
    def __init__(
        self,
        ledger: Ledger,
        identity: Identity,
        papers: PaperStore,
        clock: Callable[[], int],
        min_review_chars: int = 500,
        deadline_grace: int = 10,
        weight_expertise: float = 0.6,
        weight_reputation: float = 0.3,
        weight_price: float = 0.1,
    ):
        self.ledger = ledger
        self.identity = identity
        self.papers = papers
        self._clock = clock
        self.min_review_chars = min_review_chars
        self.deadline_grace = deadline_grace
        self.weights = (weight_expertise, weight_reputation, weight_price)
        self.bounties: dict[str, Bounty] = {}
        self.bids: dict[str, list[Bid]] = {}
        self.assignments: dict[str, Assignment] = {}
        self.reviews: dict[str, Review] = {}
        self.reviews_by_assignment: dict[str, str] = {}
        self.meta_reviews: dict[str, MetaReview] = {}
        self.meta_pairs: set[tuple[str, str]] = set()   # (review_id, rater)
        self._next_bounty = 1
        self._next_bid = 1
        self._next_assignment = 1
        self._next_review = 1
        self._next_meta = 1

    # -- lifecycle -------------------------------------------------------------

    def post_bounty(
        self,
        paper_id: str,
        poster_account: str,
        reward: int,
        required_fields: set[str] | frozenset[str],
        slots: int,
        deadline: int,
    ) -> Bounty:
        self.papers.paper(paper_id)
        if slots < 1:
            raise PanvasError(errors.INVALID_SLOTS, "slots must be >= 1")
        if reward < slots:
            raise PanvasError(errors.VALIDATION, "reward must fund at least 1 credit per slot")
        if deadline <= self._clock():
            raise PanvasError(errors.VALIDATION, "deadline must be in the future")
        poster = self.ledger.account(poster_account)
        if poster.balance < reward:
            raise PanvasError(errors.INSUFFICIENT_FUNDS, f"reward {reward} exceeds balance {poster.balance}")
        bounty = Bounty(
            f"b{self._next_bounty}", paper_id, poster_account, reward,
            frozenset(required_fields), slots, deadline,
        )
        self._next_bounty += 1
        for i in range(slots):
            hold = self.ledger.hold_escrow(
                poster_account, bounty.per_slot, HoldReason.BOUNTY,
                memo=f"bounty:{bounty.bounty_id}:slot{i}",
            )
            bounty.slot_holds.append(hold.hold_id)
        if bounty.remainder > 0:
            hold = self.ledger.hold_escrow(
                poster_account, bounty.remainder, HoldReason.BOUNTY,
                memo=f"bounty:{bounty.bounty_id}:remainder",
            )
            bounty.remainder_hold = hold.hold_id
        self.bounties[bounty.bounty_id] = bounty
        self.bids[bounty.bounty_id] = []
        return bounty

    def bounty(self, bounty_id: str) -> Bounty:
        bounty = self.bounties.get(bounty_id)
        if bounty is None:
            raise PanvasError(errors.UNKNOWN_BOUNTY, f"no bounty {bounty_id}")
        return bounty

    def place_bid(self, bounty_id: str, reviewer: str, ask: int) -> Bid:
        bounty = self.bounty(bounty_id)
        now = self._clock()
        if bounty.state is not BountyState.OPEN or now >= bounty.deadline:
            raise PanvasError(errors.BOUNTY_CLOSED, f"bounty {bounty_id} no longer accepts bids")
        self.identity.user(reviewer)
        if not self.identity.is_licensed(reviewer):
            raise PanvasError(errors.UNLICENSED, f"{reviewer} holds no active reviewer license")
        if reviewer in self.papers.paper(bounty.paper_id).author_ids:
            raise PanvasError(errors.CONFLICT_OF_INTEREST, "authors cannot bid on their own paper")
        if ask < 0:
            raise PanvasError(errors.VALIDATION, "ask must be >= 0")
        if ask > bounty.per_slot:
            raise PanvasError(errors.ASK_TOO_HIGH, f"ask {ask} exceeds per-slot payout {bounty.per_slot}")
        if any(b.reviewer == reviewer for b in self.bids[bounty_id]):
            raise PanvasError(errors.DUPLICATE_BID, f"{reviewer} already bid on {bounty_id}")
        bid = Bid(f"bid{self._next_bid}", bounty_id, reviewer, ask, now)
        self._next_bid += 1
        self.bids[bounty_id].append(bid)
        return bid

    def _score_bid(self, bounty: Bounty, bid: Bid) -> float:
        user = self.identity.user(bid.reviewer)
        we, wr, wp = self.weights
        overlap = jaccard(user.expertise, bounty.required_fields)
        price_term = 1.0 - bid.ask / bounty.per_slot
        return we * overlap + wr * user.reputation + wp * price_term

    def rank_bids(self, bounty_id: str) -> list[tuple[float, Bid]]:
        """Strict deterministic ranking: score desc, placed_at asc, user id asc."""
        bounty = self.bounty(bounty_id)
        scored = [(self._score_bid(bounty, bid), bid) for bid in self.bids[bounty_id]]
        scored.sort(key=lambda sb: (-sb[0], sb[1].placed_at, sb[1].reviewer))
        return scored

    def match_reviewers(self, bounty_id: str) -> list[Assignment]:
        bounty = self.bounty(bounty_id)
        if bounty.state is not BountyState.OPEN:
            raise PanvasError(errors.BOUNTY_CLOSED, f"bounty {bounty_id} is {bounty.state.value}")
        if not self.bids[bounty_id]:
            self._expire(bounty)
            raise PanvasError(errors.NO_BIDS, f"bounty {bounty_id} expired with no bids")
        assignments = []
        for slot_index, (score, bid) in enumerate(self.rank_bids(bounty_id)[: bounty.slots]):
            assignment = Assignment(
                f"asg{self._next_assignment}", bounty_id, bid.reviewer,
                score, slot_index, bid.ask,
            )
            self._next_assignment += 1
            self.assignments[assignment.assignment_id] = assignment
            bounty.assignment_ids.append(assignment.assignment_id)
            assignments.append(assignment)
        bounty.state = BountyState.MATCHED
        return assignments

    def _expire(self, bounty: Bounty) -> None:
        for hold_id in self._open_holds(bounty):
            txn = self.ledger.refund_escrow(hold_id, memo=f"bounty:{bounty.bounty_id}:expired")
            bounty.refunded_total += txn.amount
        bounty.state = BountyState.EXPIRED

    def _open_holds(self, bounty: Bounty) -> list[str]:
        holds = list(bounty.slot_holds)
        if bounty.remainder_hold:
            holds.append(bounty.remainder_hold)
        return [h for h in holds if self.ledger.holds[h].state is HoldState.HELD]

    def assignment(self, assignment_id: str) -> Assignment:
        assignment = self.assignments.get(assignment_id)
        if assignment is None:
            raise PanvasError(errors.UNKNOWN_ASSIGNMENT, f"no assignment {assignment_id}")
        return assignment

    def submit_review(self, assignment_id: str, scores: dict[str, int], text: str) -> Review:
        assignment = self.assignment(assignment_id)
        if assignment.state is not AssignmentState.ASSIGNED:
            raise PanvasError(errors.ALREADY_SETTLED, f"assignment is {assignment.state.value}")
        bounty = self.bounty(assignment.bounty_id)
        now = self._clock()
        if now > bounty.deadline + self.deadline_grace:
            self._default(bounty, assignment)
            raise PanvasError(errors.DEADLINE_PASSED, "review arrived after deadline + grace; slot refunded")
        missing = [d for d in SCORE_DIMENSIONS if d not in scores]
        if missing:
            raise PanvasError(errors.INCOMPLETE_SCORES, f"missing dimensions: {missing}")
        for dim in SCORE_DIMENSIONS:
            if not 1 <= scores[dim] <= 10:
                raise PanvasError(errors.OUT_OF_RANGE, f"{dim} score must be 1-10")
        if len(text) < self.min_review_chars:
            raise PanvasError(
                errors.TEXT_TOO_SHORT,
                f"review text must be at least {self.min_review_chars} characters",
            )
        reviewer_account = self.ledger.account_for_owner(assignment.reviewer)
        slot_hold = bounty.slot_holds[assignment.slot_index]
        distribution = [(reviewer_account.account_id, assignment.ask)]
        difference = bounty.per_slot - assignment.ask
        if difference > 0:
            distribution.append((bounty.poster, difference))
        self.ledger.settle_escrow(
            [slot_hold], distribution,
            memo=f"bounty:{bounty.bounty_id}:slot{assignment.slot_index}",
        )
        bounty.paid_total += assignment.ask
        bounty.refunded_total += difference
        assignment.state = AssignmentState.DELIVERED
        review = Review(
            f"rev{self._next_review}", assignment_id,
            {d: scores[d] for d in SCORE_DIMENSIONS}, text, now,
            assignment.reviewer, bounty.paper_id, assignment.ask,
        )
        self._next_review += 1
        self.reviews[review.review_id] = review
        self.reviews_by_assignment[assignment_id] = review.review_id
        self._maybe_fulfill(bounty)
        return review

    def _default(self, bounty: Bounty, assignment: Assignment) -> None:
        txn = self.ledger.refund_escrow(
            bounty.slot_holds[assignment.slot_index],
            memo=f"bounty:{bounty.bounty_id}:slot{assignment.slot_index}:default",
        )
        bounty.refunded_total += txn.amount
        assignment.state = AssignmentState.DEFAULTED
        self._maybe_fulfill(bounty)

    def _maybe_fulfill(self, bounty: Bounty) -> None:
        states = [self.assignments[a].state for a in bounty.assignment_ids]
        if any(s is AssignmentState.ASSIGNED for s in states):
            return
        for hold_id in self._open_holds(bounty):
            txn = self.ledger.refund_escrow(hold_id, memo=f"bounty:{bounty.bounty_id}:unclaimed")
            bounty.refunded_total += txn.amount
        bounty.state = BountyState.FULFILLED

    def review(self, review_id: str) -> Review:
        review = self.reviews.get(review_id)
        if review is None:
            raise PanvasError(errors.UNKNOWN_REVIEW, f"no review {review_id}")
        return review

    def submit_meta_review(self, review_id: str, rater: str, quality: int) -> MetaReview:
        review = self.review(review_id)
        self.identity.user(rater)
        if rater == review.reviewer:
            raise PanvasError(errors.SELF_META_REVIEW, "reviewers cannot meta-review their own review")
        if (review_id, rater) in self.meta_pairs:
            raise PanvasError(errors.DUPLICATE, f"{rater} already meta-reviewed {review_id}")
        if not 1 <= quality <= 5:
            raise PanvasError(errors.OUT_OF_RANGE, "quality must be 1-5")
        meta = MetaReview(f"meta{self._next_meta}", review_id, rater, quality)
        self._next_meta += 1
        self.meta_reviews[meta.meta_id] = meta
        self.meta_pairs.add((review_id, rater))
        self.identity.update_reputation(review.reviewer, quality)
        return meta

    # -- sweeps and queries -------------------------------------------------------

    def sweep(self, now: int) -> None:
        """Deadline housekeeping, called on clock ticks: match open bounties at
        their deadline (expiring bid-less or hopelessly late ones) and default
        overdue assignments."""
        for bounty_id in sorted(self.bounties):
            bounty = self.bounties[bounty_id]
            if bounty.state is BountyState.OPEN and now >= bounty.deadline:
                # Past deadline+grace nobody could deliver anyway: expire
                # rather than matching reviewers into instant defaults.
                if self.bids[bounty_id] and now <= bounty.deadline + self.deadline_grace:
                    self.match_reviewers(bounty_id)
                else:
                    self._expire(bounty)
            if bounty.state is BountyState.MATCHED and now > bounty.deadline + self.deadline_grace:
                for assignment_id in list(bounty.assignment_ids):
                    assignment = self.assignments[assignment_id]
                    if assignment.state is AssignmentState.ASSIGNED:
                        self._default(bounty, assignment)

    def delivered_review_count(self, paper_id: str) -> int:
        return sum(1 for r in self.reviews.values() if r.paper_id == paper_id)

    def board(self) -> list[Bounty]:
        return [self.bounties[b] for b in sorted(self.bounties)]
