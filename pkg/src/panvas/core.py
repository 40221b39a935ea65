"""The deterministic platform core: wires every domain module behind a
single command dispatch.

State is a pure function of the applied command sequence — ids come from
per-module counters, time from the logical clock carried on each command —
which is what makes the event log replayable bit-exactly. The HTTP facade
and the simulation harness both drive this class and nothing else.
"""

from __future__ import annotations

import base64
import hashlib
from typing import Callable, Optional

from . import errors
from .errors import PanvasError
from .config import ServiceConfig
from .engagement import Engagement
from .identity import Identity
from .ledger import TREASURY, HoldState, Ledger, Role, TxnKind, role_reward
from .markets import PredictionMarket, Side
from .moderation import ActionKind, FlagReason, Moderation
from .papers import FragmentKind, PaperStore
from .reviews import ReviewMarket


def _require(payload: dict, *fields: str) -> list:
    missing = [f for f in fields if f not in payload]
    if missing:
        raise PanvasError(errors.VALIDATION, f"missing fields: {missing}")
    return [payload[f] for f in fields]


def _enum(cls, value, what: str):
    try:
        return cls(value)
    except ValueError:
        raise PanvasError(errors.VALIDATION, f"bad {what}: {value!r}")


class Platform:
    def __init__(self, config: Optional[ServiceConfig] = None):
        self.config = config or ServiceConfig()
        cfg = self.config
        self.now = 0
        clock: Callable[[], int] = lambda: self.now
        self.ledger = Ledger(cfg.ledger, clock)
        self.identity = Identity(
            cfg.server_key, cfg.license_pass_threshold,
            cfg.reputation_alpha, cfg.reputation_prior, clock,
        )
        self.papers = PaperStore(cfg.max_fragment_bytes, clock)
        self.reviews = ReviewMarket(
            self.ledger, self.identity, self.papers, clock,
            cfg.min_review_chars, cfg.deadline_grace,
            cfg.match_weight_expertise, cfg.match_weight_reputation, cfg.match_weight_price,
        )
        self.engagement = Engagement(
            self.papers, self.identity, clock, cfg.emoji_set, cfg.visibility_weights,
        )
        self.markets = PredictionMarket(
            self.ledger, self.papers, self.identity, clock, cfg.market_fee_bps,
        )
        self.moderation = Moderation(
            self.engagement, self.reviews, self.identity, self.ledger, clock,
            banned_terms=cfg.banned_terms,
            warn_threshold=cfg.moderation_warn_threshold,
            hide_threshold=cfg.moderation_hide_threshold,
        )

    # -- command dispatch ----------------------------------------------------

    def apply(self, kind: str, payload: dict, occurred_at: Optional[int] = None) -> dict:
        handler = getattr(self, f"cmd_{kind}", None)
        if handler is None:
            raise PanvasError(errors.UNKNOWN_COMMAND, f"no command {kind}")
        if kind != "tick" and occurred_at is not None:
            self.now = max(self.now, occurred_at)
        return handler(payload)

    def _activity(self, user_id: str, event_kind: str) -> None:
        account = self.ledger.account_for_owner(user_id)
        self.ledger.record_activity(account.account_id, event_kind)
        self.ledger.evaluate_achievements(account.account_id)

    # -- clock ------------------------------------------------------------------

    def cmd_tick(self, payload: dict) -> dict:
        by = int(payload.get("by", 1))
        if by < 1:
            raise PanvasError(errors.VALIDATION, "tick must advance by >= 1")
        self.now += by
        self.reviews.sweep(self.now)
        self.markets.sweep(self.now)
        return {"now": self.now}

    # -- identity -----------------------------------------------------------------

    def cmd_register_user(self, payload: dict) -> dict:
        display_name, = _require(payload, "display_name")
        expertise = set(payload.get("expertise", []))
        user = self.identity.register_user(display_name, expertise)
        account = self.ledger.open_account(user.user_id)
        return self.user_view(user.user_id) | {"account_id": account.account_id}

    def cmd_assign_role(self, payload: dict) -> dict:
        user_id, role = _require(payload, "user", "role")
        self.identity.assign_role(user_id, _enum(Role, role, "role"))
        return self.user_view(user_id)

    def cmd_grant_license(self, payload: dict) -> dict:
        user_id, fields, exam_score = _require(payload, "user", "fields", "exam_score")
        lic = self.identity.grant_license(user_id, set(fields), int(exam_score))
        return {
            "user_id": lic.user_id,
            "fields_of_expertise": sorted(lic.fields_of_expertise),
            "exam_score": lic.exam_score,
            "status": lic.status.value,
        }

    def cmd_revoke_license(self, payload: dict) -> dict:
        user_id, = _require(payload, "user")
        lic = self.identity.revoke_license(user_id)
        return {"user_id": user_id, "status": lic.status.value}

    def cmd_derive_pseudonym(self, payload: dict) -> dict:
        user_id, paper_id = _require(payload, "user", "paper")
        self.papers.paper(paper_id)
        pseudonym = self.identity.derive_pseudonym(user_id, paper_id)
        return {"handle": pseudonym.pseudonym_id, "paper_id": paper_id}

    def cmd_purchase_vip(self, payload: dict) -> dict:
        user_id, = _require(payload, "user")
        account = self.ledger.account_for_owner(user_id)
        txn = self.ledger.purchase_vip(account.account_id)
        return {"user_id": user_id, "vip": True, "txn_id": txn.txn_id, "balance": account.balance}

    def cmd_grant(self, payload: dict) -> dict:
        user_id, amount = _require(payload, "to", "amount")
        account = self.ledger.account_for_owner(user_id)
        txn = self.ledger.post_transaction(
            TREASURY, account.account_id, int(amount), TxnKind.DIRECT_REWARD, memo="grant",
        )
        return {"txn_id": txn.txn_id, "to": user_id, "balance": account.balance}

    def cmd_evaluate_achievements(self, payload: dict) -> dict:
        user_id, = _require(payload, "user")
        account = self.ledger.account_for_owner(user_id)
        txns = self.ledger.evaluate_achievements(account.account_id)
        return {"paid": [t.to_record() for t in txns]}

    # -- papers ---------------------------------------------------------------------

    def cmd_submit_paper(self, payload: dict) -> dict:
        title, authors = _require(payload, "title", "authors")
        for author in authors:
            self.identity.user(author)
        paper = self.papers.submit_paper(title, list(authors))
        return self.paper_view(paper.paper_id)

    def cmd_freeze_paper(self, payload: dict) -> dict:
        paper_id, = _require(payload, "paper")
        self.papers.freeze_paper(paper_id)
        return self.paper_view(paper_id)

    def _content_from(self, payload: dict):
        if "content_b64" in payload:
            try:
                return base64.b64decode(payload["content_b64"], validate=True)
            except Exception:
                raise PanvasError(errors.VALIDATION, "content_b64 is not valid base64")
        content, = _require(payload, "content")
        return str(content)

    def cmd_add_fragment(self, payload: dict) -> dict:
        paper_id, kind, author = _require(payload, "paper", "kind", "author")
        paper = self.papers.paper(paper_id)
        if author not in paper.author_ids:
            raise PanvasError(errors.NOT_AN_AUTHOR, f"{author} is not an author of {paper_id}")
        fragment = self.papers.add_fragment(paper_id, _enum(FragmentKind, kind, "fragment kind"), self._content_from(payload))
        self._activity(author, "FRAGMENT_PUBLISHED")
        return self.fragment_view(fragment.fragment_id)

    def cmd_revise_fragment(self, payload: dict) -> dict:
        fragment_id, author = _require(payload, "fragment", "author")
        fragment = self.papers.fragment(fragment_id)
        paper = self.papers.paper(fragment.paper_id)
        if author not in paper.author_ids:
            raise PanvasError(errors.NOT_AN_AUTHOR, f"{author} is not an author of {paper.paper_id}")
        self.papers.revise_fragment(fragment_id, self._content_from(payload))
        return self.fragment_view(fragment_id)

    def cmd_link_fragment(self, payload: dict) -> dict:
        child, order_index = _require(payload, "child", "order_index")
        link = self.papers.link_fragment(payload.get("parent"), child, int(order_index))
        return {"parent": link.parent, "child": link.child, "order_index": link.order_index}

    def cmd_create_anchor(self, payload: dict) -> dict:
        fragment_id, revision = _require(payload, "fragment", "revision")
        span = payload.get("span")
        if span is not None:
            span = (int(span[0]), int(span[1]))
        anchor = self.papers.create_anchor(fragment_id, int(revision), span)
        return {
            "anchor_id": anchor.anchor_id,
            "fragment_id": anchor.fragment_id,
            "revision": anchor.revision,
            "span": list(anchor.span) if anchor.span else None,
        }

    # -- review market -------------------------------------------------------------------

    def cmd_post_bounty(self, payload: dict) -> dict:
        paper_id, poster, reward, slots, deadline = _require(
            payload, "paper", "poster", "reward", "slots", "deadline")
        account = self.ledger.account_for_owner(poster)
        bounty = self.reviews.post_bounty(
            paper_id, account.account_id, int(reward),
            set(payload.get("required_fields", [])), int(slots), int(deadline),
        )
        return self.bounty_view(bounty.bounty_id)

    def cmd_place_bid(self, payload: dict) -> dict:
        bounty_id, reviewer, ask = _require(payload, "bounty", "reviewer", "ask")
        bid = self.reviews.place_bid(bounty_id, reviewer, int(ask))
        return {
            "bid_id": bid.bid_id, "bounty_id": bid.bounty_id,
            "reviewer": bid.reviewer, "ask": bid.ask, "placed_at": bid.placed_at,
        }

    def cmd_match_reviewers(self, payload: dict) -> dict:
        bounty_id, = _require(payload, "bounty")
        assignments = self.reviews.match_reviewers(bounty_id)
        return {
            "bounty_id": bounty_id,
            "state": self.reviews.bounty(bounty_id).state.value,
            "assignments": [self.assignment_view(a.assignment_id) for a in assignments],
        }

    def cmd_submit_review(self, payload: dict) -> dict:
        assignment_id, scores, text = _require(payload, "assignment", "scores", "text")
        scores = {str(k): int(v) for k, v in dict(scores).items()}
        review = self.reviews.submit_review(assignment_id, scores, str(text))
        self._activity(review.reviewer, "REVIEW_SUBMITTED")
        return self.review_view(review.review_id)

    def cmd_submit_meta_review(self, payload: dict) -> dict:
        review_id, rater, quality = _require(payload, "review", "rater", "quality")
        meta = self.reviews.submit_meta_review(review_id, rater, int(quality))
        self._activity(rater, "META_REVIEW_SUBMITTED")
        return {
            "meta_id": meta.meta_id, "review_id": meta.review_id,
            "rater": meta.rater, "quality": meta.quality,
            "reviewer_reputation": self.identity.user(self.reviews.review(review_id).reviewer).reputation,
        }

    # -- engagement ---------------------------------------------------------------------

    def cmd_cast_rating(self, payload: dict) -> dict:
        paper_id, rater, scores = _require(payload, "paper", "rater", "scores")
        scores = {str(k): int(v) for k, v in dict(scores).items()}
        ballot, first_time = self.engagement.cast_rating(paper_id, rater, scores)
        if first_time:
            self._activity(ballot.rater_user, "RATING_CAST")
        return {
            "ballot_id": ballot.ballot_id, "paper_id": paper_id,
            "rater": ballot.rater_handle, "scores": ballot.scores,
        }

    def cmd_open_thread(self, payload: dict) -> dict:
        anchor_id, = _require(payload, "anchor")
        thread = self.engagement.open_thread(anchor_id)
        return {"thread_id": thread.thread_id, "anchor_id": anchor_id, "paper_id": thread.paper_id}

    def cmd_post_comment(self, payload: dict) -> dict:
        thread_id, author, text = _require(payload, "thread", "author", "text")
        comment = self.engagement.post_comment(thread_id, payload.get("parent"), author, str(text))
        self._activity(comment.author_user, "COMMENT_POSTED")
        action = self.moderation.apply_policy(comment.comment_id)
        return {
            "comment_id": comment.comment_id, "thread_id": thread_id,
            "parent": comment.parent_id, "author": comment.author_handle,
            "hidden": comment.hidden, "moderation": action.kind.value,
        }

    def cmd_react(self, payload: dict) -> dict:
        target, reactor, emoji = _require(payload, "target", "reactor", "emoji")
        added = self.engagement.react(target, reactor, emoji)
        if added:
            paper_id = None
            if target in self.engagement.comments:
                paper_id = self.engagement.threads[self.engagement.comments[target].thread_id].paper_id
            elif target in self.papers.fragments:
                paper_id = self.papers.fragments[target].paper_id
            self._activity(self.identity.resolve_handle(reactor, paper_id), "REACTION")
        return {"target": target, "emoji": emoji, "added": added,
                "counts": self.engagement.reaction_counts(target)}

    # -- prediction market -------------------------------------------------------------------

    def cmd_open_market(self, payload: dict) -> dict:
        paper_id, venue, close_time = _require(payload, "paper", "venue", "close_time")
        market = self.markets.open_market(
            paper_id, str(venue), int(close_time),
            int(payload["fee_bps"]) if "fee_bps" in payload else None,
        )
        return self.market_view(market.market_id)

    def cmd_place_stake(self, payload: dict) -> dict:
        market_id, staker, side, amount = _require(payload, "market", "staker", "side", "amount")
        account = self.ledger.account_for_owner(staker)
        stake = self.markets.place_stake(
            market_id, account.account_id, _enum(Side, side, "side"), int(amount),
        )
        self._activity(staker, "STAKE_PLACED")
        return {
            "stake_id": stake.stake_id, "market_id": market_id, "staker": staker,
            "side": stake.side.value, "amount": stake.amount,
            "balance": account.balance,
        }

    def cmd_resolve_market(self, payload: dict) -> dict:
        market_id, outcome = _require(payload, "market", "outcome")
        schedule = self.markets.resolve_market(market_id, _enum(Side, outcome, "outcome"))
        return {
            "market_id": market_id,
            "outcome": schedule.outcome.value,
            "fee_taken": schedule.fee_taken,
            "payouts": [{"account": a, "credits": c} for a, c in schedule.payouts],
        }

    # -- moderation ---------------------------------------------------------------------------

    def cmd_flag_content(self, payload: dict) -> dict:
        target, flagger, reason = _require(payload, "target", "flagger", "reason")
        flag = self.moderation.flag_content(target, flagger, _enum(FlagReason, reason, "flag reason"))
        return {"flag_id": flag.flag_id} | self.moderation.view(target)

    def cmd_moderation_override(self, payload: dict) -> dict:
        target, kind, moderator = _require(payload, "target", "kind", "moderator")
        action = self.moderation.moderator_override(target, _enum(ActionKind, kind, "action kind"), moderator)
        return {"action_id": action.action_id} | self.moderation.view(target)

    # -- settlement ------------------------------------------------------------------------------

    def cmd_settle_epoch(self, payload: dict) -> dict:
        epoch = int(payload.get("epoch", self.ledger.current_epoch))
        roles = {
            self.ledger.account_for_owner(u.user_id).account_id: u.role
            for u in self.identity.users.values()
        }
        statements = self.ledger.settle_epoch(epoch, roles)
        return {
            "epoch": epoch,
            "minted": sum(s.reward for s in statements),
            "statements": [{
                "account_id": s.account_id,
                "role": s.role_at_settlement.value,
                "production": s.production,
                "consumption": s.consumption,
                "reward": s.reward,
                "formula": s.formula_tag,
            } for s in statements],
        }

    # -- views (pure reads, never logged) ------------------------------------------------------

    def user_view(self, user_id: str) -> dict:
        user = self.identity.user(user_id)
        account = self.ledger.account_for_owner(user_id)
        return {
            "user_id": user.user_id,
            "display_name": user.display_name,
            "role": user.role.value,
            "expertise": sorted(user.expertise),
            "reputation": user.reputation,
            "licensed": self.identity.is_licensed(user_id),
            "account_id": account.account_id,
            "balance": account.balance,
            "vip": account.vip,
        }

    def paper_view(self, paper_id: str) -> dict:
        paper = self.papers.paper(paper_id)
        return {
            "paper_id": paper.paper_id,
            "title": paper.title,
            "authors": list(paper.author_ids),
            "status": paper.status.value,
            "created_at": paper.created_at,
        }

    def fragment_view(self, fragment_id: str) -> dict:
        fragment = self.papers.fragment(fragment_id)
        latest = fragment.at(fragment.revision)
        return {
            "fragment_id": fragment.fragment_id,
            "paper_id": fragment.paper_id,
            "kind": fragment.kind.value,
            "revision": fragment.revision,
            "text": latest.text,
            "blob_digest": latest.blob_digest,
        }

    def document_view(self, paper_id: str) -> dict:
        parts = []
        for fragment, revision in self.papers.assemble_document(paper_id):
            rev = fragment.at(revision)
            parts.append({
                "fragment_id": fragment.fragment_id,
                "kind": fragment.kind.value,
                "revision": revision,
                "text": rev.text,
                "blob_digest": rev.blob_digest,
            })
        return {"paper_id": paper_id, "fragments": parts}

    def bounty_view(self, bounty_id: str) -> dict:
        bounty = self.reviews.bounty(bounty_id)
        return {
            "bounty_id": bounty.bounty_id,
            "paper_id": bounty.paper_id,
            "poster_account": bounty.poster,
            "reward": bounty.reward,
            "required_fields": sorted(bounty.required_fields),
            "slots": bounty.slots,
            "per_slot": bounty.per_slot,
            "deadline": bounty.deadline,
            "state": bounty.state.value,
            "bids": [
                {"bid_id": b.bid_id, "reviewer": b.reviewer, "ask": b.ask, "placed_at": b.placed_at}
                for b in self.reviews.bids[bounty_id]
            ],
            "assignments": [self.assignment_view(a) for a in bounty.assignment_ids],
        }

    def assignment_view(self, assignment_id: str) -> dict:
        a = self.reviews.assignment(assignment_id)
        return {
            "assignment_id": a.assignment_id,
            "bounty_id": a.bounty_id,
            "reviewer": a.reviewer,
            "match_score": a.match_score,
            "slot_index": a.slot_index,
            "ask": a.ask,
            "state": a.state.value,
        }

    def review_view(self, review_id: str) -> dict:
        review = self.reviews.review(review_id)
        return {
            "review_id": review.review_id,
            "assignment_id": review.assignment_id,
            "paper_id": review.paper_id,
            "scores": review.scores,
            "text": "[hidden by moderation]" if review.hidden else review.text,
            "hidden": review.hidden,
            "paid": review.paid,
            "submitted_at": review.submitted_at,
        }

    def market_view(self, market_id: str) -> dict:
        market = self.markets.market(market_id)
        view = self.markets.pool_totals(market_id)
        view.update({
            "paper_id": market.paper_id,
            "venue": market.venue,
            "close_time": market.close_time,
            "fee_bps": market.fee_bps,
        })
        if market_id in self.markets.schedules:
            schedule = self.markets.schedules[market_id]
            view["outcome"] = schedule.outcome.value
            view["fee_taken"] = schedule.fee_taken
        return view

    def ranked_papers(self) -> list[dict]:
        scored = []
        for paper_id in self.papers.papers:
            score = self.engagement.visibility_score(
                paper_id, self.reviews.delivered_review_count(paper_id))
            scored.append((score, paper_id))
        scored.sort(key=lambda sp: (-sp[0], sp[1]))
        return [
            {"paper_id": paper_id, "visibility_score": score} | self.paper_view(paper_id)
            for score, paper_id in scored
        ]

    # -- integrity --------------------------------------------------------------------------------

    def state_snapshot(self) -> dict:
        """Canonical state for replay-equivalence comparison."""
        return {
            "now": self.now,
            "balance_sheet": self.ledger.balance_sheet(),
            "holds": {
                h.hold_id: {"source": h.source_account, "amount": h.amount, "state": h.state.value}
                for h in self.ledger.holds.values()
            },
            "reputations": {u.user_id: u.reputation for u in self.identity.users.values()},
            "roles": {u.user_id: u.role.value for u in self.identity.users.values()},
            "papers": {p: self.paper_view(p) for p in self.papers.papers},
            "summaries": {p: self.engagement.summarize_ratings(p) for p in self.papers.papers},
            "bounties": {
                b: {"state": self.reviews.bounties[b].state.value,
                    "paid": self.reviews.bounties[b].paid_total,
                    "refunded": self.reviews.bounties[b].refunded_total}
                for b in self.reviews.bounties
            },
            "markets": {m: self.market_view(m) for m in self.markets.markets},
            "statements": [
                [s.account_id, s.epoch, s.role_at_settlement.value, s.production, s.consumption, s.reward]
                for s in self.ledger.statements
            ],
            "hidden_comments": sorted(
                c.comment_id for c in self.engagement.comments.values() if c.hidden),
        }

    def state_digest(self) -> str:
        # Accounts are append-only and created in command order, so plain
        # iteration is already canonical; no sort or JSON needed per event.
        ledger = self.ledger
        core = "|".join(
            f"{account.account_id}:{account.balance}"
            for account in ledger.accounts.values()
        )
        tail = f"|held:{ledger.held_total()}|epoch:{ledger.current_epoch}|now:{self.now}"
        return hashlib.sha256((core + tail).encode()).hexdigest()[:32]

    def check_invariants(self) -> dict[str, Optional[str]]:
        """Each named economy invariant: None when it holds, else a message."""
        results: dict[str, Optional[str]] = {}
        results["conservation"] = self.ledger.check_conservation()

        problem = None
        for st in self.ledger.statements:
            expected = role_reward(
                st.role_at_settlement, self.ledger.policy.base_reward,
                st.production, st.consumption)
            if st.reward != expected:
                problem = f"statement {st.account_id}@{st.epoch}: {st.reward} != {expected}"
                break
        results["settlement_exactness"] = problem

        problem = None
        for market_id, schedule in self.markets.schedules.items():
            market = self.markets.markets[market_id]
            pool = sum(self.markets.stakes[s].amount for s in market.stake_ids)
            paid = sum(c for _, c in schedule.payouts) + schedule.fee_taken
            if paid != pool:
                problem = f"market {market_id}: payouts+fee {paid} != pool {pool}"
                break
        results["market_exactness"] = problem

        problem = None
        for bounty in self.reviews.bounties.values():
            held = sum(
                self.ledger.holds[h].amount
                for h in bounty.slot_holds + ([bounty.remainder_hold] if bounty.remainder_hold else [])
                if self.ledger.holds[h].state is HoldState.HELD
            )
            if bounty.paid_total + bounty.refunded_total + held != bounty.reward:
                problem = (
                    f"bounty {bounty.bounty_id}: paid {bounty.paid_total} + refunded "
                    f"{bounty.refunded_total} + held {held} != reward {bounty.reward}"
                )
                break
        results["bounty_money_safety"] = problem

        mints = sum(
            t.amount for t in self.ledger.transactions if t.kind is TxnKind.SETTLEMENT_MINT)
        declared = sum(s.reward for s in self.ledger.statements)
        results["mint_statement_match"] = (
            None if mints == declared else f"mints {mints} != statements {declared}")
        return results
