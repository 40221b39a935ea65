"""Rule-based community moderation: flags, deterministic content scoring,
graduated threshold actions, and audited moderator overrides.

Scoring is a pluggable hook (`scorer`); the default combines a banned-term
lexicon, distinct-flagger pressure, and a shouting heuristic. HIDE always
tombstones, never deletes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Protocol

from . import errors
from .errors import PanvasError
from .engagement import Engagement
from .identity import Identity
from .ledger import Ledger, TxnKind, TREASURY
from .reviews import ReviewMarket


class FlagReason(str, Enum):
    ABUSE = "ABUSE"
    SPAM = "SPAM"
    OFF_TOPIC = "OFF_TOPIC"
    OTHER = "OTHER"


class ActionKind(str, Enum):
    NONE = "NONE"
    WARN = "WARN"
    HIDE = "HIDE"


@dataclass(frozen=True)
class Flag:
    flag_id: str
    target: str
    flagger_handle: str
    flagger_user: str
    reason: FlagReason


@dataclass(frozen=True)
class ModerationScore:
    target: str
    score: float
    components: dict[str, float]


@dataclass(frozen=True)
class ModerationAction:
    action_id: str
    target: str
    kind: ActionKind
    decided_at: int
    decided_by: str   # "RULE" or a moderator id


class Scorer(Protocol):
    def __call__(self, text: str, distinct_flaggers: int) -> dict[str, float]: ...


def lexicon_scorer(banned_terms: list[str]) -> Scorer:
    """Default deterministic rule scorer: 2.0 per banned-term hit, 1.0 per
    distinct flagger, 0.5 for sustained shouting (>70% uppercase over >=20
    letters)."""
    pattern = None
    if banned_terms:
        joined = "|".join(re.escape(t) for t in banned_terms if t.strip())
        if joined:
            pattern = re.compile(rf"\b(?:{joined})\b", re.IGNORECASE)

    def score(text: str, distinct_flaggers: int) -> dict[str, float]:
        components = {}
        hits = len(pattern.findall(text)) if pattern else 0
        if hits:
            components["banned_terms"] = 2.0 * hits
        if distinct_flaggers:
            components["flags"] = 1.0 * distinct_flaggers
        letters = [ch for ch in text if ch.isalpha()]
        if len(letters) >= 20:
            upper = sum(1 for ch in letters if ch.isupper())
            if upper / len(letters) > 0.7:
                components["shouting"] = 0.5
        return components

    return score


class Moderation:
    def __init__(
        self,
        engagement: Engagement,
        reviews: ReviewMarket,
        identity: Identity,
        ledger: Ledger,
        clock: Callable[[], int],
        banned_terms: Optional[list[str]] = None,
        warn_threshold: float = 3.0,
        hide_threshold: float = 6.0,
        scorer: Optional[Scorer] = None,
    ):
        if not 0 <= warn_threshold <= hide_threshold:
            raise PanvasError(errors.VALIDATION, "thresholds must satisfy 0 <= warn <= hide")
        self.engagement = engagement
        self.reviews = reviews
        self.identity = identity
        self.ledger = ledger
        self._clock = clock
        self.warn_threshold = warn_threshold
        self.hide_threshold = hide_threshold
        self.scorer = scorer or lexicon_scorer(banned_terms or [])
        self.flags: dict[str, list[Flag]] = {}
        self.actions: dict[str, ModerationAction] = {}
        self.audit: list[dict] = []
        self._next_flag = 1
        self._next_action = 1

    # -- targets -----------------------------------------------------------

    def _target_text(self, target: str) -> str:
        if target in self.engagement.comments:
            return self.engagement.comments[target].text
        if target in self.reviews.reviews:
            return self.reviews.reviews[target].text
        raise PanvasError(errors.UNKNOWN_TARGET, f"no comment or review {target}")

    # -- flags -------------------------------------------------------------------

    def flag_content(self, target: str, flagger_handle: str, reason: FlagReason) -> Flag:
        self._target_text(target)
        flagger_user = self.identity.resolve_handle(flagger_handle)
        existing = self.flags.setdefault(target, [])
        if any(f.flagger_user == flagger_user for f in existing):
            raise PanvasError(errors.DUPLICATE_FLAG, f"{flagger_handle} already flagged {target}")
        flag = Flag(f"flg{self._next_flag}", target, flagger_handle, flagger_user, reason)
        self._next_flag += 1
        existing.append(flag)
        self.apply_policy(target)
        return flag

    # -- scoring and actions ---------------------------------------------------------

    def score_content(self, target: str) -> ModerationScore:
        text = self._target_text(target)
        distinct = len({f.flagger_user for f in self.flags.get(target, [])})
        components = self.scorer(text, distinct)
        return ModerationScore(target, sum(components.values()), components)

    def _kind_for(self, score: float) -> ActionKind:
        if score >= self.hide_threshold:
            return ActionKind.HIDE
        if score >= self.warn_threshold:
            return ActionKind.WARN
        return ActionKind.NONE

    def apply_policy(self, target: str) -> ModerationAction:
        score = self.score_content(target)
        return self._apply(target, self._kind_for(score.score), "RULE")

    def moderator_override(self, target: str, kind: ActionKind, moderator: str) -> ModerationAction:
        self.identity.user(moderator)
        return self._apply(target, kind, moderator)

    def _apply(self, target: str, kind: ActionKind, decided_by: str) -> ModerationAction:
        previous = self.actions.get(target)
        # Rule actions never walk back a standing HIDE; only moderators do.
        if decided_by == "RULE" and previous is not None and previous.kind is ActionKind.HIDE:
            if kind is not ActionKind.HIDE:
                return previous
        action = ModerationAction(f"act{self._next_action}", target, kind, self._clock(), decided_by)
        self._next_action += 1
        was_hidden = self._is_hidden(target)
        if kind is ActionKind.HIDE and not was_hidden:
            self._hide(target)
        elif kind is ActionKind.NONE and was_hidden and decided_by != "RULE":
            self._unhide(target, decided_by)
        self.actions[target] = action
        self.audit.append({
            "action_id": action.action_id, "target": target,
            "kind": kind.value, "decided_by": decided_by, "at": action.decided_at,
        })
        return action

    def _is_hidden(self, target: str) -> bool:
        if target in self.engagement.comments:
            return self.engagement.comments[target].hidden
        return self.reviews.reviews[target].hidden

    def _hide(self, target: str) -> None:
        if target in self.engagement.comments:
            self.engagement.hide_comment(target)
            return
        review = self.reviews.reviews[target]
        review.hidden = True
        # A hidden review forfeits its payout (as far as the balance allows);
        # a successful appeal refunds exactly what was taken.
        reviewer_account = self.ledger.account_for_owner(review.reviewer)
        forfeit = min(review.paid, reviewer_account.balance)
        if forfeit > 0:
            self.ledger.post_transaction(
                reviewer_account.account_id, TREASURY, forfeit,
                TxnKind.DIRECT_REWARD, memo=f"moderation:forfeit:{target}",
            )
            review.forfeited = forfeit

    def _unhide(self, target: str, moderator: str) -> None:
        if target in self.engagement.comments:
            self.engagement.unhide_comment(target)
            return
        review = self.reviews.reviews[target]
        review.hidden = False
        if review.forfeited > 0:
            reviewer_account = self.ledger.account_for_owner(review.reviewer)
            self.ledger.post_transaction(
                TREASURY, reviewer_account.account_id, review.forfeited,
                TxnKind.MODERATION_REFUND, memo=f"moderation:appeal:{target}:{moderator}",
            )
            review.forfeited = 0

    def view(self, target: str) -> dict:
        score = self.score_content(target)
        action = self.actions.get(target)
        return {
            "target": target,
            "score": score.score,
            "components": score.components,
            "action": action.kind.value if action else ActionKind.NONE.value,
            "flag_count": len(self.flags.get(target, [])),
        }
