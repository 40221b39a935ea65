"""Community engagement: multi-dimensional ratings, threaded discussions on
anchors, reaction emojis, and author-blind visibility ranking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import errors
from .errors import PanvasError
from .identity import Identity
from .papers import PaperStore

RATING_DIMENSIONS = ("ORIGINALITY", "SOUNDNESS", "IMPACT")

DEFAULT_EMOJI = ("👍", "👎", "🎉", "🤔", "❤️")


@dataclass
class RatingBallot:
    ballot_id: str
    paper_id: str
    rater_handle: str
    rater_user: str      # real account behind the handle, server-side
    scores: dict[str, int]


@dataclass
class Comment:
    comment_id: str
    thread_id: str
    parent_id: Optional[str]
    author_handle: str
    author_user: str
    text: str
    created_at: int
    hidden: bool = False


@dataclass
class Thread:
    thread_id: str
    anchor_id: str
    paper_id: str
    comment_ids: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Reaction:
    target: str
    reactor_handle: str
    reactor_user: str
    emoji: str


def score_visibility(
    rating_mean: Optional[float],
    review_count: int,
    commenter_count: int,
    weights: tuple[float, float, float],
) -> float:
    """Merit signal only: ratings, reviews, and breadth of discussion. Author
    identity, reputation and affiliation cannot reach this function."""
    w1, w2, w3 = weights
    base = rating_mean if rating_mean is not None else 0.0
    return w1 * base + w2 * math.log(1 + review_count) + w3 * math.log(1 + commenter_count)


class Engagement:
    def __init__(
        self,
        papers: PaperStore,
        identity: Identity,
        clock: Callable[[], int],
        emoji_set: tuple[str, ...] = DEFAULT_EMOJI,
        visibility_weights: tuple[float, float, float] = (1.0, 0.5, 0.25),
    ):
        self.papers = papers
        self.identity = identity
        self._clock = clock
        self.emoji_set = frozenset(emoji_set)
        self.visibility_weights = visibility_weights
        self.ballots: dict[tuple[str, str], RatingBallot] = {}   # (paper, rater_user) -> latest
        self.ballot_history: list[RatingBallot] = []
        self.threads: dict[str, Thread] = {}
        self.comments: dict[str, Comment] = {}
        self.reactions: dict[tuple[str, str, str], Reaction] = {}   # (target, reactor_user, emoji)
        self._next_ballot = 1
        self._next_thread = 1
        self._next_comment = 1

    # -- ratings -----------------------------------------------------------

    def cast_rating(self, paper_id: str, rater_handle: str, scores: dict[str, int]) -> tuple[RatingBallot, bool]:
        """Record (or replace) a ballot. Returns (ballot, first_time) so the
        caller can award consumption activity once per rater per paper."""
        paper = self.papers.paper(paper_id)
        missing = [d for d in RATING_DIMENSIONS if d not in scores]
        if missing:
            raise PanvasError(errors.INCOMPLETE_SCORES, f"missing dimensions: {missing}")
        for dim in RATING_DIMENSIONS:
            if not 1 <= scores[dim] <= 10:
                raise PanvasError(errors.OUT_OF_RANGE, f"{dim} score must be 1-10")
        rater_user = self.identity.resolve_handle(rater_handle, paper_id)
        if rater_user in paper.author_ids:
            raise PanvasError(errors.SELF_RATING, "authors cannot rate their own paper")
        key = (paper_id, rater_user)
        first_time = key not in self.ballots
        ballot = RatingBallot(
            f"blt{self._next_ballot}", paper_id, rater_handle, rater_user,
            {d: scores[d] for d in RATING_DIMENSIONS},
        )
        self._next_ballot += 1
        self.ballots[key] = ballot
        self.ballot_history.append(ballot)
        return ballot, first_time

    def summarize_ratings(self, paper_id: str) -> dict:
        latest = [b for (pid, _), b in self.ballots.items() if pid == paper_id]
        count = len(latest)
        if count == 0:
            return {"paper_id": paper_id, "count": 0, "means": None}
        means = {
            dim: sum(b.scores[dim] for b in latest) / count
            for dim in RATING_DIMENSIONS
        }
        return {"paper_id": paper_id, "count": count, "means": means}

    # -- threads -----------------------------------------------------------

    def open_thread(self, anchor_id: str) -> Thread:
        fragment, _, _ = self.papers.resolve_anchor(anchor_id)
        thread = Thread(f"t{self._next_thread}", anchor_id, fragment.paper_id)
        self._next_thread += 1
        self.threads[thread.thread_id] = thread
        return thread

    def thread(self, thread_id: str) -> Thread:
        thread = self.threads.get(thread_id)
        if thread is None:
            raise PanvasError(errors.UNKNOWN_THREAD, f"no thread {thread_id}")
        return thread

    def post_comment(self, thread_id: str, parent_id: Optional[str], author_handle: str, text: str) -> Comment:
        thread = self.thread(thread_id)
        if not text or not text.strip():
            raise PanvasError(errors.EMPTY_TEXT, "comment text must be non-empty")
        if parent_id is not None:
            parent = self.comments.get(parent_id)
            if parent is None or parent.thread_id != thread_id:
                raise PanvasError(errors.UNKNOWN_PARENT, f"no parent {parent_id} in thread")
            if parent.hidden:
                raise PanvasError(errors.PARENT_HIDDEN, "cannot reply to a hidden comment")
        author_user = self.identity.resolve_handle(author_handle, thread.paper_id)
        comment = Comment(
            f"c{self._next_comment}", thread_id, parent_id,
            author_handle, author_user, text, self._clock(),
        )
        self._next_comment += 1
        self.comments[comment.comment_id] = comment
        thread.comment_ids.append(comment.comment_id)
        return comment

    def comment(self, comment_id: str) -> Comment:
        comment = self.comments.get(comment_id)
        if comment is None:
            raise PanvasError(errors.UNKNOWN_TARGET, f"no comment {comment_id}")
        return comment

    def hide_comment(self, comment_id: str) -> Comment:
        # Tombstone: the record stays so reply chains keep their shape.
        comment = self.comment(comment_id)
        comment.hidden = True
        return comment

    def unhide_comment(self, comment_id: str) -> Comment:
        comment = self.comment(comment_id)
        comment.hidden = False
        return comment

    def thread_tree(self, thread_id: str) -> list[dict]:
        """Nested view; hidden comments appear tombstoned, never removed."""
        thread = self.thread(thread_id)
        by_parent: dict[Optional[str], list[Comment]] = {}
        for cid in thread.comment_ids:
            c = self.comments[cid]
            by_parent.setdefault(c.parent_id, []).append(c)

        def render(parent_id: Optional[str]) -> list[dict]:
            out = []
            for c in by_parent.get(parent_id, []):
                out.append({
                    "comment_id": c.comment_id,
                    "author": None if c.hidden else c.author_handle,
                    "text": "[hidden by moderation]" if c.hidden else c.text,
                    "hidden": c.hidden,
                    "created_at": c.created_at,
                    "replies": render(c.comment_id),
                })
            return out

        return render(None)

    # -- reactions -----------------------------------------------------------

    def react(self, target: str, reactor_handle: str, emoji: str) -> bool:
        """Toggle a reaction; returns True when added, False when removed."""
        if emoji not in self.emoji_set:
            raise PanvasError(errors.UNKNOWN_EMOJI, f"{emoji} is not in the configured set")
        if target in self.comments:
            paper_id = self.threads[self.comments[target].thread_id].paper_id
        elif target in self.papers.fragments:
            paper_id = self.papers.fragments[target].paper_id
        else:
            raise PanvasError(errors.UNKNOWN_TARGET, f"no comment or fragment {target}")
        reactor_user = self.identity.resolve_handle(reactor_handle, paper_id)
        key = (target, reactor_user, emoji)
        if key in self.reactions:
            del self.reactions[key]
            return False
        self.reactions[key] = Reaction(target, reactor_handle, reactor_user, emoji)
        return True

    def reaction_counts(self, target: str) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.reactions.values():
            if r.target == target:
                counts[r.emoji] = counts.get(r.emoji, 0) + 1
        return dict(sorted(counts.items()))

    # -- visibility -----------------------------------------------------------

    def distinct_commenters(self, paper_id: str) -> int:
        users = {
            c.author_user
            for c in self.comments.values()
            if not c.hidden and self.threads[c.thread_id].paper_id == paper_id
        }
        return len(users)

    def visibility_score(self, paper_id: str, delivered_review_count: int) -> float:
        summary = self.summarize_ratings(paper_id)
        mean_of_means = None
        if summary["means"] is not None:
            values = list(summary["means"].values())
            mean_of_means = sum(values) / len(values)
        return score_visibility(
            mean_of_means, delivered_review_count,
            self.distinct_commenters(paper_id), self.visibility_weights,
        )
