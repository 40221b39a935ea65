"""Users, the tripartite role model, reviewer licensing, reputation, and
stable per-paper incognito pseudonyms."""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import errors
from .errors import PanvasError
from .ledger import Role


class LicenseStatus(str, Enum):
    ACTIVE = "ACTIVE"
    REVOKED = "REVOKED"


@dataclass
class User:
    user_id: str
    display_name: str
    role: Role
    expertise: frozenset[str]
    reputation: float


@dataclass
class ReviewerLicense:
    user_id: str
    fields_of_expertise: frozenset[str]
    exam_score: int
    granted_at: int
    status: LicenseStatus = LicenseStatus.ACTIVE


@dataclass(frozen=True)
class Pseudonym:
    pseudonym_id: str
    user_id: str
    paper_id: str


def _canonical(user_id: str, paper_id: str) -> bytes:
    # Length-prefixed so no (user, paper) pair can collide by concatenation.
    return f"{len(user_id)}:{user_id}|{len(paper_id)}:{paper_id}".encode()


def derive_handle(server_key: str, user_id: str, paper_id: str) -> str:
    """Keyed-hash pseudonym: HMAC-SHA256 truncated to 128 bits. Stable for
    one (user, paper) pair, unlinkable across papers without the key."""
    digest = hmac.new(server_key.encode(), _canonical(user_id, paper_id), hashlib.sha256).digest()
    return "anon-" + digest[:16].hex()


class Identity:
    def __init__(
        self,
        server_key: str,
        pass_threshold: int = 70,
        reputation_alpha: float = 0.2,
        reputation_prior: float = 0.5,
        clock: Callable[[], int] = lambda: 0,
    ):
        if not server_key:
            raise PanvasError(errors.VALIDATION, "server_key must be set")
        if not 0.0 < reputation_alpha <= 1.0 or not 0.0 <= reputation_prior <= 1.0:
            raise PanvasError(errors.VALIDATION, "bad reputation parameters")
        self._server_key = server_key
        self.pass_threshold = pass_threshold
        self.alpha = reputation_alpha
        self.prior = reputation_prior
        self._clock = clock
        self.users: dict[str, User] = {}
        self.licenses: dict[str, ReviewerLicense] = {}
        self.license_history: list[ReviewerLicense] = []
        self._pseudonyms: dict[str, Pseudonym] = {}        # handle -> scope, server-side only
        self._by_scope: dict[tuple[str, str], str] = {}
        self.unmask_audit: list[dict] = []
        self._next_user = 1

    def register_user(self, display_name: str, expertise: set[str] | frozenset[str]) -> User:
        if not display_name or not display_name.strip():
            raise PanvasError(errors.VALIDATION, "display_name must be non-empty")
        user = User(
            f"u{self._next_user}", display_name, Role.FREEMAN,
            frozenset(expertise), self.prior,
        )
        self._next_user += 1
        self.users[user.user_id] = user
        return user

    def user(self, user_id: str) -> User:
        user = self.users.get(user_id)
        if user is None:
            raise PanvasError(errors.UNKNOWN_USER, f"no user {user_id}")
        return user

    def assign_role(self, user_id: str, role: Role) -> User:
        # Effective at the next settlement: settlement reads roles at epoch close.
        user = self.user(user_id)
        user.role = role
        return user

    # -- licensing -----------------------------------------------------------

    def grant_license(self, user_id: str, fields: set[str] | frozenset[str], exam_score: int) -> ReviewerLicense:
        self.user(user_id)
        if not 0 <= exam_score <= 100:
            raise PanvasError(errors.OUT_OF_RANGE, "exam_score must be 0-100")
        if exam_score < self.pass_threshold:
            raise PanvasError(
                errors.SCORE_BELOW_THRESHOLD,
                f"score {exam_score} below pass threshold {self.pass_threshold}",
            )
        if user_id in self.licenses:
            raise PanvasError(errors.LICENSE_EXISTS, f"{user_id} already holds an active license")
        lic = ReviewerLicense(user_id, frozenset(fields), exam_score, self._clock())
        self.licenses[user_id] = lic
        self.license_history.append(lic)
        return lic

    def revoke_license(self, user_id: str) -> ReviewerLicense:
        lic = self.licenses.pop(user_id, None)
        if lic is None:
            raise PanvasError(errors.NO_ACTIVE_LICENSE, f"{user_id} has no active license")
        lic.status = LicenseStatus.REVOKED
        return lic

    def is_licensed(self, user_id: str) -> bool:
        return user_id in self.licenses

    # -- pseudonyms ------------------------------------------------------------

    def derive_pseudonym(self, user_id: str, paper_id: str) -> Pseudonym:
        self.user(user_id)
        scope = (user_id, paper_id)
        handle = self._by_scope.get(scope)
        if handle is not None:
            return self._pseudonyms[handle]
        handle = derive_handle(self._server_key, user_id, paper_id)
        pseudonym = Pseudonym(handle, user_id, paper_id)
        self._pseudonyms[handle] = pseudonym
        self._by_scope[scope] = handle
        return pseudonym

    def resolve_handle(self, handle: str, paper_id: Optional[str] = None) -> str:
        """Map a display handle (real user id or pseudonym) to the real user id.
        Pseudonyms only resolve within the paper they were derived for."""
        if handle in self.users:
            return handle
        pseudonym = self._pseudonyms.get(handle)
        if pseudonym is None:
            raise PanvasError(errors.UNKNOWN_HANDLE, f"unknown handle {handle}")
        if paper_id is not None and pseudonym.paper_id != paper_id:
            raise PanvasError(errors.UNKNOWN_HANDLE, "pseudonym is scoped to a different paper")
        return pseudonym.user_id

    def unmask(self, handle: str, moderator: str, reason: str) -> Pseudonym:
        # Moderation escalation path; every use is audited.
        pseudonym = self._pseudonyms.get(handle)
        if pseudonym is None:
            raise PanvasError(errors.UNKNOWN_HANDLE, f"unknown handle {handle}")
        self.unmask_audit.append({
            "handle": handle, "moderator": moderator, "reason": reason,
            "at": self._clock(),
        })
        return pseudonym

    # -- reputation -------------------------------------------------------------

    def update_reputation(self, user_id: str, meta_review_quality: int) -> User:
        user = self.user(user_id)
        if not 1 <= meta_review_quality <= 5:
            raise PanvasError(errors.OUT_OF_RANGE, "meta-review quality must be 1-5")
        observation = (meta_review_quality - 1) / 4
        user.reputation = (1 - self.alpha) * user.reputation + self.alpha * observation
        return user
