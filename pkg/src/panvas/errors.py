"""Domain error with a stable machine-readable code.

Every operation failure surfaces as a PanvasError; the HTTP layer maps it
to a ``{code, message}`` body with the code verbatim.
"""

from __future__ import annotations


class PanvasError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


# Generic validation failure (bad argument shape/value, not a domain rule).
VALIDATION = "VALIDATION"

# ledger
DUPLICATE_OWNER = "DUPLICATE_OWNER"
UNKNOWN_ACCOUNT = "UNKNOWN_ACCOUNT"
INSUFFICIENT_FUNDS = "INSUFFICIENT_FUNDS"
SAME_ACCOUNT = "SAME_ACCOUNT"
KIND_CONSTRAINT_VIOLATION = "KIND_CONSTRAINT_VIOLATION"
ALREADY_SETTLED = "ALREADY_SETTLED"
UNKNOWN_EVENT_KIND = "UNKNOWN_EVENT_KIND"
EPOCH_ALREADY_SETTLED = "EPOCH_ALREADY_SETTLED"
EPOCH_NOT_CURRENT = "EPOCH_NOT_CURRENT"
TREASURY_EXHAUSTED = "TREASURY_EXHAUSTED"
ALREADY_VIP = "ALREADY_VIP"

# identity
UNKNOWN_USER = "UNKNOWN_USER"
SCORE_BELOW_THRESHOLD = "SCORE_BELOW_THRESHOLD"
LICENSE_EXISTS = "LICENSE_EXISTS"
NO_ACTIVE_LICENSE = "NO_ACTIVE_LICENSE"
UNKNOWN_HANDLE = "UNKNOWN_HANDLE"
OUT_OF_RANGE = "OUT_OF_RANGE"

# paper store
UNKNOWN_PAPER = "UNKNOWN_PAPER"
UNKNOWN_FRAGMENT = "UNKNOWN_FRAGMENT"
PAPER_FROZEN = "PAPER_FROZEN"
EMPTY_CONTENT = "EMPTY_CONTENT"
CONTENT_TOO_LARGE = "CONTENT_TOO_LARGE"
CYCLE_DETECTED = "CYCLE_DETECTED"
CROSS_PAPER_LINK = "CROSS_PAPER_LINK"
DUPLICATE_LINK = "DUPLICATE_LINK"
UNKNOWN_ANCHOR = "UNKNOWN_ANCHOR"
NOT_AN_AUTHOR = "NOT_AN_AUTHOR"

# review market
UNKNOWN_BOUNTY = "UNKNOWN_BOUNTY"
UNKNOWN_ASSIGNMENT = "UNKNOWN_ASSIGNMENT"
UNKNOWN_REVIEW = "UNKNOWN_REVIEW"
INVALID_SLOTS = "INVALID_SLOTS"
UNLICENSED = "UNLICENSED"
CONFLICT_OF_INTEREST = "CONFLICT_OF_INTEREST"
ASK_TOO_HIGH = "ASK_TOO_HIGH"
BOUNTY_CLOSED = "BOUNTY_CLOSED"
DUPLICATE_BID = "DUPLICATE_BID"
NO_BIDS = "NO_BIDS"
DEADLINE_PASSED = "DEADLINE_PASSED"
INCOMPLETE_SCORES = "INCOMPLETE_SCORES"
TEXT_TOO_SHORT = "TEXT_TOO_SHORT"
SELF_META_REVIEW = "SELF_META_REVIEW"
DUPLICATE = "DUPLICATE"

# engagement
SELF_RATING = "SELF_RATING"
UNKNOWN_THREAD = "UNKNOWN_THREAD"
UNKNOWN_PARENT = "UNKNOWN_PARENT"
EMPTY_TEXT = "EMPTY_TEXT"
PARENT_HIDDEN = "PARENT_HIDDEN"
UNKNOWN_EMOJI = "UNKNOWN_EMOJI"

# prediction market
UNKNOWN_MARKET = "UNKNOWN_MARKET"
DUPLICATE_MARKET = "DUPLICATE_MARKET"
MARKET_CLOSED = "MARKET_CLOSED"
AUTHOR_CANNOT_BET = "AUTHOR_CANNOT_BET"
ALREADY_RESOLVED = "ALREADY_RESOLVED"
NOT_CLOSED = "NOT_CLOSED"

# moderation
DUPLICATE_FLAG = "DUPLICATE_FLAG"
UNKNOWN_TARGET = "UNKNOWN_TARGET"

# service / persistence
CORRUPT_LOG = "CORRUPT_LOG"
BIND_FAILURE = "BIND_FAILURE"
UNKNOWN_COMMAND = "UNKNOWN_COMMAND"
INVARIANT_VIOLATION = "INVARIANT_VIOLATION"
