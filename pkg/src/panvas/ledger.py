"""Double-entry credit ledger with escrow and role-based epoch settlement.

All value is integer credits. Every flow — transfers, escrow moves,
settlement mints, achievement rewards — is a posting between exactly two
accounts, so the grand total over TREASURY, ESCROW_POOL and user accounts
never changes after genesis. The transaction log is append-only;
corrections are compensating transactions, never edits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Sequence

from . import errors
from .errors import PanvasError

TREASURY = "TREASURY"
ESCROW_POOL = "ESCROW_POOL"


class Role(str, Enum):
    FREEMAN = "FREEMAN"
    PRODUCER = "PRODUCER"
    CONSUMER = "CONSUMER"


class TxnKind(str, Enum):
    DIRECT_REWARD = "DIRECT_REWARD"
    BOUNTY_ESCROW = "BOUNTY_ESCROW"
    BOUNTY_PAYOUT = "BOUNTY_PAYOUT"
    BET_STAKE = "BET_STAKE"
    BET_PROFIT = "BET_PROFIT"
    ACHIEVEMENT = "ACHIEVEMENT"
    SETTLEMENT_MINT = "SETTLEMENT_MINT"
    VIP_PURCHASE = "VIP_PURCHASE"
    MODERATION_REFUND = "MODERATION_REFUND"


class HoldReason(str, Enum):
    BOUNTY = "BOUNTY"
    STAKE = "STAKE"


class HoldState(str, Enum):
    HELD = "HELD"
    RELEASED = "RELEASED"
    REFUNDED = "REFUNDED"


# Account the kind must touch, and on which side.
_KIND_RULES: dict[TxnKind, tuple[str, str]] = {
    TxnKind.SETTLEMENT_MINT: ("debit", TREASURY),
    TxnKind.ACHIEVEMENT: ("debit", TREASURY),
    TxnKind.MODERATION_REFUND: ("debit", TREASURY),
    TxnKind.VIP_PURCHASE: ("credit", TREASURY),
    TxnKind.BOUNTY_ESCROW: ("credit", ESCROW_POOL),
    TxnKind.BET_STAKE: ("credit", ESCROW_POOL),
    TxnKind.BOUNTY_PAYOUT: ("debit", ESCROW_POOL),
    TxnKind.BET_PROFIT: ("debit", ESCROW_POOL),
}

_ESCROW_KINDS = {
    HoldReason.BOUNTY: (TxnKind.BOUNTY_ESCROW, TxnKind.BOUNTY_PAYOUT),
    HoldReason.STAKE: (TxnKind.BET_STAKE, TxnKind.BET_PROFIT),
}

FORMULA_TAGS = {
    Role.PRODUCER: "R0+P",
    Role.CONSUMER: "R0+C",
    Role.FREEMAN: "R0+(P+C)/2",
}


def role_reward(role: Role, r0: int, p: int, c: int) -> int:
    """Settlement reward for one account: Producers earn R0+P, Consumers
    R0+C, Freemen the hybrid R0+(P+C)/2 with floor division."""
    if role is Role.PRODUCER:
        return r0 + p
    if role is Role.CONSUMER:
        return r0 + c
    return r0 + (p + c) // 2


@dataclass
class Account:
    account_id: str
    owner: str
    balance: int = 0
    vip: bool = False
    created_at: int = 0


@dataclass(frozen=True)
class Transaction:
    txn_id: str
    debit_account: str
    credit_account: str
    amount: int
    kind: TxnKind
    memo: str
    epoch: int

    def to_record(self) -> dict:
        return {
            "txn_id": self.txn_id,
            "debit": self.debit_account,
            "credit": self.credit_account,
            "amount": self.amount,
            "kind": self.kind.value,
            "memo": self.memo,
            "epoch": self.epoch,
        }


@dataclass
class EscrowHold:
    hold_id: str
    source_account: str
    amount: int
    reason: HoldReason
    state: HoldState = HoldState.HELD


@dataclass
class ActivityCounters:
    account_id: str
    epoch: int
    production: int = 0
    consumption: int = 0


@dataclass(frozen=True)
class AchievementRule:
    rule_id: str
    event: str
    count: int
    reward: int
    description: str = ""


@dataclass(frozen=True)
class RewardStatement:
    account_id: str
    epoch: int
    role_at_settlement: Role
    production: int
    consumption: int
    reward: int
    formula_tag: str


@dataclass
class LedgerPolicy:
    """Economy knobs, loaded from configuration (never hard-coded call sites)."""

    genesis_treasury: int = 1_000_000
    base_reward: int = 10          # R0
    activity_gate: int = 1         # minimum P+C to receive a settlement
    vip_price: int = 100
    production_weights: dict[str, int] = field(default_factory=lambda: {
        "REVIEW_SUBMITTED": 10,
        "META_REVIEW_SUBMITTED": 2,
        "FRAGMENT_PUBLISHED": 5,
    })
    consumption_weights: dict[str, int] = field(default_factory=lambda: {
        "RATING_CAST": 1,
        "COMMENT_POSTED": 1,
        "STAKE_PLACED": 1,
        "REACTION": 0,
    })
    achievements: list[AchievementRule] = field(default_factory=list)

    def __post_init__(self):
        if self.genesis_treasury < 0 or self.base_reward < 0 or self.activity_gate < 0:
            raise PanvasError(errors.VALIDATION, "policy amounts must be non-negative")
        if self.vip_price <= 0:
            raise PanvasError(errors.VALIDATION, "vip_price must be positive")
        for table in (self.production_weights, self.consumption_weights):
            for kind, w in table.items():
                if w < 0:
                    raise PanvasError(errors.VALIDATION, f"weight for {kind} must be >= 0")
        for rule in self.achievements:
            if rule.reward < 0 or rule.count < 1:
                raise PanvasError(errors.VALIDATION, f"bad achievement rule {rule.rule_id}")
        # Milestones paid in rule-id order when several trigger at once.
        self.achievements = sorted(self.achievements, key=lambda r: r.rule_id)

    def knows_event(self, event_kind: str) -> bool:
        return event_kind in self.production_weights or event_kind in self.consumption_weights


class Ledger:
    """Single-writer ledger: one total order of postings, atomic settlement."""

    def __init__(self, policy: LedgerPolicy, clock: Callable[[], int] = lambda: 0):
        self.policy = policy
        self._clock = clock
        self.accounts: dict[str, Account] = {}
        self._owner_index: dict[str, str] = {}
        self.transactions: list[Transaction] = []
        self.holds: dict[str, EscrowHold] = {}
        self.counters: dict[str, ActivityCounters] = {}
        self.lifetime_counts: dict[str, dict[str, int]] = {}
        self.statements: list[RewardStatement] = []
        self._paid_achievements: set[tuple[str, str]] = set()
        self.current_epoch = 0
        self._next_account = 1
        self._next_txn = 1
        self._next_hold = 1
        # Running totals so reporting stays O(accounts), not O(transactions).
        self._minted = {"settlement": 0, "achievement": 0}
        self._held_total = 0
        # Genesis: the two system accounts, treasury pre-seeded.
        self._create_account(TREASURY, TREASURY, policy.genesis_treasury)
        self._create_account(ESCROW_POOL, ESCROW_POOL, 0)

    # -- accounts ----------------------------------------------------------

    def _create_account(self, account_id: str, owner: str, balance: int) -> Account:
        acct = Account(account_id, owner, balance, created_at=self._clock())
        self.accounts[account_id] = acct
        self._owner_index[owner] = account_id
        return acct

    def open_account(self, owner: str) -> Account:
        if owner in self._owner_index:
            raise PanvasError(errors.DUPLICATE_OWNER, f"{owner} already has an account")
        if owner in (TREASURY, ESCROW_POOL):
            raise PanvasError(errors.DUPLICATE_OWNER, "system accounts exist from genesis")
        acct = self._create_account(f"a{self._next_account}", owner, 0)
        self._next_account += 1
        return acct

    def account(self, account_id: str) -> Account:
        acct = self.accounts.get(account_id)
        if acct is None:
            raise PanvasError(errors.UNKNOWN_ACCOUNT, f"no account {account_id}")
        return acct

    def account_for_owner(self, owner: str) -> Account:
        account_id = self._owner_index.get(owner)
        if account_id is None:
            raise PanvasError(errors.UNKNOWN_ACCOUNT, f"no account for owner {owner}")
        return self.accounts[account_id]

    # -- postings ----------------------------------------------------------

    def _post(self, debit: str, credit: str, amount: int, kind: TxnKind, memo: str) -> Transaction:
        """Unchecked-taxonomy posting used by ledger internals; still enforces
        zero-sum, positivity and overdraft atomically."""
        if amount <= 0:
            raise PanvasError(errors.VALIDATION, "amount must be positive")
        if debit == credit:
            raise PanvasError(errors.SAME_ACCOUNT, "debit and credit must differ")
        rule = _KIND_RULES.get(kind)
        if rule is not None:
            side, required = rule
            actual = debit if side == "debit" else credit
            if actual != required:
                raise PanvasError(
                    errors.KIND_CONSTRAINT_VIOLATION,
                    f"{kind.value} must {side} {required}",
                )
        debit_acct = self.account(debit)
        credit_acct = self.account(credit)
        if debit_acct.balance < amount:
            raise PanvasError(
                errors.INSUFFICIENT_FUNDS,
                f"{debit} has {debit_acct.balance}, needs {amount}",
            )
        txn = Transaction(f"txn{self._next_txn}", debit, credit, amount, kind, memo, self.current_epoch)
        self._next_txn += 1
        debit_acct.balance -= amount
        credit_acct.balance += amount
        self.transactions.append(txn)
        if kind is TxnKind.SETTLEMENT_MINT:
            self._minted["settlement"] += amount
        elif kind is TxnKind.ACHIEVEMENT:
            self._minted["achievement"] += amount
        return txn

    def post_transaction(self, debit: str, credit: str, amount: int, kind: TxnKind, memo: str = "") -> Transaction:
        # Escrow moves must go through holds so the escrow identity cannot drift.
        if ESCROW_POOL in (debit, credit):
            raise PanvasError(
                errors.KIND_CONSTRAINT_VIOLATION,
                "escrow moves only via hold/release/refund/settle operations",
            )
        return self._post(debit, credit, amount, kind, memo)

    # -- escrow ------------------------------------------------------------

    def hold_escrow(self, source: str, amount: int, reason: HoldReason, memo: str = "") -> EscrowHold:
        escrow_kind, _ = _ESCROW_KINDS[reason]
        self._post(source, ESCROW_POOL, amount, escrow_kind, memo)
        hold = EscrowHold(f"hold{self._next_hold}", source, amount, reason)
        self._next_hold += 1
        self.holds[hold.hold_id] = hold
        self._held_total += amount
        return hold

    def _held(self, hold_id: str) -> EscrowHold:
        hold = self.holds.get(hold_id)
        if hold is None:
            raise PanvasError(errors.UNKNOWN_ACCOUNT, f"no hold {hold_id}")
        if hold.state is not HoldState.HELD:
            raise PanvasError(errors.ALREADY_SETTLED, f"hold {hold_id} is {hold.state.value}")
        return hold

    def release_escrow(self, hold_id: str, beneficiary: str, memo: str = "") -> Transaction:
        hold = self._held(hold_id)
        _, payout_kind = _ESCROW_KINDS[hold.reason]
        txn = self._post(ESCROW_POOL, beneficiary, hold.amount, payout_kind, memo)
        hold.state = HoldState.RELEASED
        self._held_total -= hold.amount
        return txn

    def refund_escrow(self, hold_id: str, memo: str = "") -> Transaction:
        hold = self._held(hold_id)
        _, payout_kind = _ESCROW_KINDS[hold.reason]
        txn = self._post(ESCROW_POOL, hold.source_account, hold.amount, payout_kind, memo)
        hold.state = HoldState.REFUNDED
        self._held_total -= hold.amount
        return txn

    def settle_escrow(
        self,
        hold_ids: Sequence[str],
        distribution: Sequence[tuple[str, int]],
        memo: str = "",
    ) -> list[Transaction]:
        """Consume a group of holds into a multi-party distribution that sums
        to exactly the held total. Zero-credit entries are legal (no posting).
        Each hold still transitions HELD -> RELEASED exactly once."""
        holds = [self._held(h) for h in hold_ids]
        total = sum(h.amount for h in holds)
        paid = sum(amount for _, amount in distribution)
        if paid != total:
            raise PanvasError(
                errors.VALIDATION,
                f"distribution {paid} must equal held total {total}",
            )
        if any(amount < 0 for _, amount in distribution):
            raise PanvasError(errors.VALIDATION, "negative distribution entry")
        txns = []
        for beneficiary, amount in distribution:
            if amount == 0:
                continue
            _, payout_kind = _ESCROW_KINDS[holds[0].reason]
            txns.append(self._post(ESCROW_POOL, beneficiary, amount, payout_kind, memo))
        for hold in holds:
            hold.state = HoldState.RELEASED
            self._held_total -= hold.amount
        return txns

    def held_total(self) -> int:
        return self._held_total

    # -- activity and settlement -------------------------------------------

    def record_activity(self, account_id: str, event_kind: str) -> ActivityCounters:
        self.account(account_id)
        if not self.policy.knows_event(event_kind):
            raise PanvasError(errors.UNKNOWN_EVENT_KIND, f"no weight for {event_kind}")
        ctr = self.counters.get(account_id)
        if ctr is None:
            ctr = ActivityCounters(account_id, self.current_epoch)
            self.counters[account_id] = ctr
        ctr.production += self.policy.production_weights.get(event_kind, 0)
        ctr.consumption += self.policy.consumption_weights.get(event_kind, 0)
        lifetime = self.lifetime_counts.setdefault(account_id, {})
        lifetime[event_kind] = lifetime.get(event_kind, 0) + 1
        return ctr

    def settle_epoch(self, epoch: int, roles: Mapping[str, Role]) -> list[RewardStatement]:
        """Close the current epoch: mint R = R0 + volume term for every account
        passing the activity gate, from a finite treasury, atomically."""
        if epoch < self.current_epoch:
            raise PanvasError(errors.EPOCH_ALREADY_SETTLED, f"epoch {epoch} already settled")
        if epoch > self.current_epoch:
            raise PanvasError(errors.EPOCH_NOT_CURRENT, f"current epoch is {self.current_epoch}")
        r0 = self.policy.base_reward
        statements = []
        for account_id in sorted(self.counters):
            ctr = self.counters[account_id]
            if ctr.production + ctr.consumption < self.policy.activity_gate:
                continue
            role = roles.get(account_id)
            if role is None:
                continue
            reward = role_reward(role, r0, ctr.production, ctr.consumption)
            if reward <= 0:
                continue
            statements.append(RewardStatement(
                account_id, epoch, role, ctr.production, ctr.consumption,
                reward, FORMULA_TAGS[role],
            ))
        total = sum(s.reward for s in statements)
        if self.accounts[TREASURY].balance < total:
            raise PanvasError(
                errors.TREASURY_EXHAUSTED,
                f"treasury {self.accounts[TREASURY].balance} cannot mint {total}",
            )
        for st in statements:
            self._post(TREASURY, st.account_id, st.reward, TxnKind.SETTLEMENT_MINT, f"epoch:{epoch}")
        self.statements.extend(statements)
        self.counters = {}
        self.current_epoch += 1
        return statements

    def evaluate_achievements(self, account_id: str) -> list[Transaction]:
        """Pay any newly satisfied milestones, each at most once per account
        ever. No-op (empty list) when nothing new is due."""
        self.account(account_id)
        counts = self.lifetime_counts.get(account_id, {})
        treasury = self.accounts[TREASURY]
        txns = []
        for rule in self.policy.achievements:
            key = (account_id, rule.rule_id)
            if key in self._paid_achievements:
                continue
            if counts.get(rule.event, 0) < rule.count:
                continue
            if rule.reward == 0 or treasury.balance < rule.reward:
                continue
            txns.append(self._post(
                TREASURY, account_id, rule.reward, TxnKind.ACHIEVEMENT,
                f"achievement:{rule.rule_id}",
            ))
            self._paid_achievements.add(key)
        return txns

    def purchase_vip(self, account_id: str) -> Transaction:
        acct = self.account(account_id)
        if acct.vip:
            raise PanvasError(errors.ALREADY_VIP, f"{account_id} is already VIP")
        if acct.balance < self.policy.vip_price:
            raise PanvasError(
                errors.INSUFFICIENT_FUNDS,
                f"VIP costs {self.policy.vip_price}, balance is {acct.balance}",
            )
        txn = self._post(account_id, TREASURY, self.policy.vip_price, TxnKind.VIP_PURCHASE, "vip")
        acct.vip = True
        return txn

    # -- reporting ----------------------------------------------------------

    def balance_sheet(self) -> dict:
        user_accounts = {
            a.account_id: a.balance
            for a in self.accounts.values()
            if a.account_id not in (TREASURY, ESCROW_POOL)
        }
        treasury = self.accounts[TREASURY].balance
        escrow = self.accounts[ESCROW_POOL].balance
        user_total = sum(user_accounts.values())
        minted = dict(self._minted)
        return {
            "treasury": treasury,
            "escrow": escrow,
            "user_total": user_total,
            "grand_total": treasury + escrow + user_total,
            "genesis_total": self.policy.genesis_treasury,
            "cumulative_mints": minted,
            "accounts": dict(sorted(user_accounts.items())),
            "epoch": self.current_epoch,
        }

    def export_log(self) -> Iterable[str]:
        for txn in self.transactions:
            yield json.dumps(txn.to_record(), sort_keys=True, separators=(",", ":"))

    def check_conservation(self) -> Optional[str]:
        """None when healthy, else a description of the broken identity."""
        sheet = self.balance_sheet()
        if sheet["grand_total"] != sheet["genesis_total"]:
            return f"grand total {sheet['grand_total']} != genesis {sheet['genesis_total']}"
        if self.accounts[ESCROW_POOL].balance != self.held_total():
            return (
                f"escrow pool {self.accounts[ESCROW_POOL].balance} != "
                f"sum of HELD holds {self.held_total()}"
            )
        negative = [a.account_id for a in self.accounts.values() if a.balance < 0]
        if negative:
            return f"negative balances: {negative}"
        return None
