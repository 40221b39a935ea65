"""Deterministic agent-economy simulator.

Drives the full platform in-process (no HTTP) with propensity-sampling
agents, settling every epoch and re-checking the economy invariants as it
goes. A single seeded PRNG stream and fixed iteration order make the whole
run — including the report JSON — byte-reproducible.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .. import errors
from ..errors import PanvasError
from ..config import ServiceConfig
from ..eventlog import Store, read_log, verify_records
from ..ledger import LedgerPolicy

TOPIC_POOL = [
    "parsing", "optimization", "crypta", "networks", "semantics",
    "learning", "systems", "hci", "theory", "robotics",
]


@dataclass
class RolePropensities:
    """Per-tick action probabilities for one role."""
    submit_paper: float = 0.0
    add_fragment: float = 0.0
    post_bounty: float = 0.0
    bid: float = 0.0
    rate: float = 0.0
    comment: float = 0.0
    stake: float = 0.0
    react: float = 0.0
    meta_review: float = 0.0

    def validate(self) -> None:
        for name, value in asdict(self).items():
            if not 0.0 <= value <= 1.0:
                raise PanvasError(errors.VALIDATION, f"propensity {name}={value} outside [0, 1]")


@dataclass
class ScenarioConfig:
    seed: int = 42
    epochs: int = 5
    ticks_per_epoch: int = 5
    freemen: int = 10
    producers: int = 10
    consumers: int = 10
    initial_grant: int = 200
    licensed_share: float = 1.0     # share of producers/freemen licensed at setup
    bounty_reward_range: tuple[int, int] = (30, 90)
    bounty_slots_range: tuple[int, int] = (1, 3)
    bounty_deadline_ticks: int = 3
    stake_range: tuple[int, int] = (5, 30)
    market_close_ticks: int = 4
    venues: tuple[str, ...] = ("VENUE-X", "VENUE-Y")
    producer: RolePropensities = field(default_factory=lambda: RolePropensities(
        submit_paper=0.08, add_fragment=0.3, post_bounty=0.15, bid=0.5, meta_review=0.1))
    consumer: RolePropensities = field(default_factory=lambda: RolePropensities(
        rate=0.4, comment=0.3, stake=0.25, react=0.3, meta_review=0.15))
    freeman: RolePropensities = field(default_factory=lambda: RolePropensities(
        submit_paper=0.05, add_fragment=0.15, post_bounty=0.08, bid=0.3,
        rate=0.2, comment=0.2, stake=0.15, react=0.2, meta_review=0.1))
    ledger: Optional[LedgerPolicy] = None
    log_path: Optional[str] = None

    def validate(self) -> None:
        if self.epochs < 0 or self.ticks_per_epoch < 1:
            raise PanvasError(errors.VALIDATION, "epochs must be >= 0, ticks_per_epoch >= 1")
        if min(self.freemen, self.producers, self.consumers) < 0:
            raise PanvasError(errors.VALIDATION, "agent counts must be >= 0")
        if not 0.0 <= self.licensed_share <= 1.0:
            raise PanvasError(errors.VALIDATION, "licensed_share outside [0, 1]")
        for p in (self.producer, self.consumer, self.freeman):
            p.validate()


def _propensities_from(table: dict, defaults: RolePropensities) -> RolePropensities:
    kwargs = asdict(defaults)
    for key, value in table.items():
        if key not in kwargs:
            raise PanvasError(errors.VALIDATION, f"unknown propensity {key}")
        kwargs[key] = float(value)
    return RolePropensities(**kwargs)


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise PanvasError(errors.VALIDATION, f"unreadable scenario {path}: {exc}")
    cfg = ScenarioConfig()
    simple = {
        "seed": int, "epochs": int, "ticks_per_epoch": int, "freemen": int,
        "producers": int, "consumers": int, "initial_grant": int,
        "licensed_share": float, "bounty_deadline_ticks": int,
        "market_close_ticks": int, "log_path": str,
    }
    for key, cast in simple.items():
        if key in data:
            setattr(cfg, key, cast(data[key]))
    for key in ("bounty_reward_range", "bounty_slots_range", "stake_range"):
        if key in data:
            lo, hi = data[key]
            setattr(cfg, key, (int(lo), int(hi)))
    if "venues" in data:
        cfg.venues = tuple(str(v) for v in data["venues"])
    for role in ("producer", "consumer", "freeman"):
        if role in data:
            setattr(cfg, role, _propensities_from(data[role], getattr(cfg, role)))
    if "ledger" in data:
        from ..config import _ledger_policy
        cfg.ledger = _ledger_policy(data["ledger"])
    cfg.validate()
    return cfg


@dataclass
class SimAgent:
    user_id: str
    role: str
    propensities: RolePropensities


def _gini(balances: list[int]) -> float:
    if not balances:
        return 0.0
    total = sum(balances)
    if total == 0:
        return 0.0
    ordered = sorted(balances)
    n = len(ordered)
    weighted = sum((i + 1) * x for i, x in enumerate(ordered))
    return (2 * weighted) / (n * total) - (n + 1) / n


class ScenarioRun:
    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.cfg = config
        self.rng = random.Random(config.seed)
        service_config = ServiceConfig()
        if config.ledger is not None:
            service_config = ServiceConfig(ledger=config.ledger)
        if config.log_path:
            # A scenario run always starts from genesis; never replay leftovers.
            Path(config.log_path).unlink(missing_ok=True)
            Path(config.log_path).parent.mkdir(parents=True, exist_ok=True)
        self.store = Store(service_config, config.log_path)
        self.platform = self.store.platform
        self.agents: list[SimAgent] = []
        self.papers: list[str] = []
        self.open_threads: list[str] = []
        self.per_epoch_mints: list[int] = []
        self.events_failed = 0
        self._market_index: dict[tuple[str, str], str] = {}   # (paper, venue) -> open market

    # Commands go through the store so the run leaves a verifiable log.
    def _do(self, kind: str, payload: dict) -> Optional[dict]:
        try:
            return self.store.execute(kind, payload)
        except PanvasError:
            self.events_failed += 1
            return None

    def _setup(self) -> None:
        rng = self.rng
        roster = (
            [("PRODUCER", self.cfg.producer)] * self.cfg.producers
            + [("CONSUMER", self.cfg.consumer)] * self.cfg.consumers
            + [("FREEMAN", self.cfg.freeman)] * self.cfg.freemen
        )
        for i, (role, propensities) in enumerate(roster):
            expertise = rng.sample(TOPIC_POOL, k=rng.randint(1, 3))
            result = self.store.execute("register_user", {
                "display_name": f"agent-{i}", "expertise": expertise,
            })
            user_id = result["user_id"]
            self.store.execute("assign_role", {"user": user_id, "role": role})
            if self.cfg.initial_grant > 0:
                self.store.execute("grant", {"to": user_id, "amount": self.cfg.initial_grant})
            if role in ("PRODUCER", "FREEMAN") and rng.random() < self.cfg.licensed_share:
                self.store.execute("grant_license", {
                    "user": user_id, "fields": expertise,
                    "exam_score": rng.randint(70, 100),
                })
            self.agents.append(SimAgent(user_id, role, propensities))

    # -- agent actions ---------------------------------------------------------

    def _act_submit_paper(self, agent: SimAgent) -> None:
        result = self._do("submit_paper", {
            "title": f"paper by {agent.user_id} #{len(self.papers)}",
            "authors": [agent.user_id],
        })
        if result:
            self.papers.append(result["paper_id"])
            self._act_add_fragment(agent, paper_id=result["paper_id"])

    def _own_papers(self, agent: SimAgent) -> list[str]:
        return [p for p in self.papers
                if agent.user_id in self.platform.papers.papers[p].author_ids]

    def _other_papers(self, agent: SimAgent) -> list[str]:
        return [p for p in self.papers
                if agent.user_id not in self.platform.papers.papers[p].author_ids]

    def _act_add_fragment(self, agent: SimAgent, paper_id: Optional[str] = None) -> None:
        own = [paper_id] if paper_id else self._own_papers(agent)
        if not own:
            return
        target = self.rng.choice(own)
        result = self._do("add_fragment", {
            "paper": target, "kind": "PARAGRAPH", "author": agent.user_id,
            "content": f"findings at t={self.platform.now} by {agent.user_id}",
        })
        if result:
            order_index = int(result["fragment_id"].lstrip("f"))
            self._do("link_fragment", {"parent": None, "child": result["fragment_id"],
                                       "order_index": order_index})
            anchor = self._do("create_anchor", {"fragment": result["fragment_id"], "revision": 1})
            if anchor:
                thread = self._do("open_thread", {"anchor": anchor["anchor_id"]})
                if thread:
                    self.open_threads.append(thread["thread_id"])

    def _act_post_bounty(self, agent: SimAgent) -> None:
        own = self._own_papers(agent)
        if not own:
            return
        reward = self.rng.randint(*self.cfg.bounty_reward_range)
        slots = self.rng.randint(*self.cfg.bounty_slots_range)
        self._do("post_bounty", {
            "paper": self.rng.choice(own), "poster": agent.user_id,
            "reward": max(reward, slots), "slots": slots,
            "required_fields": self.rng.sample(TOPIC_POOL, k=2),
            "deadline": self.platform.now + self.cfg.bounty_deadline_ticks,
        })

    def _act_bid(self, agent: SimAgent) -> None:
        open_bounties = [
            b for b in self.platform.reviews.board()
            if b.state.value == "OPEN"
            and agent.user_id not in self.platform.papers.papers[b.paper_id].author_ids
            and not any(x.reviewer == agent.user_id for x in self.platform.reviews.bids[b.bounty_id])
        ]
        if not open_bounties:
            return
        bounty = self.rng.choice(open_bounties)
        self._do("place_bid", {
            "bounty": bounty.bounty_id, "reviewer": agent.user_id,
            "ask": self.rng.randint(0, bounty.per_slot),
        })

    def _deliver_due_reviews(self) -> None:
        # Matched reviewers deliver promptly; defaults happen when the
        # deadline sweep beats this pass.
        pending = [a for a in self.platform.reviews.assignments.values()
                   if a.state.value == "ASSIGNED"]
        for assignment in pending:
            scores = {dim: self.rng.randint(1, 10)
                      for dim in ("ORIGINALITY", "SOUNDNESS", "IMPACT")}
            filler = f"assessment by {assignment.reviewer} of {assignment.bounty_id} "
            text = (filler * (self.platform.reviews.min_review_chars // len(filler) + 1))
            self._do("submit_review", {
                "assignment": assignment.assignment_id, "scores": scores,
                "text": text[: self.platform.reviews.min_review_chars + 20],
            })

    def _act_rate(self, agent: SimAgent) -> None:
        others = self._other_papers(agent)
        if not others:
            return
        self._do("cast_rating", {
            "paper": self.rng.choice(others), "rater": agent.user_id,
            "scores": {dim: self.rng.randint(1, 10)
                       for dim in ("ORIGINALITY", "SOUNDNESS", "IMPACT")},
        })

    def _act_comment(self, agent: SimAgent) -> None:
        if not self.open_threads:
            return
        self._do("post_comment", {
            "thread": self.rng.choice(self.open_threads), "author": agent.user_id,
            "text": f"comment from {agent.user_id} at t={self.platform.now}",
        })

    def _act_react(self, agent: SimAgent) -> None:
        fragments = sorted(self.platform.papers.fragments)
        if not fragments:
            return
        emoji = self.rng.choice(sorted(self.platform.engagement.emoji_set))
        self._do("react", {
            "target": self.rng.choice(fragments), "reactor": agent.user_id, "emoji": emoji,
        })

    def _act_stake(self, agent: SimAgent) -> None:
        others = self._other_papers(agent)
        if not others:
            return
        paper = self.rng.choice(others)
        venue = self.rng.choice(self.cfg.venues)
        market_id = self._market_index.get((paper, venue))
        if market_id is not None:
            if self.platform.markets.markets[market_id].state.value != "OPEN":
                del self._market_index[(paper, venue)]
                market_id = None
        if market_id is None:
            result = self._do("open_market", {
                "paper": paper, "venue": venue,
                "close_time": self.platform.now + self.cfg.market_close_ticks,
            })
            if not result:
                return
            market_id = result["market_id"]
            self._market_index[(paper, venue)] = market_id
        self._do("place_stake", {
            "market": market_id, "staker": agent.user_id,
            "side": self.rng.choice(["ACCEPT", "REJECT"]),
            "amount": self.rng.randint(*self.cfg.stake_range),
        })

    def _act_meta_review(self, agent: SimAgent) -> None:
        rated = self.platform.reviews.meta_pairs
        candidates = [
            r for r in self.platform.reviews.reviews.values()
            if r.reviewer != agent.user_id
            and (r.review_id, agent.user_id) not in rated
        ]
        if not candidates:
            return
        self._do("submit_meta_review", {
            "review": self.rng.choice(candidates).review_id,
            "rater": agent.user_id, "quality": self.rng.randint(1, 5),
        })

    def _resolve_closed_markets(self) -> None:
        for market_id in sorted(self.platform.markets.markets):
            market = self.platform.markets.markets[market_id]
            if market.state.value == "CLOSED":
                outcome = self.rng.choice(["ACCEPT", "REJECT"])
                self._do("resolve_market", {"market": market_id, "outcome": outcome})

    def _tick(self) -> None:
        self.store.execute("tick", {"by": 1})
        self._resolve_closed_markets()
        self._deliver_due_reviews()
        for agent in self.agents:
            p = agent.propensities
            rng = self.rng
            if rng.random() < p.submit_paper:
                self._act_submit_paper(agent)
            if rng.random() < p.add_fragment:
                self._act_add_fragment(agent)
            if rng.random() < p.post_bounty:
                self._act_post_bounty(agent)
            if rng.random() < p.bid:
                self._act_bid(agent)
            if rng.random() < p.rate:
                self._act_rate(agent)
            if rng.random() < p.comment:
                self._act_comment(agent)
            if rng.random() < p.react:
                self._act_react(agent)
            if rng.random() < p.stake:
                self._act_stake(agent)
            if rng.random() < p.meta_review:
                self._act_meta_review(agent)

    def _assert_invariants(self, epoch: int) -> None:
        for name, problem in self.platform.check_invariants().items():
            if problem is not None:
                raise PanvasError(
                    errors.INVARIANT_VIOLATION,
                    f"{name} violated at epoch {epoch}, sequence {self.store.sequence}: {problem}",
                )

    def run(self) -> "SimReport":
        self._setup()
        self._assert_invariants(epoch=-1)
        for epoch in range(self.cfg.epochs):
            for _ in range(self.cfg.ticks_per_epoch):
                self._tick()
            result = self.store.execute("settle_epoch", {})
            self.per_epoch_mints.append(result["minted"])
            self._assert_invariants(epoch)
        return self._report()

    def _report(self) -> "SimReport":
        sheet = self.platform.ledger.balance_sheet()
        balances = list(sheet["accounts"].values())
        bounties = self.platform.reviews.bounties.values()
        terminal = [b for b in bounties if b.state.value in ("FULFILLED", "EXPIRED")]
        fulfilled = [b for b in bounties if b.state.value == "FULFILLED"]
        schedules = self.platform.markets.schedules
        resolved = [s for s in schedules.values() if s.outcome.value != "VOID"]
        voided = [s for s in schedules.values() if s.outcome.value == "VOID"]
        checks = {
            name: ("pass" if problem is None else problem)
            for name, problem in self.platform.check_invariants().items()
        }
        return SimReport(
            seed=self.cfg.seed,
            epochs=self.cfg.epochs,
            agents=len(self.agents),
            events=self.store.sequence,
            events_failed=self.events_failed,
            per_epoch_mints=list(self.per_epoch_mints),
            total_minted=sum(self.per_epoch_mints),
            balance_min=min(balances) if balances else 0,
            balance_median=float(statistics.median(balances)) if balances else 0.0,
            balance_max=max(balances) if balances else 0,
            balance_gini=round(_gini(balances), 6),
            bounties_posted=len(bounties),
            bounty_fulfillment_rate=(
                round(len(fulfilled) / len(terminal), 6) if terminal else 0.0),
            markets_resolved=len(resolved),
            markets_voided=len(voided),
            market_pool_total=sum(
                sum(c for _, c in s.payouts) + s.fee_taken for s in schedules.values()),
            market_fees_total=sum(s.fee_taken for s in schedules.values()),
            treasury=sheet["treasury"],
            escrow=sheet["escrow"],
            grand_total=sheet["grand_total"],
            genesis_total=sheet["genesis_total"],
            invariants=checks,
        )


@dataclass
class SimReport:
    seed: int
    epochs: int
    agents: int
    events: int
    events_failed: int
    per_epoch_mints: list[int]
    total_minted: int
    balance_min: int
    balance_median: float
    balance_max: int
    balance_gini: float
    bounties_posted: int
    bounty_fulfillment_rate: float
    markets_resolved: int
    markets_voided: int
    market_pool_total: int
    market_fees_total: int
    treasury: int
    escrow: int
    grand_total: int
    genesis_total: int
    invariants: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @property
    def all_invariants_pass(self) -> bool:
        return all(v == "pass" for v in self.invariants.values())


def run_scenario(config: ScenarioConfig) -> SimReport:
    return ScenarioRun(config).run()


def verify_log(path: str | Path, check_every_event: bool = True) -> dict:
    records, tail_dropped = read_log(path)
    result = verify_records(records, check_every_event=check_every_event)
    result["tail_dropped"] = tail_dropped
    return result
