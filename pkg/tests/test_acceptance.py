"""Acceptance suite: one test per acceptance criterion, each printing a
pass/fail line and enforcing its stated time budget and exact tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.
"""

import json
import random
import socket
import threading
import time
from contextlib import contextmanager
from fractions import Fraction

import httpx
import pytest
import uvicorn

from conftest import make_env
from panvas import errors
from panvas.config import ServiceConfig
from panvas.errors import PanvasError
from panvas.eventlog import Store, read_log, replay, verify_records
from panvas.identity import derive_handle
from panvas.ledger import (
    ESCROW_POOL, TREASURY, ActivityCounters, Ledger, LedgerPolicy, Role,
    role_reward,
)
from panvas.markets import Outcome, Side
from panvas.papers import FragmentKind, PaperStore
from panvas.reviews import AssignmentState, BountyState
from panvas.service import create_app
from panvas.sim.harness import ScenarioConfig, ScenarioRun


@contextmanager
def criterion(name: str, budget_seconds: float | None = None):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    elapsed = time.perf_counter() - started
    print(f"[PASS] {name} ({elapsed:.2f}s)")
    if budget_seconds is not None:
        assert elapsed < budget_seconds, f"{name} took {elapsed:.2f}s, budget {budget_seconds}s"


def test_settlement_exactness():
    """Exhaustive roles x (P, C) in [0,100]^2 through settle_epoch; zero tolerance."""
    with criterion("settlement exactness (3 roles x 101^2, exact)", budget_seconds=1.0):
        ledger = Ledger(LedgerPolicy(genesis_treasury=10_000_000))
        roles: dict[str, Role] = {}
        expected_total = 0
        r0 = ledger.policy.base_reward
        index = 0
        for role in (Role.PRODUCER, Role.CONSUMER, Role.FREEMAN):
            for p in range(101):
                for c in range(101):
                    account = ledger.open_account(f"owner{index}")
                    index += 1
                    ledger.counters[account.account_id] = ActivityCounters(
                        account.account_id, 0, p, c)
                    roles[account.account_id] = role
                    if p + c >= ledger.policy.activity_gate:
                        expected_total += role_reward(role, r0, p, c)
        treasury_before = ledger.accounts[TREASURY].balance
        statements = ledger.settle_epoch(0, roles)
        by_account = {s.account_id: s for s in statements}
        for s in statements:
            if s.role_at_settlement is Role.PRODUCER:
                assert s.reward == r0 + s.production
            elif s.role_at_settlement is Role.CONSUMER:
                assert s.reward == r0 + s.consumption
            else:
                assert s.reward == r0 + (s.production + s.consumption) // 2
            assert ledger.accounts[s.account_id].balance == s.reward
        # Accounts below the gate (P=C=0) issued no statement.
        gate_skipped = 3  # one (0,0) cell per role
        assert len(statements) == 3 * 101 * 101 - gate_skipped
        assert sum(s.reward for s in statements) == expected_total
        assert treasury_before - ledger.accounts[TREASURY].balance == expected_total


def test_conservation_at_scale():
    """200 agents, 20 epochs, >= 10^4 events: exact conservation, mints == statements."""
    with criterion("conservation (200 agents, 20 epochs, 10^4+ events)", budget_seconds=10.0):
        config = ScenarioConfig(seed=20_250_810, epochs=20, ticks_per_epoch=5,
                                freemen=67, producers=67, consumers=66)
        run = ScenarioRun(config)
        report = run.run()
        assert report.events >= 10_000
        sheet = run.platform.ledger.balance_sheet()
        assert sheet["grand_total"] == sheet["genesis_total"]
        declared = sum(s.reward for s in run.platform.ledger.statements)
        assert sheet["cumulative_mints"]["settlement"] == declared
        assert report.total_minted == declared
        assert run.platform.ledger.accounts[ESCROW_POOL].balance == run.platform.ledger.held_total()


def rational_largest_remainder(distributable, stakes):
    total = sum(amount for _, _, amount in stakes)
    quotas = {sid: Fraction(distributable) * Fraction(amount, total)
              for sid, _, amount in stakes}
    payouts = {sid: int(quotas[sid]) for sid in quotas}
    leftover = distributable - sum(payouts.values())
    ordered = sorted(stakes, key=lambda e: (-(quotas[e[0]] - payouts[e[0]]),
                                            -e[2], e[1], e[0]))
    for sid, _, _ in ordered[:leftover]:
        payouts[sid] += 1
    return payouts


def test_market_exactness():
    """1,000 random parimutuel markets settle exactly, matching a rational oracle."""
    with criterion("market exactness (1,000 random markets, exact)", budget_seconds=5.0):
        env = make_env(genesis_treasury=10**10)
        rng = random.Random(777)
        punters = [env.user(f"punter{i}", credits=10_000_000) for i in range(50)]
        author = env.user("author", credits=1)
        paper = env.papers.submit_paper("wagered", [author.user_id])
        for trial in range(1000):
            fee_bps = rng.choice([0, 50, 200, 1000])
            market = env.markets.open_market(paper.paper_id, f"V{trial}",
                                             env.clock() + 1, fee_bps)
            stakes = []
            for _ in range(rng.randint(1, 50)):
                punter = rng.choice(punters)
                stakes.append(env.markets.place_stake(
                    market.market_id, env.accounts[punter.user_id].account_id,
                    rng.choice([Side.ACCEPT, Side.REJECT]), rng.randint(1, 10_000)))
            env.clock.advance(1)
            outcome = rng.choice([Side.ACCEPT, Side.REJECT])
            pool = sum(s.amount for s in stakes)
            schedule = env.markets.resolve_market(market.market_id, outcome)
            assert sum(c for _, c in schedule.payouts) + schedule.fee_taken == pool
            if schedule.outcome is not Outcome.VOID:
                winners = [s for s in stakes if s.side is outcome]
                fee = pool * fee_bps // 10000
                assert schedule.fee_taken == fee
                oracle = rational_largest_remainder(
                    pool - fee, [(s.stake_id, s.staker, s.amount) for s in winners])
                got = {s.stake_id: c for (a, c), s in zip(schedule.payouts, winners)}
                assert got == oracle
        assert env.ledger.accounts[ESCROW_POOL].balance == 0
        assert env.ledger.check_conservation() is None


BOUNTY_TRANSITIONS = {
    (BountyState.OPEN, BountyState.MATCHED),
    (BountyState.OPEN, BountyState.EXPIRED),
    (BountyState.MATCHED, BountyState.FULFILLED),
}
ASSIGNMENT_TRANSITIONS = {
    (AssignmentState.ASSIGNED, AssignmentState.DELIVERED),
    (AssignmentState.ASSIGNED, AssignmentState.DEFAULTED),
}


def test_bounty_money_safety():
    """Random bounty lifecycles: escrow == payouts + refunds; legal transitions only."""
    with criterion("bounty money-safety (randomized lifecycles)", budget_seconds=5.0):
        env = make_env(genesis_treasury=10**9)
        rng = random.Random(4242)
        review_text = "sufficiently long review text segment. " * 15
        scores = {"ORIGINALITY": 5, "SOUNDNESS": 6, "IMPACT": 7}
        posters = [env.user(f"poster{i}", credits=100_000) for i in range(5)]
        reviewers = [env.user(f"rev{i}", expertise={"nlp", "ml", "cv"}, licensed=True)
                     for i in range(8)]
        papers = [env.papers.submit_paper(f"p{i}", [p.user_id])
                  for i, p in enumerate(posters)]
        seen_bounty: dict[str, BountyState] = {}
        seen_assignment: dict[str, AssignmentState] = {}

        def observe():
            for b in env.reviews.bounties.values():
                prev = seen_bounty.get(b.bounty_id, b.state)
                assert prev == b.state or (prev, b.state) in BOUNTY_TRANSITIONS, \
                    f"illegal bounty transition {prev} -> {b.state}"
                seen_bounty[b.bounty_id] = b.state
            for a in env.reviews.assignments.values():
                prev = seen_assignment.get(a.assignment_id, a.state)
                assert prev == a.state or (prev, a.state) in ASSIGNMENT_TRANSITIONS, \
                    f"illegal assignment transition {prev} -> {a.state}"
                seen_assignment[a.assignment_id] = a.state

        for _ in range(1500):
            action = rng.random()
            try:
                if action < 0.3:
                    poster = rng.choice(posters)
                    slots = rng.randint(1, 4)
                    env.reviews.post_bounty(
                        papers[posters.index(poster)].paper_id,
                        env.accounts[poster.user_id].account_id,
                        max(rng.randint(10, 120), slots), {"nlp", "ml"},
                        slots, env.clock() + rng.randint(1, 5))
                elif action < 0.55:
                    open_bounties = [b for b in env.reviews.bounties.values()
                                     if b.state is BountyState.OPEN]
                    if open_bounties:
                        bounty = rng.choice(open_bounties)
                        env.reviews.place_bid(bounty.bounty_id,
                                              rng.choice(reviewers).user_id,
                                              rng.randint(0, bounty.per_slot))
                elif action < 0.7:
                    open_bounties = [b for b in env.reviews.bounties.values()
                                     if b.state is BountyState.OPEN]
                    if open_bounties:
                        env.reviews.match_reviewers(rng.choice(open_bounties).bounty_id)
                elif action < 0.9:
                    pending = [a for a in env.reviews.assignments.values()
                               if a.state is AssignmentState.ASSIGNED]
                    if pending:
                        env.reviews.submit_review(
                            rng.choice(pending).assignment_id, scores, review_text)
                else:
                    env.clock.advance(rng.randint(1, 3))
                    env.reviews.sweep(env.clock())
            except PanvasError:
                pass
            observe()
            assert env.ledger.check_conservation() is None

        env.clock.advance(100)
        env.reviews.sweep(env.clock())
        observe()
        for bounty in env.reviews.bounties.values():
            assert bounty.state in (BountyState.FULFILLED, BountyState.EXPIRED)
            assert bounty.paid_total + bounty.refunded_total == bounty.reward, \
                f"{bounty.bounty_id}: escrowed {bounty.reward} != paid+refunded"
        assert env.ledger.accounts[ESCROW_POOL].balance == 0


def test_matching_determinism():
    """1,000 random bid sets: identical rankings on repeat and under loser removal."""
    with criterion("matching determinism (1,000 bid sets, zero divergence)"):
        env = make_env(genesis_treasury=10**9)
        rng = random.Random(31337)
        topics = ["nlp", "ml", "cv", "ir", "hci", "theory"]
        reviewers = []
        for i in range(12):
            reviewer = env.user(f"r{i}", expertise=set(rng.sample(topics, rng.randint(1, 4))),
                                licensed=True)
            for _ in range(rng.randint(0, 4)):
                env.identity.update_reputation(reviewer.user_id, rng.randint(1, 5))
            reviewers.append(reviewer)
        poster = env.user("poster", credits=10_000_000)
        paper = env.papers.submit_paper("matched", [poster.user_id])

        for trial in range(1000):
            slots = rng.randint(1, 3)
            reward = rng.randint(slots, 90)
            deadline = env.clock() + 3
            bounty_a = env.reviews.post_bounty(
                paper.paper_id, env.accounts[poster.user_id].account_id,
                reward, set(rng.sample(topics, 2)), slots, deadline)
            bounty_b = env.reviews.post_bounty(
                paper.paper_id, env.accounts[poster.user_id].account_id,
                reward, bounty_a.required_fields, slots, deadline)
            bidders = rng.sample(reviewers, rng.randint(1, len(reviewers)))
            for bidder in bidders:
                ask = rng.randint(0, bounty_a.per_slot)
                env.reviews.place_bid(bounty_a.bounty_id, bidder.user_id, ask)
                env.reviews.place_bid(bounty_b.bounty_id, bidder.user_id, ask)
            ranked_once = [b.reviewer for _, b in env.reviews.rank_bids(bounty_a.bounty_id)]
            ranked_again = [b.reviewer for _, b in env.reviews.rank_bids(bounty_a.bounty_id)]
            assert ranked_once == ranked_again
            chosen_a = [a.reviewer for a in env.reviews.match_reviewers(bounty_a.bounty_id)]
            chosen_b = [a.reviewer for a in env.reviews.match_reviewers(bounty_b.bounty_id)]
            assert chosen_a == chosen_b, "identical bid sets must match identically"
            if len(ranked_once) > slots:
                # Removing a non-selected bid never changes the selection.
                loser = ranked_once[-1]
                survivors = [b for b in env.reviews.bids[bounty_b.bounty_id]
                             if b.reviewer != loser]
                env.reviews.bids[bounty_b.bounty_id] = survivors
                rerank = [b.reviewer for _, b in env.reviews.rank_bids(bounty_b.bounty_id)]
                assert rerank[:slots] == chosen_a
            # Settle the escrow so poster funds cycle back.
            env.clock.advance(5)
            env.reviews.sweep(env.clock())


def test_pseudonym_properties():
    """10^5 random (user, paper) pairs: deterministic, collision-free, unlinkable."""
    with criterion("pseudonym properties (10^5 pairs)"):
        rng = random.Random(271828)
        key = "acceptance-server-key"
        seen: dict[str, tuple[str, str]] = {}
        for _ in range(100_000):
            pair = (f"u{rng.randrange(30_000)}", f"p{rng.randrange(30_000)}")
            handle = derive_handle(key, *pair)
            assert derive_handle(key, *pair) == handle          # deterministic
            assert seen.setdefault(handle, pair) == pair        # zero collisions
        # Per-user cross-paper handles are pairwise distinct.
        for user_id in ("u1", "u999"):
            handles = {derive_handle(key, user_id, f"p{i}") for i in range(500)}
            assert len(handles) == 500


def test_replay_equivalence(tmp_path):
    """Snapshot of a random live session equals the state rebuilt from its log."""
    with criterion("replay equivalence (bit-exact)"):
        log_path = tmp_path / "events.ndjson"
        config = ScenarioConfig(seed=99, epochs=4, ticks_per_epoch=4,
                                freemen=8, producers=8, consumers=8,
                                log_path=str(log_path))
        run = ScenarioRun(config)
        run.run()
        live = run.platform.state_snapshot()
        live_digest = run.platform.state_digest()
        run.store.close()

        records, dropped = read_log(log_path)
        assert not dropped
        rebuilt = replay(records, ServiceConfig())
        assert rebuilt.state_digest() == live_digest
        assert rebuilt.state_snapshot() == live
        assert json.dumps(rebuilt.state_snapshot(), sort_keys=True) == \
            json.dumps(live, sort_keys=True)
        result = verify_records(records)
        assert result["passed"], result


def test_fragment_dag():
    """Random edge insertion never yields a cycle; diamond matches the DFS oracle."""
    with criterion("fragment DAG (acyclicity fuzz + diamond oracle)"):
        store = PaperStore()
        paper = store.submit_paper("dag", ["u1"])
        rng = random.Random(606)
        fragments = [store.add_fragment(paper.paper_id, FragmentKind.PARAGRAPH, f"t{i}").fragment_id
                     for i in range(40)]
        accepted = []
        for _ in range(1200):
            parent = rng.choice(fragments + [None])
            child = rng.choice(fragments)
            try:
                store.link_fragment(parent, child, rng.randrange(4))
                accepted.append((parent or "ROOT", child))
            except PanvasError as exc:
                assert exc.code in (errors.CYCLE_DETECTED, errors.DUPLICATE_LINK)
        # Kahn oracle: accepted edges always topologically sortable.
        nodes = {"ROOT", *fragments}
        indegree = {n: 0 for n in nodes}
        adjacency = {n: [] for n in nodes}
        for parent, child in accepted:
            adjacency[parent].append(child)
            indegree[child] += 1
        queue = [n for n in nodes if indegree[n] == 0]
        visited = 0
        while queue:
            node = queue.pop()
            visited += 1
            for child in adjacency[node]:
                indegree[child] -= 1
                if indegree[child] == 0:
                    queue.append(child)
        assert visited == len(nodes)

        # Diamond: root->{A,B}, A->C, B->C assembles as [A, C, B], C once.
        diamond = PaperStore()
        dpaper = diamond.submit_paper("diamond", ["u1"])
        a, b, c = (diamond.add_fragment(dpaper.paper_id, FragmentKind.PARAGRAPH, t).fragment_id
                   for t in ("A", "B", "C"))
        diamond.link_fragment(None, a, 0)
        diamond.link_fragment(None, b, 1)
        diamond.link_fragment(a, c, 0)
        diamond.link_fragment(b, c, 0)
        assembled = [f.fragment_id for f, _ in diamond.assemble_document(dpaper.paper_id)]
        assert assembled == [a, c, b]


# -- API round-trip over real HTTP -------------------------------------------------


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@contextmanager
def live_server(tmp_path):
    store = Store(ServiceConfig(), tmp_path / "events.ndjson")
    port = _free_port()
    server = uvicorn.Server(uvicorn.Config(
        create_app(store), host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    try:
        yield f"http://127.0.0.1:{port}", store
    finally:
        server.should_exit = True
        thread.join(timeout=10)
        store.close()


def test_api_round_trip(tmp_path):
    """Scripted full-stack flow over HTTP lands on hand-computed final balances.

    Fixture derivation (defaults: R0=10, fee 2%, achievements first-fragment +3
    and first-review +5, weights FRAGMENT+5/REVIEW+10/META+2, C+1 events):
      ada  (PRODUCER): 500 grant +3 ach -100 bounty +8 ask-diff +67 refunds
                       +15 settle (P=5)                         -> 493
      bob  (PRODUCER): 200 grant +25 ask +5 ach +20 settle (P=10) -> 250
      eve  (CONSUMER): 300 grant -50 stake +98 market win
                       +13 settle (C=3)                          -> 361
      mia  (FREEMAN):  100 grant -50 stake +11 settle (P=2,C=1)  -> 61
      treasury: 1,000,000 -1,100 grants -8 achievements +2 fee -59 mints
                                                                 -> 998,835
    """
    with criterion("API round-trip (hand-computed balances over HTTP)"):
        with live_server(tmp_path) as (base, store):
            http = httpx.Client(base_url=base, timeout=10.0)

            def post(path, body, expect=200):
                response = http.post(f"/api/v1{path}", json=body)
                assert response.status_code == expect, f"{path}: {response.text}"
                return response.json()

            ada = post("/users", {"display_name": "ada", "expertise": ["nlp"]})
            bob = post("/users", {"display_name": "bob", "expertise": ["nlp", "parsing"]})
            eve = post("/users", {"display_name": "eve", "expertise": []})
            mia = post("/users", {"display_name": "mia", "expertise": []})
            ids = {"ada": ada["user_id"], "bob": bob["user_id"],
                   "eve": eve["user_id"], "mia": mia["user_id"]}
            post(f"/users/{ids['ada']}/role", {"role": "PRODUCER"})
            post(f"/users/{ids['bob']}/role", {"role": "PRODUCER"})
            post(f"/users/{ids['eve']}/role", {"role": "CONSUMER"})
            post(f"/users/{ids['mia']}/role", {"role": "FREEMAN"})
            for name, amount in (("ada", 500), ("bob", 200), ("eve", 300), ("mia", 100)):
                post("/admin/grant", {"to": ids[name], "amount": amount})
            post(f"/users/{ids['bob']}/license",
                 {"fields": ["nlp", "parsing"], "exam_score": 85})

            paper = post("/papers", {"title": "landmark result", "authors": [ids["ada"]]})
            fragment = post("/fragments", {
                "paper": paper["paper_id"], "kind": "PARAGRAPH",
                "content": "we prove the main theorem.", "author": ids["ada"]})
            post("/links", {"child": fragment["fragment_id"], "order_index": 0})
            anchor = post("/anchors", {"fragment": fragment["fragment_id"], "revision": 1})

            bounty = post("/bounties", {
                "paper": paper["paper_id"], "poster": ids["ada"], "reward": 100,
                "required_fields": ["nlp"], "slots": 3, "deadline": 10})
            assert bounty["per_slot"] == 33
            post(f"/bounties/{bounty['bounty_id']}/bids",
                 {"reviewer": ids["bob"], "ask": 25})
            match = post(f"/bounties/{bounty['bounty_id']}/match", {})
            assignment_id = match["assignments"][0]["assignment_id"]
            review = post("/reviews", {
                "assignment": assignment_id,
                "scores": {"ORIGINALITY": 8, "SOUNDNESS": 7, "IMPACT": 9},
                "text": "the analysis is rigorous and well presented. " * 12})
            assert review["paid"] == 25
            post("/meta-reviews", {"review": review["review_id"],
                                   "rater": ids["mia"], "quality": 5})

            post("/ratings", {"paper": paper["paper_id"], "rater": ids["eve"],
                              "scores": {"ORIGINALITY": 7, "SOUNDNESS": 8, "IMPACT": 9}})
            thread = post("/threads", {"anchor": anchor["anchor_id"]})
            post(f"/threads/{thread['thread_id']}/comments",
                 {"author": ids["eve"], "text": "strong empirical section."})

            market = post("/markets", {"paper": paper["paper_id"],
                                       "venue": "VENUE-X", "close_time": 5})
            post(f"/markets/{market['market_id']}/stakes",
                 {"staker": ids["eve"], "side": "ACCEPT", "amount": 50})
            post(f"/markets/{market['market_id']}/stakes",
                 {"staker": ids["mia"], "side": "REJECT", "amount": 50})
            post("/admin/tick", {"by": 5})
            resolution = post(f"/admin/markets/{market['market_id']}/resolve",
                              {"outcome": "ACCEPT"})
            assert resolution["fee_taken"] == 2
            assert resolution["payouts"] == [{"account": eve["account_id"], "credits": 98}]

            settlement = post("/admin/settle-epoch", {})
            assert settlement["minted"] == 59

            expected = {"ada": 493, "bob": 250, "eve": 361, "mia": 61}
            for name, balance in expected.items():
                fetched = http.get(f"/api/v1/users/{ids[name]}").json()
                assert fetched["balance"] == balance, (name, fetched["balance"])
            sheet = http.get("/api/v1/ledger/balance-sheet").json()
            assert sheet["treasury"] == 998_835
            assert sheet["escrow"] == 0
            assert sheet["grand_total"] == 1_000_000
            assert sheet["cumulative_mints"] == {"settlement": 59, "achievement": 8}

            reputation = http.get(f"/api/v1/users/{ids['bob']}").json()["reputation"]
            assert reputation == pytest.approx(0.6)
            http.close()

        # The session's log verifies offline, sim-harness style.
        records, _ = read_log(tmp_path / "events.ndjson")
        result = verify_records(records)
        assert result["passed"], result
