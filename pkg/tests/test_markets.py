"""Parimutuel markets: escrowed stakes, exact largest-remainder settlement."""

import random
from fractions import Fraction

import pytest

from panvas import errors
from panvas.errors import PanvasError
from panvas.ledger import ESCROW_POOL, TREASURY
from panvas.markets import MarketState, Outcome, Side, apportion_largest_remainder


def largest_remainder_oracle(distributable, stakes):
    """Rational-arithmetic apportionment oracle, independent of the
    integer-only implementation."""
    total = sum(amount for _, _, amount in stakes)
    quotas = {
        stake_id: Fraction(distributable) * Fraction(amount, total)
        for stake_id, _, amount in stakes
    }
    payouts = {stake_id: int(quotas[stake_id]) for stake_id in quotas}   # floor
    leftover = distributable - sum(payouts.values())
    remainders = sorted(
        stakes,
        key=lambda entry: (
            -(quotas[entry[0]] - payouts[entry[0]]),   # largest fractional part
            -entry[2],                                  # then larger stake
            entry[1],                                   # then account id
            entry[0],                                   # then stake id
        ),
    )
    for stake_id, _, _ in remainders[:leftover]:
        payouts[stake_id] += 1
    return payouts


def make_market(env, close_time=5, fee_bps=None):
    author = env.user("author", credits=10)
    paper = env.papers.submit_paper("wagered paper", [author.user_id])
    market = env.markets.open_market(paper.paper_id, "VENUE-X", close_time, fee_bps)
    return author, paper, market


def stake(env, market, name, side, amount, credits=1000):
    user = env.user(name, credits=credits)
    return env.markets.place_stake(
        market.market_id, env.accounts[user.user_id].account_id, side, amount), user


def test_open_market_duplicate_guard(env):
    _, paper, market = make_market(env)
    with pytest.raises(PanvasError) as err:
        env.markets.open_market(paper.paper_id, "VENUE-X", 9)
    assert err.value.code == errors.DUPLICATE_MARKET
    env.markets.open_market(paper.paper_id, "VENUE-Y", 9)   # different venue fine


def test_market_reopens_after_resolution(env):
    _, paper, market = make_market(env)
    stake(env, market, "s1", Side.ACCEPT, 10)
    stake(env, market, "s2", Side.REJECT, 10)
    env.clock.advance(5)
    env.markets.resolve_market(market.market_id, Side.ACCEPT)
    again = env.markets.open_market(paper.paper_id, "VENUE-X", env.clock() + 5)
    assert again.state is MarketState.OPEN


def test_stake_escrows_amount(env):
    _, _, market = make_market(env)
    placed, user = stake(env, market, "better", Side.ACCEPT, 30, credits=100)
    assert env.balance(user.user_id) == 70
    assert env.ledger.accounts[ESCROW_POOL].balance == 30


def test_author_cannot_bet(env):
    author, _, market = make_market(env)
    with pytest.raises(PanvasError) as err:
        env.markets.place_stake(market.market_id,
                                env.accounts[author.user_id].account_id, Side.ACCEPT, 5)
    assert err.value.code == errors.AUTHOR_CANNOT_BET


def test_stake_after_close_rejected(env):
    _, _, market = make_market(env, close_time=5)
    env.clock.advance(5)
    punter = env.user("late", credits=50)
    with pytest.raises(PanvasError) as err:
        env.markets.place_stake(market.market_id,
                                env.accounts[punter.user_id].account_id, Side.ACCEPT, 5)
    assert err.value.code == errors.MARKET_CLOSED


def test_resolve_requires_close(env):
    _, _, market = make_market(env, close_time=5)
    stake(env, market, "s1", Side.ACCEPT, 10)
    stake(env, market, "s2", Side.REJECT, 10)
    with pytest.raises(PanvasError) as err:
        env.markets.resolve_market(market.market_id, Side.ACCEPT)
    assert err.value.code == errors.NOT_CLOSED


def test_spec_example_even_split(env):
    # pool 100 (ACCEPT 30+30, REJECT 40), 2% fee -> fee 2, D 98, 49 each.
    _, _, market = make_market(env, fee_bps=200)
    _, w1 = stake(env, market, "w1", Side.ACCEPT, 30)
    _, w2 = stake(env, market, "w2", Side.ACCEPT, 30)
    _, loser = stake(env, market, "l1", Side.REJECT, 40)
    env.clock.advance(5)
    treasury_before = env.ledger.accounts[TREASURY].balance
    schedule = env.markets.resolve_market(market.market_id, Side.ACCEPT)
    assert schedule.fee_taken == 2
    assert sorted(c for _, c in schedule.payouts) == [49, 49]
    assert env.balance(w1.user_id) == 1000 - 30 + 49
    assert env.balance(w2.user_id) == 1000 - 30 + 49
    assert env.balance(loser.user_id) == 960
    assert env.ledger.accounts[TREASURY].balance == treasury_before + 2
    assert env.ledger.accounts[ESCROW_POOL].balance == 0


def test_spec_example_largest_remainder_97_three_ways():
    shares = apportion_largest_remainder(
        97, [("stk1", "a1", 1), ("stk2", "a2", 1), ("stk3", "a3", 1)])
    assert [payout for _, _, payout in shares] == [33, 32, 32]
    oracle = largest_remainder_oracle(97, [("stk1", "a1", 1), ("stk2", "a2", 1), ("stk3", "a3", 1)])
    assert {s: p for s, _, p in shares} == oracle


def test_one_sided_market_voids_with_full_refunds(env):
    _, _, market = make_market(env)
    _, only = stake(env, market, "only", Side.ACCEPT, 35)
    env.clock.advance(5)
    schedule = env.markets.resolve_market(market.market_id, Side.ACCEPT)
    assert schedule.outcome is Outcome.VOID
    assert schedule.fee_taken == 0
    assert env.balance(only.user_id) == 1000
    assert market.state is MarketState.VOIDED


def test_resolution_idempotence_guard(env):
    _, _, market = make_market(env)
    stake(env, market, "s1", Side.ACCEPT, 10)
    stake(env, market, "s2", Side.REJECT, 10)
    env.clock.advance(5)
    env.markets.resolve_market(market.market_id, Side.ACCEPT)
    with pytest.raises(PanvasError) as err:
        env.markets.resolve_market(market.market_id, Side.REJECT)
    assert err.value.code == errors.ALREADY_RESOLVED


def test_staker_may_hold_both_sides(env):
    _, _, market = make_market(env)
    punter = env.user("hedger", credits=100)
    account = env.accounts[punter.user_id].account_id
    env.markets.place_stake(market.market_id, account, Side.ACCEPT, 20)
    env.markets.place_stake(market.market_id, account, Side.REJECT, 30)
    assert env.balance(punter.user_id) == 50


def test_void_symmetry_restores_pre_stake_balances(env):
    _, _, market = make_market(env)
    stakes = []
    for i in range(6):
        stakes.append(stake(env, market, f"s{i}", Side.REJECT, 10 + i))
    env.clock.advance(5)
    env.markets.resolve_market(market.market_id, Side.ACCEPT)
    for _, user in stakes:
        assert env.balance(user.user_id) == 1000


def test_randomized_markets_match_oracle_exactly():
    from conftest import make_env
    env = make_env(genesis_treasury=10**9)
    rng = random.Random(2024)
    users = [env.user(f"punter{i}", credits=10_000_000) for i in range(50)]
    for trial in range(120):
        author = env.user(f"author{trial}", credits=1)
        paper = env.papers.submit_paper(f"paper {trial}", [author.user_id])
        fee_bps = rng.choice([0, 100, 200, 500])
        market = env.markets.open_market(paper.paper_id, "V", env.clock() + 1, fee_bps)
        n_stakes = rng.randint(1, 50)
        stakes = []
        for _ in range(n_stakes):
            user = rng.choice(users)
            side = rng.choice([Side.ACCEPT, Side.REJECT])
            amount = rng.randint(1, 10_000)
            stakes.append(env.markets.place_stake(
                market.market_id, env.accounts[user.user_id].account_id, side, amount))
        env.clock.advance(1)
        outcome = rng.choice([Side.ACCEPT, Side.REJECT])
        pool = sum(s.amount for s in stakes)
        schedule = env.markets.resolve_market(market.market_id, outcome)

        assert sum(c for _, c in schedule.payouts) + schedule.fee_taken == pool
        assert env.ledger.check_conservation() is None

        if schedule.outcome is not Outcome.VOID:
            winners = [s for s in stakes if s.side is outcome]
            fee = pool * fee_bps // 10000
            oracle = largest_remainder_oracle(
                pool - fee, [(s.stake_id, s.staker, s.amount) for s in winners])
            got = {}
            for (account, credits), s in zip(schedule.payouts, winners):
                got[s.stake_id] = credits
                assert account == s.staker
            assert got == oracle

            # Monotonicity: strictly larger stake never gets a smaller payout.
            by_amount = sorted(winners, key=lambda s: s.amount)
            for smaller, larger in zip(by_amount, by_amount[1:]):
                if larger.amount > smaller.amount:
                    assert got[larger.stake_id] >= got[smaller.stake_id]
    assert env.ledger.accounts[ESCROW_POOL].balance == 0
