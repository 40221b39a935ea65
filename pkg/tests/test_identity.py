"""Identity: registration, roles, license state machine, pseudonyms, reputation."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from panvas import errors
from panvas.errors import PanvasError
from panvas.identity import Identity, LicenseStatus, derive_handle
from panvas.ledger import Role


@pytest.fixture
def identity():
    return Identity(server_key="test-key")


def test_register_defaults(identity):
    user = identity.register_user("ada", {"parsing"})
    assert user.role is Role.FREEMAN
    assert user.reputation == 0.5
    assert user.expertise == frozenset({"parsing"})


def test_register_empty_name_rejected(identity):
    with pytest.raises(PanvasError):
        identity.register_user("", set())
    with pytest.raises(PanvasError):
        identity.register_user("   ", set())


def test_user_ids_distinct(identity):
    u1 = identity.register_user("ada", set())
    u2 = identity.register_user("ada", set())
    assert u1.user_id != u2.user_id


def test_assign_role(identity):
    user = identity.register_user("ada", set())
    identity.assign_role(user.user_id, Role.PRODUCER)
    assert user.role is Role.PRODUCER
    identity.assign_role(user.user_id, Role.PRODUCER)   # no-op success
    assert user.role is Role.PRODUCER
    with pytest.raises(PanvasError) as err:
        identity.assign_role("u999", Role.FREEMAN)
    assert err.value.code == errors.UNKNOWN_USER


# -- licenses ---------------------------------------------------------------


def test_license_threshold(identity):
    user = identity.register_user("bob", {"nlp"})
    lic = identity.grant_license(user.user_id, {"nlp"}, 85)
    assert lic.status is LicenseStatus.ACTIVE
    assert identity.is_licensed(user.user_id)


def test_license_below_threshold(identity):
    user = identity.register_user("bob", set())
    with pytest.raises(PanvasError) as err:
        identity.grant_license(user.user_id, {"nlp"}, 60)
    assert err.value.code == errors.SCORE_BELOW_THRESHOLD


def test_license_state_machine(identity):
    user = identity.register_user("bob", set())
    first = identity.grant_license(user.user_id, {"nlp"}, 75)
    with pytest.raises(PanvasError) as err:
        identity.grant_license(user.user_id, {"nlp"}, 90)
    assert err.value.code == errors.LICENSE_EXISTS
    identity.revoke_license(user.user_id)
    assert first.status is LicenseStatus.REVOKED
    assert not identity.is_licensed(user.user_id)
    second = identity.grant_license(user.user_id, {"ir"}, 90)
    assert second.status is LicenseStatus.ACTIVE
    with pytest.raises(PanvasError) as err:
        identity.revoke_license("u999")
    assert err.value.code == errors.NO_ACTIVE_LICENSE or err.value.code == errors.UNKNOWN_USER


# -- pseudonyms -----------------------------------------------------------------


def test_pseudonym_deterministic(identity):
    user = identity.register_user("ada", set())
    p1 = identity.derive_pseudonym(user.user_id, "p1")
    p2 = identity.derive_pseudonym(user.user_id, "p1")
    assert p1.pseudonym_id == p2.pseudonym_id


def test_pseudonym_scope_separation(identity):
    user = identity.register_user("ada", set())
    p1 = identity.derive_pseudonym(user.user_id, "p1")
    p2 = identity.derive_pseudonym(user.user_id, "p2")
    assert p1.pseudonym_id != p2.pseudonym_id


def test_pseudonym_collision_free_at_scale():
    # 10^5 random (user, paper) pairs: determinism and zero collisions.
    rng = random.Random(5150)
    seen = {}
    for _ in range(100_000):
        user_id = f"u{rng.randrange(10_000)}"
        paper_id = f"p{rng.randrange(10_000)}"
        handle = derive_handle("scale-key", user_id, paper_id)
        assert derive_handle("scale-key", user_id, paper_id) == handle
        prior = seen.get(handle)
        assert prior is None or prior == (user_id, paper_id)
        seen[handle] = (user_id, paper_id)


def test_handle_resolution_and_scoping(identity):
    user = identity.register_user("ada", set())
    pseudonym = identity.derive_pseudonym(user.user_id, "p1")
    assert identity.resolve_handle(user.user_id) == user.user_id
    assert identity.resolve_handle(pseudonym.pseudonym_id, "p1") == user.user_id
    with pytest.raises(PanvasError) as err:
        identity.resolve_handle(pseudonym.pseudonym_id, "p2")
    assert err.value.code == errors.UNKNOWN_HANDLE
    with pytest.raises(PanvasError):
        identity.resolve_handle("anon-ffffffffffffffffffffffffffffffff")


def test_unmask_is_audited(identity):
    user = identity.register_user("ada", set())
    pseudonym = identity.derive_pseudonym(user.user_id, "p1")
    revealed = identity.unmask(pseudonym.pseudonym_id, "moderator-1", "abuse report")
    assert revealed.user_id == user.user_id
    assert identity.unmask_audit[-1]["moderator"] == "moderator-1"


# -- reputation -------------------------------------------------------------------


def test_reputation_ema_arithmetic(identity):
    user = identity.register_user("bob", set())
    identity.update_reputation(user.user_id, 5)
    assert user.reputation == pytest.approx(0.6)


def test_reputation_converges_to_observation(identity):
    user = identity.register_user("bob", set())
    for _ in range(200):
        identity.update_reputation(user.user_id, 3)
    assert user.reputation == pytest.approx(0.5, abs=1e-9)


def test_reputation_out_of_range(identity):
    user = identity.register_user("bob", set())
    for bad in (0, 6, -1):
        with pytest.raises(PanvasError) as err:
            identity.update_reputation(user.user_id, bad)
        assert err.value.code == errors.OUT_OF_RANGE


@settings(max_examples=200, deadline=None)
@given(qualities=st.lists(st.integers(min_value=1, max_value=5), max_size=50))
def test_reputation_stays_in_unit_interval_and_moves_toward_observation(qualities):
    identity = Identity(server_key="k")
    user = identity.register_user("x", set())
    for q in qualities:
        before = user.reputation
        observation = (q - 1) / 4
        identity.update_reputation(user.user_id, q)
        assert 0.0 <= user.reputation <= 1.0
        low, high = min(before, observation), max(before, observation)
        assert low - 1e-12 <= user.reputation <= high + 1e-12
