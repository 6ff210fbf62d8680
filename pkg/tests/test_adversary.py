import random

import pytest

from dske.adversary import (
    AdversaryConfig, AdversaryError, BestKnownAttack, Blocked, channel_apply, default_attack,
    eve_inject, parse_policy, run_best_known_attack,
)
from dske.estimators import eve_view_distance
from dske.field import GF16
from dske.sharing import ThresholdParams, apply_tamper
from dske.simnet import ScenarioConfig, run_session, run_trials, trial_seed
from dske.stats import binomial_sigma
from dske.wegman import tag_secret
from dske.wire import tagged_length

PARAMS = ThresholdParams(3, 2, 1, GF16)


def attack_cfg(field="gf16", mode="skeleton", **kw):
    cfg = ScenarioConfig(field=field, mode=mode, **kw)
    cfg.adversary = AdversaryConfig(frozenset({1}), "active", attack=default_attack(cfg.params))
    return cfg


@pytest.mark.parametrize("text,want", [
    ("faithful", ("faithful",)), (" block ", ("block",)), ("random", ("random",)),
    ("flip:3:0x80", ("flip", 3, 0x80)),
])
def test_parse_policy(text, want):
    assert parse_policy(text) == want


@pytest.mark.parametrize("text", ["flip:1", "flip:0:0", "flip:0:256", "drop", "flip:-1:1"])
def test_parse_policy_rejects(text):
    with pytest.raises(AdversaryError):
        parse_policy(text)


def test_channel_apply():
    rng = random.Random(0)
    data = bytes(range(10))
    assert channel_apply(("faithful",), data, rng) is data
    assert channel_apply(("block",), data, rng) is Blocked
    assert channel_apply(("flip", 2, 0xFF), data, rng) == bytes([0, 1, 0xFD]) + data[3:]
    mutated = channel_apply(("random",), data, rng)
    assert sum(a != b for a, b in zip(mutated, data)) == 1
    with pytest.raises(AdversaryError):
        channel_apply(("flip", 10, 1), data, rng)


@pytest.mark.parametrize("policy", ["block", "random", "flip:0:1"])
def test_passive_eve_cannot_interfere(policy):
    with pytest.raises(AdversaryError):
        AdversaryConfig(mode="passive", channel_policy={"A->P1": policy}).validate(PARAMS)
    with pytest.raises(AdversaryError):
        channel_apply(parse_policy(policy), b"abc", random.Random(), "passive")


def test_config_validation():
    with pytest.raises(AdversaryError):
        AdversaryConfig(frozenset({1, 2}), "active").validate(PARAMS)
    AdversaryConfig(frozenset({1, 2}), "active").validate(PARAMS, enforce_threshold=False)
    with pytest.raises(AdversaryError):
        AdversaryConfig(frozenset({4})).validate(PARAMS)
    with pytest.raises(AdversaryError):
        AdversaryConfig(channel_policy={"A->P9": "faithful"}).validate(PARAMS)
    with pytest.raises(AdversaryError):
        AdversaryConfig(frozenset({1}), "passive", attack=default_attack(PARAMS)).validate(PARAMS)
    with pytest.raises(AdversaryError):
        AdversaryConfig(hub_behaviour="lying").validate(PARAMS)


@pytest.mark.parametrize("attack", [
    BestKnownAttack(1, (0, 0, 0, 0), (1, 2)),
    BestKnownAttack(2, (0, 0, 0, 1), (1, 2)),
    BestKnownAttack(1, (0, 0, 1), (1, 2)),
    BestKnownAttack(1, (0, 0, 0, 1), (1, 3, 2)),
    BestKnownAttack(1, (0, 0, 0, 1), (2, 3)),
    BestKnownAttack(1, (0, 0, 0, 1), (1, 2), tag_delta=1),
])
def test_bad_attacks_rejected(attack):
    with pytest.raises(AdversaryError):
        attack.validate(PARAMS, frozenset({1}))


def test_attack_share_delta_moves_secret_exactly():
    attack = default_attack(PARAMS)
    shift = apply_tamper(PARAMS, attack.keep, {attack.target: attack.share_delta(PARAMS)})
    assert shift == attack.secret_delta
    assert attack.cut_links(PARAMS) == ["P3->B"]


def test_inject_needs_compromised_hub():
    cfg = AdversaryConfig(frozenset({1}), "active")
    assert eve_inject(cfg, 1, [1, 2, 3, 4], 5) == ((1, 2, 3, 4), 5)
    with pytest.raises(AdversaryError):
        eve_inject(cfg, 2, [1, 2, 3, 4], 5)


def test_eve_sees_only_compromised_shares():
    cfg = ScenarioConfig(n=5, k=3, adversary=AdversaryConfig(frozenset({2, 4})))
    run = run_session(cfg, "view")
    eve = run.eve
    assert eve.shares[1] is None and eve.shares[3] is None and eve.shares[5] is None
    assert eve.shares[2] is not None and eve.shares[4] is not None
    o = tag_secret(run.secret_a.tag_key(cfg.spec), run.secret_a.s)
    assert eve.tags == [o, o]
    assert len(eve.transits) == 10
    assert run.kind == "success"


def test_passive_view_independent_of_secret():
    report = eve_view_distance("gf16", 3, 2, 1)
    assert report.measured == 0.0 and report.passed


def test_wrong_secret_is_shifted_by_attack_delta():
    cfg = attack_cfg()
    found = 0
    for i in range(200):
        run = run_session(cfg, trial_seed(0, i))
        if run.kind == "wrong":
            found += 1
            assert tuple(a ^ b for a, b in zip(run.outcome.value, run.secret_a.s)) == (1,)
    assert found


def test_zero_delta_never_wins():
    cfg = ScenarioConfig(adversary=AdversaryConfig(
        frozenset({1}), "active", attack=BestKnownAttack(1, (0, 0, 0, 0), (1, 2))))
    for i in range(20):
        report = run_best_known_attack(cfg, i, validate=False)
        assert report.outcome == "success" and not report.wrong_secret


def test_default_attack_rate_near_two_sixteenths():
    summary = run_trials(attack_cfg(), 2000)
    rate = summary.rate("wrong")
    assert abs(rate - 2 / 16) <= 4 * binomial_sigma(2 / 16, 2000)
    assert rate <= 0.375


@pytest.mark.parametrize("field", ["gf16", "gf2_64"])
def test_random_mutation_forgery_rate(field):
    cfg = ScenarioConfig(field=field, mode="general", adversary=AdversaryConfig(
        mode="active", channel_policy={"P3->B": "random", "A->P2": "random"}))
    summary = run_trials(cfg, 1500)
    s = tagged_length(cfg.spec, ("P3", "A", "B"), 1)
    rate = summary.tampered_accepted / summary.tampered_total
    assert summary.tampered_total == 3000
    assert rate <= min(s / cfg.spec.order, 1) + 3 * binomial_sigma(rate, summary.tampered_total)
    if field == "gf2_64":
        assert summary.tampered_accepted == 0
        assert summary.counts["wrong"] == 0
