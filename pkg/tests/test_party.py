import random

import pytest

from dske import psrd, wire
from dske.field import GF16, GF2_64
from dske.party import (
    Accepted, AliceState, BobState, Discard, DiscardReason, HubState, SessionExhausted,
    alice_initiate, bob_finalize, bob_receive, hub_process,
)
from dske.sharing import ShareTuple, ThresholdParams, reconstruct
from dske.wegman import MessageTagKey, SecretTagKey, tag_message


class Shift:
    """Compromised-hub control that adds fixed deltas to the share and to o."""

    def __init__(self, share_delta=None, tag_delta=0, withhold=False):
        self.share_delta = share_delta
        self.tag_delta = tag_delta
        self.withhold = withhold
        self.seen = []

    def compromised_relay(self, hub, share, o, msg):
        self.seen.append((hub, share, o))
        if self.withhold:
            return None
        if self.share_delta:
            share = tuple(a ^ b for a, b in zip(share, self.share_delta))
        return share, o ^ self.tag_delta


def network(n=3, k=2, m=1, spec=GF16, length=None, seed=0, controls=None):
    params = ThresholdParams(n, k, m, spec)
    rng = random.Random(seed)
    length = length or min(spec.order, 2 * psrd.block_size(m))
    controls = controls or {}
    hub_ids = {i: f"P{i}" for i in range(1, n + 1)}
    alice_tables, bob_tables, hubs = {}, {}, {}
    for i, pid in hub_ids.items():
        up_hub, up_alice = psrd.generate_pair(rng, length, ("A", pid, "up"), spec)
        down_hub, down_bob = psrd.generate_pair(rng, length, ("B", pid, "down"), spec)
        alice_tables[i], bob_tables[i] = up_alice, down_bob
        hubs[i] = HubState(i, pid, params, up_hub, down_hub, {(pid, "A", "B")},
                           "compromised" if i in controls else "honest", controls.get(i))
    alice = AliceState(params, "A", hub_ids, alice_tables, random.Random(seed + 1))
    bob = BobState(params, "B", {p: i for i, p in hub_ids.items()}, bob_tables,
                   {(p, "A", "B") for p in hub_ids.values()})
    return params, alice, hubs, bob


def relay(hubs, init):
    return {out.hub_index: hub_process(hubs[out.hub_index], out.data, "A") for out in init.messages}


def test_first_k_masked_shares_are_zero():
    params, alice, _, _ = network(n=5, k=3, m=2)
    init = alice_initiate(alice, "B")
    for out in init.messages:
        msg = wire.decode(out.data, params.spec, params.m)
        if out.hub_index <= params.k:
            assert msg.masked_share == (0,) * params.width
    assert any(wire.decode(o.data, params.spec).masked_share != (0,) * params.width
               for o in init.messages[params.k:])


def test_messages_share_o_and_session():
    params, alice, _, _ = network(n=4, k=2)
    init = alice_initiate(alice, "B")
    decoded = [wire.decode(o.data, params.spec) for o in init.messages]
    assert {d.secret_tag for d in decoded} == {init.secret_tag}
    assert {d.session_id for d in decoded} == {init.session_id}


@pytest.mark.parametrize("subset", [(1, 2), (1, 3), (2, 3)])
def test_any_k_messages_reconstruct(subset):
    _, alice, hubs, bob = network()
    init = alice_initiate(alice, "B")
    relayed = relay(hubs, init)
    for i in subset:
        res = bob_receive(bob, relayed[i], f"P{i}")
        assert isinstance(res, Accepted)
    (key,) = bob.groups
    outcome = bob_finalize(bob, key)
    assert outcome.kind == "secret" and outcome.value == init.secret.s


def test_compromised_hubs_see_plain_shares():
    control = Shift()
    params, alice, hubs, _ = network(controls={1: control, 3: control})
    init = alice_initiate(alice, "B")
    relay(hubs, init)
    assert [(h, o) for h, _, o in control.seen] == [(1, init.secret_tag), (3, init.secret_tag)]
    points = [ShareTuple(h, share) for h, share, _ in control.seen]
    assert reconstruct(params, points) == init.secret


def test_replay_is_pad_used():
    _, alice, hubs, bob = network()
    init = alice_initiate(alice, "B")
    first = init.messages[0]
    assert isinstance(hub_process(hubs[1], first.data, "A"), bytes)
    res = hub_process(hubs[1], first.data, "A")
    assert isinstance(res, Discard) and res.reason is DiscardReason.PAD_USED


def test_bit_flip_is_bad_tag_and_burns_pad():
    params, alice, hubs, bob = network(spec=GF2_64)
    init = alice_initiate(alice, "B")
    data = bytearray(init.messages[0].data)
    data[-12] ^= 0x01  # inside o
    res = hub_process(hubs[1], bytes(data), "A")
    assert isinstance(res, Discard) and res.reason is DiscardReason.BAD_TAG
    res = hub_process(hubs[1], init.messages[0].data, "A")
    assert isinstance(res, Discard) and res.reason is DiscardReason.PAD_USED


def test_identity_and_format_checks():
    _, alice, hubs, bob = network()
    init = alice_initiate(alice, "B")
    res = hub_process(hubs[2], init.messages[0].data, "A")
    assert res.reason is DiscardReason.BAD_IDENTITY
    res = hub_process(hubs[1], init.messages[0].data, "Mallory")
    assert res.reason is DiscardReason.BAD_IDENTITY
    assert hub_process(hubs[1], b"\x01junk", "A").reason is DiscardReason.MALFORMED
    assert hubs[1].table_from_alice.unused_count == len(hubs[1].table_from_alice)
    relayed = relay(hubs, init)
    assert bob_receive(bob, relayed[1], "P2").reason is DiscardReason.BAD_IDENTITY
    assert bob_receive(bob, relayed[1], "P9").reason is DiscardReason.BAD_IDENTITY


def test_tampered_o_lands_in_other_group():
    _, alice, hubs, bob = network(controls={3: Shift(tag_delta=0x5)})
    init = alice_initiate(alice, "B")
    relayed = relay(hubs, init)
    groups = {bob_receive(bob, relayed[i], f"P{i}").group for i in (1, 2, 3)}
    assert len(groups) == 2
    honest = next(g for g in groups if g[3] == init.secret_tag)
    assert len(bob.groups[honest]) == 2
    assert bob_finalize(bob, honest).value == init.secret.s


def test_duplicate_hub_in_group():
    params, alice, hubs, bob = network()
    init = alice_initiate(alice, "B")
    relayed = relay(hubs, init)
    assert isinstance(bob_receive(bob, relayed[1], "P1"), Accepted)
    # hub 1 sends a second, properly sealed message into the same group
    first = wire.decode(relayed[1], params.spec)
    alloc = psrd.allocate_next(hubs[1].table_to_bob, params.m)
    msg = wire.ProtocolMessage(params.spec, "P1", "A", "B", first.session_id, alloc.offset,
                               tuple(alloc.share_pad), first.secret_tag)
    tag = tag_message(MessageTagKey(params.spec, *alloc.tag_key), wire.message_elements(msg))
    res = bob_receive(bob, wire.encode(msg.with_tag(tag)), "P1")
    assert isinstance(res, Discard) and res.reason is DiscardReason.DUPLICATE_HUB


def test_k_minus_one_is_incomplete():
    _, alice, hubs, bob = network(n=5, k=3)
    init = alice_initiate(alice, "B")
    relayed = relay(hubs, init)
    for i in (2, 5):
        bob_receive(bob, relayed[i], f"P{i}")
    (key,) = bob.groups
    out = bob_finalize(bob, key)
    assert out.kind == "incomplete" and out.is_bottom and out.value is None


def test_shifted_share_filtered_by_validation():
    params, alice, hubs, bob = network(spec=GF2_64, controls={2: Shift(share_delta=(0, 1, 7, 9))})
    init = alice_initiate(alice, "B")
    relayed = relay(hubs, init)
    for i in (1, 2, 3):
        bob_receive(bob, relayed[i], f"P{i}")
    (key,) = bob.groups
    out = bob_finalize(bob, key)
    assert out.kind == "secret" and out.value == init.secret.s
    assert out.candidates == 3 and out.validated == 1


def test_withholding_hub_sends_nothing():
    _, alice, hubs, _ = network(controls={1: Shift(withhold=True)})
    init = alice_initiate(alice, "B")
    assert relay(hubs, init)[1] is None


def test_alice_exhaustion_is_all_or_nothing():
    params, alice, _, _ = network(length=psrd.block_size(1) + 2)
    alice_initiate(alice, "B")
    alice.tables[2].next_offset = 0  # one table still has room
    cursors = {i: t.next_offset for i, t in alice.tables.items()}
    with pytest.raises(SessionExhausted):
        alice_initiate(alice, "B")
    assert {i: t.next_offset for i, t in alice.tables.items()} == cursors


def test_transcript_is_json_lines():
    _, alice, hubs, bob = network()
    init = alice_initiate(alice, "B")
    relay(hubs, init)
    lines = alice.transcript.to_jsonl().splitlines()
    assert len(lines) == len(alice.transcript.events("send"))


def test_consistency_shortcut_matches_full_enumeration():
    from itertools import combinations

    from dske.party import validate_candidates
    from dske.sharing import extend_shares
    from dske.wegman import tag_secret

    rng = random.Random(12)
    for _ in range(300):
        n = rng.randint(2, 6)
        k = rng.randint(1, n)
        params = ThresholdParams(n, k, 1, GF16)
        first = [ShareTuple(i, tuple(rng.randrange(16) for _ in range(4))) for i in range(1, k + 1)]
        shares, secret = extend_shares(params, first)
        group = {s.index: s.elements for s in shares if rng.random() < 0.8}
        if len(group) < k:
            continue
        if rng.random() < 0.5:
            victim = rng.choice(sorted(group))
            group[victim] = tuple(v ^ rng.randrange(16) for v in group[victim])
        o = tag_secret(secret.tag_key(GF16), secret.s)
        distinct, valid = validate_candidates(params, group, o)
        brute = {reconstruct(params, [ShareTuple(i, group[i]) for i in sub]).elements
                 for sub in combinations(sorted(group), k)}
        assert {c.elements for c in distinct} == brute
        assert {c.elements for c in valid} == {
            e for e in brute if tag_secret(SecretTagKey(GF16, *e[:3]), e[3:]) == o}
