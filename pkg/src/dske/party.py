"""Alice, Hub and Bob state machines for one-way secret agreement."""

from __future__ import annotations

import json
from operator import xor
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Protocol, Sequence, Set, Tuple

from . import psrd, wire
from .field import FieldSpec
from .psrd import PsrdTable
from .sharing import (
    SecretTuple,
    ShareTuple,
    ThresholdParams,
    consistent,
    extend_shares,
    reconstruct,
)
from .wegman import MessageTagKey, tag_message, tag_secret

Route = Tuple[str, str, str]
GroupKey = Tuple[str, str, bytes, int]


class DiscardReason(str, Enum):
    MALFORMED = "Malformed"
    BAD_IDENTITY = "BadIdentity"
    PAD_USED = "PadUsed"
    BAD_TAG = "BadTag"
    EXHAUSTED = "Exhausted"
    DUPLICATE_HUB = "DuplicateHub"
    TAMPER_DETECTED = "TamperDetected"


_PLAIN = (int, str, float, bool, type(None))


class Transcript:
    """Ordered event log; records are flat JSON-able dicts."""

    def __init__(self, enabled: bool = True) -> None:
        self.records: List[Dict[str, Any]] = []
        self.enabled = enabled

    def record(self, event: str, **fields: Any) -> None:
        if not self.enabled:
            return
        rec = {"seq": len(self.records), "event": event}
        for k, v in fields.items():
            if type(v) not in _PLAIN:
                if isinstance(v, bytes):
                    v = v.hex()
                elif isinstance(v, Enum):
                    v = v.value
                elif isinstance(v, tuple):
                    v = list(v)
            rec[k] = v
        self.records.append(rec)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def events(self, event: str) -> List[Dict[str, Any]]:
        return [r for r in self.records if r["event"] == event]

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Transcript) and self.records == other.records


@dataclass
class Discard:
    reason: DiscardReason
    detail: str = ""


@dataclass
class Accepted:
    hub_index: int
    group: GroupKey


class SessionExhausted(Exception):
    """Alice could not allocate PSRD for every hub."""


@dataclass
class SessionOutcome:
    kind: str  # "secret" | "abort" | "incomplete" | "exhausted"
    secret: Optional[Tuple[int, ...]] = None
    transcript: Transcript = field(default_factory=Transcript)
    candidates: int = 0
    validated: int = 0

    @property
    def value(self) -> Optional[Tuple[int, ...]]:
        """S^B, or None for the abort symbol."""
        return self.secret if self.kind == "secret" else None

    @property
    def is_bottom(self) -> bool:
        return self.kind != "secret"


@dataclass
class Outbound:
    hub_index: int
    hub_id: str
    data: bytes


@dataclass
class Initiation:
    secret: SecretTuple
    session_id: bytes
    secret_tag: int
    messages: List[Outbound]


def _verify_tag(spec: FieldSpec, msg: wire.ProtocolMessage, key: Tuple[int, int]) -> bool:
    return tag_message(MessageTagKey(spec, *key), wire.message_elements(msg)) == msg.msg_tag


def _seal(msg: wire.ProtocolMessage, key: Tuple[int, int]) -> bytes:
    t = tag_message(MessageTagKey(msg.spec, *key), wire.message_elements(msg))
    return wire.encode(msg.with_tag(t))


def _xor(a: Sequence[int], b: Sequence[int]) -> Tuple[int, ...]:
    return tuple(map(xor, a, b))


# -- Alice -----------------------------------------------------------------

@dataclass
class AliceState:
    params: ThresholdParams
    identity: str
    hub_ids: Dict[int, str]
    tables: Dict[int, PsrdTable]
    rng: random.Random = field(default_factory=random.Random)
    counter: int = 0
    transcript: Transcript = field(default_factory=Transcript)
    sessions: List[Tuple[str, str, bytes, Tuple[int, ...]]] = field(default_factory=list)

    def new_session_id(self) -> bytes:
        self.counter += 1
        return self.counter.to_bytes(4, "big") + self.rng.getrandbits(32).to_bytes(4, "big")


def alice_initiate(state: AliceState, receiver: str) -> Initiation:
    params = state.params
    spec, m = params.spec, params.m
    for i in range(1, params.n + 1):
        if not state.tables[i].can_allocate(m):
            state.transcript.record("exhausted", party=state.identity, hub=i)
            raise SessionExhausted(f"table with hub {i} exhausted")
    allocs = {i: psrd.allocate_next(state.tables[i], m) for i in range(1, params.n + 1)}
    first_k = [ShareTuple(i, allocs[i].share_pad) for i in range(1, params.k + 1)]
    shares, secret = extend_shares(params, first_k)
    o = tag_secret(secret.tag_key(spec), secret.s)
    session_id = state.new_session_id()
    out = []
    for share in shares:
        i = share.index
        alloc = allocs[i]
        msg = wire.ProtocolMessage(
            spec, state.hub_ids[i], state.identity, receiver, session_id,
            alloc.offset, _xor(share.elements, alloc.share_pad), o,
        )
        data = _seal(msg, alloc.tag_key)
        state.transcript.record("send", party=state.identity, hub=i, offset=alloc.offset)
        out.append(Outbound(i, state.hub_ids[i], data))
    state.sessions.append((state.identity, receiver, session_id, secret.s))
    return Initiation(secret, session_id, o, out)


# -- Hub -------------------------------------------------------------------

class CompromisedControl(Protocol):
    def compromised_relay(
        self, hub_index: int, share: Tuple[int, ...], secret_tag: int, msg: wire.ProtocolMessage
    ) -> Optional[Tuple[Tuple[int, ...], int]]: ...


@dataclass
class HubState:
    index: int
    identity: str
    params: ThresholdParams
    table_from_alice: PsrdTable
    table_to_bob: PsrdTable
    allowlist: Set[Route]
    mode: str = "honest"
    control: Optional[CompromisedControl] = None
    transcript: Transcript = field(default_factory=Transcript)


def _receive_checked(
    params: ThresholdParams,
    table: PsrdTable,
    data: bytes,
    identity_ok,
    who: str,
    transcript: Transcript,
    hub: int,
):
    """Shared receiver path: decode, identity, pad-unused, consume, tag. Returns (msg, share) or Discard."""
    spec, m = params.spec, params.m
    try:
        msg = wire.decode(data, spec, m)
    except wire.Malformed as exc:
        return _discard(transcript, who, hub, DiscardReason.MALFORMED, str(exc))
    problem = identity_ok(msg)
    if problem:
        return _discard(transcript, who, hub, DiscardReason.BAD_IDENTITY, problem)
    try:
        table.check_unused(msg.offset, m)
    except psrd.PsrdError as exc:
        return _discard(transcript, who, hub, DiscardReason.PAD_USED, str(exc))
    alloc = psrd.consume_at(table, msg.offset, m)
    if not _verify_tag(spec, msg, alloc.tag_key):
        return _discard(transcript, who, hub, DiscardReason.BAD_TAG, f"offset {msg.offset}")
    return msg, _xor(msg.masked_share, alloc.share_pad), alloc.offset


def _discard(transcript: Transcript, who: str, hub: int, reason: DiscardReason, detail: str) -> Discard:
    transcript.record("discard", party=who, hub=hub, reason=reason, detail=detail)
    return Discard(reason, detail)


def hub_process(state: HubState, inbound: bytes, origin: str):
    """Relay one Alice->Hub message.

    Returns the outbound bytes, a Discard, or None when a compromised hub
    chooses to withhold.
    """

    def identity_ok(msg: wire.ProtocolMessage) -> str:
        if msg.hub_id != state.identity:
            return f"addressed to {msg.hub_id!r}"
        if msg.route not in state.allowlist:
            return f"route {msg.route} not allowed"
        if origin != msg.sender_id:
            return f"arrived from {origin!r}, claims {msg.sender_id!r}"
        return ""

    got = _receive_checked(
        state.params, state.table_from_alice, inbound, identity_ok,
        state.identity, state.transcript, state.index,
    )
    if isinstance(got, Discard):
        return got
    msg, share, offset = got
    state.transcript.record("hub_accept", party=state.identity, hub=state.index, offset=offset)
    o = msg.secret_tag
    if state.mode == "compromised" and state.control is not None:
        injected = state.control.compromised_relay(state.index, share, o, msg)
        if injected is None:
            state.transcript.record("hub_withhold", party=state.identity, hub=state.index)
            return None
        share, o = injected
    m = state.params.m
    if not state.table_to_bob.can_allocate(m):
        return _discard(state.transcript, state.identity, state.index, DiscardReason.EXHAUSTED, "hub->bob table")
    alloc = psrd.allocate_next(state.table_to_bob, m)
    out = wire.ProtocolMessage(
        state.params.spec, state.identity, msg.sender_id, msg.receiver_id, msg.session_id,
        alloc.offset, _xor(share, alloc.share_pad), o,
    )
    state.transcript.record("send", party=state.identity, hub=state.index, offset=alloc.offset)
    return _seal(out, alloc.tag_key)


# -- Bob -------------------------------------------------------------------

@dataclass
class BobState:
    params: ThresholdParams
    identity: str
    hub_index: Dict[str, int]
    tables: Dict[int, PsrdTable]
    allowlist: Set[Route]
    groups: Dict[GroupKey, Dict[int, Tuple[int, ...]]] = field(default_factory=dict)
    transcript: Transcript = field(default_factory=Transcript)


def bob_receive(state: BobState, inbound: bytes, origin: str):
    try:
        hub = state.hub_index[origin]
    except KeyError:
        return _discard(state.transcript, state.identity, -1, DiscardReason.BAD_IDENTITY, f"unknown link {origin!r}")

    def identity_ok(msg: wire.ProtocolMessage) -> str:
        if msg.hub_id != origin:
            return f"arrived from {origin!r}, claims {msg.hub_id!r}"
        if msg.receiver_id != state.identity:
            return f"addressed to {msg.receiver_id!r}"
        if msg.route not in state.allowlist:
            return f"route {msg.route} not allowed"
        return ""

    got = _receive_checked(
        state.params, state.tables[hub], inbound, identity_ok,
        state.identity, state.transcript, hub,
    )
    if isinstance(got, Discard):
        return got
    msg, share, offset = got
    key: GroupKey = (msg.sender_id, msg.receiver_id, msg.session_id, msg.secret_tag)
    group = state.groups.setdefault(key, {})
    if hub in group:
        return _discard(state.transcript, state.identity, hub, DiscardReason.DUPLICATE_HUB, "")
    group[hub] = share
    state.transcript.record("accept", party=state.identity, hub=hub, offset=offset, o=msg.secret_tag)
    return Accepted(hub, key)


def validate_candidates(
    params: ThresholdParams, shares: Dict[int, Tuple[int, ...]], secret_tag: int
) -> Tuple[List[SecretTuple], List[SecretTuple]]:
    """All distinct k-subset reconstructions and those that pass validation."""
    spec = params.spec
    points = [ShareTuple(i, shares[i]) for i in sorted(shares)]
    if consistent(params, points):
        # every k-subset of points on one polynomial reconstructs the same tuple
        distinct = [reconstruct(params, points[: params.k])]
    else:
        seen = {}
        for subset in _subsets(points, params.k):
            cand = reconstruct(params, subset)
            seen.setdefault(cand.elements, cand)
        distinct = list(seen.values())
    valid = [c for c in distinct if tag_secret(c.tag_key(spec), c.s) == secret_tag]
    return distinct, valid


def _subsets(points: List[ShareTuple], k: int):
    from itertools import combinations

    return combinations(points, k)


def bob_finalize(state: BobState, key: GroupKey) -> SessionOutcome:
    group = state.groups.pop(key, {})
    params = state.params
    tr = state.transcript
    if len(group) < params.k:
        tr.record("finalize", party=state.identity, size=len(group), result="incomplete")
        return SessionOutcome("incomplete", transcript=tr)
    distinct, valid = validate_candidates(params, group, key[3])
    if len(valid) == 1:
        tr.record("finalize", party=state.identity, size=len(group), result="secret",
                  candidates=len(distinct), validated=1)
        return SessionOutcome("secret", valid[0].s, tr, len(distinct), 1)
    tr.record("finalize", party=state.identity, size=len(group), result="abort",
              candidates=len(distinct), validated=len(valid))
    return SessionOutcome("abort", None, tr, len(distinct), len(valid))
