"""Deterministic in-process network driving DSKE sessions.

Every session runs on one event loop: a heap keyed by (tick, sequence).
Channels carry a trusted origin label. In skeleton mode a channel that
Eve alters delivers a ``TamperDetected`` marker instead of the bytes; in
general mode the altered bytes arrive and the receiver's tag check is the
only defence.
"""

from __future__ import annotations

import configparser
import heapq
import random
from dataclasses import asdict, dataclass, field as dc_field
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

from . import psrd
from .adversary import (
    AdversaryConfig,
    AdversaryError,
    BestKnownAttack,
    Blocked,
    Eve,
    alice_link,
    bob_link,
    default_attack,
)
from .field import FieldSpec, spec_by_name
from .party import (
    AliceState,
    BobState,
    DiscardReason,
    HubState,
    SessionExhausted,
    SessionOutcome,
    Transcript,
    alice_initiate,
    bob_finalize,
    bob_receive,
    hub_process,
    Accepted,
    Discard,
)
from .sharing import SecretTuple, ThresholdParams
from .stats import clopper_pearson

MAX_HUBS = 12
MODES = ("skeleton", "general")
DELIVERIES = ("in-order", "seeded-shuffle", "drop-set")
OUTCOME_KINDS = ("success", "wrong", "abort", "incomplete", "exhausted")
ALICE, BOB = "A", "B"


class ConfigError(ValueError):
    pass


def hub_id(i: int) -> str:
    return f"P{i}"


@dataclass
class ScenarioConfig:
    n: int = 3
    k: int = 2
    m: int = 1
    field: str = "gf16"
    mode: str = "skeleton"
    delivery: str = "in-order"
    drop: FrozenSet[str] = frozenset()
    table_length: Optional[int] = None
    deadline: Optional[int] = None
    trials: int = 1
    master_seed: int = 0
    adversary: AdversaryConfig = dc_field(default_factory=AdversaryConfig)

    @property
    def spec(self) -> FieldSpec:
        return spec_by_name(self.field)

    @property
    def params(self) -> ThresholdParams:
        return ThresholdParams(self.n, self.k, self.m, self.spec)

    @property
    def general(self) -> bool:
        return self.mode == "general"

    @property
    def effective_table_length(self) -> int:
        if self.table_length is not None:
            return self.table_length
        return min(self.spec.order, 2 * psrd.block_size(self.m))

    @property
    def effective_deadline(self) -> int:
        return self.deadline if self.deadline is not None else 2 * self.n

    def validate(self) -> None:
        try:
            spec = self.spec
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 1 <= self.n <= MAX_HUBS:
            raise ConfigError(f"n must be in 1..{MAX_HUBS}")
        try:
            params = self.params
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.delivery not in DELIVERIES:
            raise ConfigError(f"delivery must be one of {DELIVERIES}")
        if self.drop and self.delivery != "drop-set":
            raise ConfigError("a drop list needs delivery = drop-set")
        length = self.effective_table_length
        if not psrd.block_size(self.m) <= length <= spec.order:
            raise ConfigError(
                f"table_length must be in {psrd.block_size(self.m)}..{spec.order} for {spec.name}, m={self.m}"
            )
        if self.effective_deadline < 2 * self.n:
            raise ConfigError(f"deadline must be at least 2n = {2 * self.n} deliveries")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        try:
            self.adversary.validate(params)
        except AdversaryError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> Dict[str, Any]:
        adv = self.adversary
        return {
            "n": self.n, "k": self.k, "m": self.m, "field": self.field, "mode": self.mode,
            "delivery": self.delivery, "drop": sorted(self.drop),
            "table_length": self.effective_table_length, "deadline": self.effective_deadline,
            "trials": self.trials, "master_seed": self.master_seed,
            "adversary": {
                "compromised": sorted(adv.compromised), "mode": adv.mode,
                "hub_behaviour": adv.hub_behaviour, "channels": dict(sorted(adv.channel_policy.items())),
                "attack": asdict(adv.attack) if adv.attack else None,
            },
        }


@dataclass
class SessionRun:
    outcome: SessionOutcome
    transcript: Transcript
    secret_a: Optional[SecretTuple]
    eve: Eve
    tables: Dict[str, psrd.PsrdTable]
    # (altered messages that passed the receiver's checks, altered messages delivered)
    tamper: Tuple[int, int] = (0, 0)

    @property
    def kind(self) -> str:
        """success | wrong | abort | incomplete | exhausted."""
        o = self.outcome
        if o.kind == "secret":
            return "success" if self.secret_a is not None and o.secret == self.secret_a.s else "wrong"
        return o.kind

    @property
    def consumed(self) -> Dict[str, int]:
        """Elements used per table copy, keyed like ``A-P1`` or ``P1-down``."""
        return {name: len(t) - t.unused_count for name, t in self.tables.items()}

    def __iter__(self):
        yield self.outcome
        yield self.transcript


def _combine(outcomes: List[SessionOutcome], transcript: Transcript) -> SessionOutcome:
    # Bob outputs a value only when every finished group agrees on it
    secrets = {o.secret for o in outcomes if o.kind == "secret"}
    if any(o.kind == "abort" for o in outcomes) or len(secrets) > 1:
        return SessionOutcome("abort", None, transcript)
    if secrets:
        return SessionOutcome("secret", secrets.pop(), transcript)
    return SessionOutcome("incomplete", None, transcript)


def run_session(
    config: ScenarioConfig,
    seed,
    alice_pads: Optional[Dict[int, Sequence[int]]] = None,
    *,
    validate: bool = True,
    record: bool = True,
) -> SessionRun:
    """One session under ``config``; ``alice_pads`` pins the first block of Alice's hub tables."""
    if validate:
        config.validate()
    params = config.params
    spec = params.spec
    n = params.n
    transcript = Transcript(enabled=record)
    # one stream for key material, one for everything on the network
    table_rng = random.Random(f"{seed}:tables")
    delivery_rng = random.Random(f"{seed}:network")
    eve = Eve(config.adversary, params, delivery_rng, config.general, validate=validate)
    length = config.effective_table_length
    hubs = {i: hub_id(i) for i in range(1, n + 1)}

    alice_tables, bob_tables, hub_states = {}, {}, {}
    for i, pid in hubs.items():
        up_hub, up_alice = psrd.generate_pair(table_rng, length, (ALICE, pid, "up"), spec)
        down_hub, down_bob = psrd.generate_pair(table_rng, length, (BOB, pid, "down"), spec)
        if alice_pads and i in alice_pads:
            pad = list(alice_pads[i])
            up_hub.elements[: len(pad)] = pad
            up_alice.elements[: len(pad)] = pad
        alice_tables[i] = up_alice
        bob_tables[i] = down_bob
        compromised = i in config.adversary.compromised
        hub_states[i] = HubState(
            i, pid, params, up_hub, down_hub, {(pid, ALICE, BOB)},
            "compromised" if compromised else "honest",
            eve if compromised else None, transcript,
        )
    all_tables = {f"A-{p}": alice_tables[i] for i, p in hubs.items()}
    all_tables.update({f"{p}-up": hub_states[i].table_from_alice for i, p in hubs.items()})
    all_tables.update({f"{p}-down": hub_states[i].table_to_bob for i, p in hubs.items()})
    all_tables.update({f"B-{p}": bob_tables[i] for i, p in hubs.items()})

    alice = AliceState(params, ALICE, hubs, alice_tables, table_rng, transcript=transcript)
    bob = BobState(
        params, BOB, {p: i for i, p in hubs.items()}, bob_tables,
        {(p, ALICE, BOB) for p in hubs.values()}, transcript=transcript,
    )

    try:
        init = alice_initiate(alice, BOB)
    except SessionExhausted:
        out = SessionOutcome("exhausted", None, transcript)
        transcript.record("outcome", result="exhausted")
        return SessionRun(out, transcript, None, eve, all_tables, (0, 0))

    queue: List[Tuple[int, int, str, str, Any]] = []
    seq = 0
    now = 0
    shuffle = config.delivery == "seeded-shuffle"

    def send(link: str, dest: str, data: bytes) -> None:
        nonlocal seq
        eve.observe_transit(link, data)
        if link in config.drop:
            transcript.record("dropped", link=link)
            return
        delivered = eve.channel(link, data)
        if delivered is Blocked:
            transcript.record("blocked", link=link)
            return
        if delivered is not data:
            tampered_links.add(link)
            transcript.record("tampered", link=link)
            if not config.general:
                delivered = DiscardReason.TAMPER_DETECTED
        tick = now + 1 + (delivery_rng.randrange(2 * n) if shuffle else 0)
        heapq.heappush(queue, (tick, seq, link, dest, delivered))
        seq += 1

    tampered_links = set()
    tampered_passed = 0
    for out in init.messages:
        send(alice_link(out.hub_index), out.hub_id, out.data)

    outcomes: List[SessionOutcome] = []
    deliveries = 0
    deadline = config.effective_deadline
    while queue and deliveries < deadline:
        now, _, link, dest, payload = heapq.heappop(queue)
        deliveries += 1
        transcript.record("deliver", link=link, tick=now)
        receiver = BOB if dest == BOB else dest
        if payload is DiscardReason.TAMPER_DETECTED:
            transcript.record("discard", party=receiver, link=link, reason=payload)
            continue
        if dest == BOB:
            origin = link.split("->")[0]
            res = bob_receive(bob, payload, origin)
            if isinstance(res, Accepted):
                tampered_passed += link in tampered_links
                if len(bob.groups[res.group]) == n:
                    outcomes.append(bob_finalize(bob, res.group))
        else:
            i = int(dest[1:])
            res = hub_process(hub_states[i], payload, ALICE)
            if not isinstance(res, Discard):
                tampered_passed += link in tampered_links
            if isinstance(res, bytes):
                send(bob_link(i), BOB, res)

    if queue:
        transcript.record("deadline", pending=len(queue))
    for key in list(bob.groups):
        outcomes.append(bob_finalize(bob, key))
    outcome = _combine(outcomes, transcript)
    transcript.record("outcome", result=outcome.kind)
    return SessionRun(outcome, transcript, init.secret, eve, all_tables, (tampered_passed, len(tampered_links)))


def trial_seed(master_seed, index: int) -> str:
    return f"{master_seed}:{index}"


@dataclass
class TrialSummary:
    config: Dict[str, Any]
    trials: int
    counts: Dict[str, int]
    intervals: Dict[str, Tuple[float, float]]
    tampered_accepted: int = 0
    tampered_total: int = 0

    def rate(self, kind: str) -> float:
        return self.counts[kind] / self.trials

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config, "trials": self.trials, "counts": self.counts,
            "rates": {k: self.rate(k) for k in OUTCOME_KINDS},
            "ci99": {k: list(v) for k, v in self.intervals.items()},
            "tampered_accepted": self.tampered_accepted, "tampered_total": self.tampered_total,
        }


def run_trials(config: ScenarioConfig, trials: Optional[int] = None) -> TrialSummary:
    config.validate()
    total = config.trials if trials is None else trials
    if total < 1:
        raise ConfigError("trials must be >= 1")
    counts = dict.fromkeys(OUTCOME_KINDS, 0)
    acc = seen = 0
    for index in range(total):
        run = run_session(config, trial_seed(config.master_seed, index), validate=False, record=False)
        counts[run.kind] += 1
        a, t = run.tamper
        acc += a
        seen += t
    intervals = {k: clopper_pearson(v, total) for k, v in counts.items()}
    return TrialSummary(config.to_dict(), total, counts, intervals, acc, seen)


# -- config files ----------------------------------------------------------

def _parse_ints(text: str) -> List[int]:
    return [int(x, 0) for x in text.replace(",", " ").split()]


def _parse_attack(text: str, params: ThresholdParams) -> Optional[BestKnownAttack]:
    text = text.strip()
    if text in ("", "none"):
        return None
    if text == "default":
        return default_attack(params)
    fields = {}
    for part in text.split(";"):
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    try:
        return BestKnownAttack(
            int(fields["target"], 0),
            tuple(_parse_ints(fields["delta"])),
            tuple(_parse_ints(fields["keep"])),
            int(fields.get("tag", "0"), 0),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad attack spec {text!r}: {exc}") from None


def parse_config(text: str) -> ScenarioConfig:
    """Read the INI scenario format (sections ``scenario``, ``adversary``, ``channels``)."""
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if not cp.has_section("scenario"):
        raise ConfigError("missing [scenario] section")
    sc = cp["scenario"]
    known = {"n", "k", "m", "field", "mode", "delivery", "drop", "table_length", "deadline", "trials", "master_seed"}
    unknown = set(sc) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")

    def opt_int(key: str) -> Optional[int]:
        raw = sc.get(key, "").strip()
        return int(raw, 0) if raw else None

    try:
        cfg = ScenarioConfig(
            n=int(sc.get("n", "3")), k=int(sc.get("k", "2")), m=int(sc.get("m", "1")),
            field=sc.get("field", "gf16").strip(), mode=sc.get("mode", "skeleton").strip(),
            delivery=sc.get("delivery", "in-order").strip(),
            drop=frozenset(sc.get("drop", "").replace(",", " ").split()),
            table_length=opt_int("table_length"), deadline=opt_int("deadline"),
            trials=int(sc.get("trials", "1")), master_seed=int(sc.get("master_seed", "0")),
        )
    except ValueError as exc:
        raise ConfigError(f"bad scenario value: {exc}") from None
    adv = AdversaryConfig()
    if cp.has_section("adversary"):
        a = cp["adversary"]
        try:
            adv.compromised = frozenset(_parse_ints(a.get("compromised", "")))
        except ValueError as exc:
            raise ConfigError(f"bad compromised list: {exc}") from None
        adv.mode = a.get("mode", "passive").strip()
        adv.hub_behaviour = a.get("hub_behaviour", "faithful").strip()
        try:
            params = cfg.params
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        adv.attack = _parse_attack(a.get("attack", ""), params)
    if cp.has_section("channels"):
        adv.channel_policy = {k.strip(): v.strip() for k, v in cp["channels"].items()}
    cfg.adversary = adv
    cfg.validate()
    return cfg


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
