"""Eve: compromised hubs, channel policies and the share-shift attack.

Link names are ``"A->P3"`` for Alice-to-hub channels and ``"P3->B"`` for
hub-to-Bob channels, using hub indices.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .sharing import ThresholdParams, share_delta_for
from . import wire

FAITHFUL = "faithful"
BLOCK = "block"
RANDOM = "random"
MODES = ("passive", "active")
HUB_BEHAVIOURS = ("faithful", "random-shift")


class AdversaryError(ValueError):
    pass


class _Blocked:
    def __repr__(self) -> str:
        return "Blocked"


Blocked = _Blocked()


def alice_link(i: int) -> str:
    return f"A->P{i}"


def bob_link(i: int) -> str:
    return f"P{i}->B"


def parse_policy(text: str) -> Tuple:
    """``faithful`` | ``block`` | ``random`` | ``flip:<byte>:<mask>``."""
    text = text.strip()
    if text in (FAITHFUL, BLOCK, RANDOM):
        return (text,)
    if text.startswith("flip:"):
        try:
            _, pos, mask = text.split(":")
            pos_i, mask_i = int(pos, 0), int(mask, 0)
        except ValueError:
            raise AdversaryError(f"bad flip policy {text!r}; want flip:<byte>:<mask>") from None
        if not 1 <= mask_i <= 255 or pos_i < 0:
            raise AdversaryError(f"flip mask must be 1..255 and position >= 0: {text!r}")
        return ("flip", pos_i, mask_i)
    raise AdversaryError(f"unknown channel policy {text!r}")


@lru_cache(maxsize=256)
def _share_delta(params, keep, target, secret_delta):
    return share_delta_for(params, keep, target, secret_delta)


@dataclass(frozen=True)
class BestKnownAttack:
    """Shift the reconstructed secret by ``secret_delta`` through compromised hub ``target``.

    ``keep`` is the k-subset whose reconstruction Eve is steering; links
    from the other hubs to Bob are cut (skeleton mode) or scrambled
    (general mode) so that only that subset completes. ``tag_delta`` is
    added to o at every compromised hub in ``keep``.
    """

    target: int
    secret_delta: Tuple[int, ...]
    keep: Tuple[int, ...]
    tag_delta: int = 0

    def validate(self, params: ThresholdParams, compromised: FrozenSet[int]) -> None:
        if self.target not in compromised:
            raise AdversaryError(f"attack target {self.target} is not compromised")
        if len(self.secret_delta) != params.width:
            raise AdversaryError(f"secret delta needs {params.width} elements")
        if not any(self.secret_delta) and not self.tag_delta:
            raise AdversaryError("attack delta must be nonzero")
        if self.target not in self.keep or len(set(self.keep)) != params.k:
            raise AdversaryError("keep must be k distinct hubs including the target")
        if self.tag_delta and not set(self.keep) <= compromised:
            raise AdversaryError("a tag shift needs every hub in keep compromised")
        for v in (*self.secret_delta, self.tag_delta):
            params.spec.check(v)

    def share_delta(self, params: ThresholdParams) -> Tuple[int, ...]:
        return _share_delta(params, tuple(sorted(self.keep)), self.target, self.secret_delta)

    def cut_links(self, params: ThresholdParams) -> List[str]:
        return [bob_link(i) for i in range(1, params.n + 1) if i not in self.keep]


@dataclass
class AdversaryConfig:
    compromised: FrozenSet[int] = frozenset()
    mode: str = "passive"
    channel_policy: Dict[str, str] = field(default_factory=dict)
    attack: Optional[BestKnownAttack] = None
    hub_behaviour: str = "faithful"

    def validate(self, params: ThresholdParams, *, enforce_threshold: bool = True) -> None:
        if self.mode not in MODES:
            raise AdversaryError(f"mode must be one of {MODES}")
        if self.hub_behaviour not in HUB_BEHAVIOURS:
            raise AdversaryError(f"hub behaviour must be one of {HUB_BEHAVIOURS}")
        for i in self.compromised:
            if not 1 <= i <= params.n:
                raise AdversaryError(f"compromised hub {i} outside 1..{params.n}")
        if enforce_threshold and len(self.compromised) > params.k - 1:
            raise AdversaryError(f"|C|={len(self.compromised)} exceeds k-1={params.k - 1}")
        links = {alice_link(i) for i in range(1, params.n + 1)} | {bob_link(i) for i in range(1, params.n + 1)}
        for link, policy in self.channel_policy.items():
            if link not in links:
                raise AdversaryError(f"unknown link {link!r}")
            kind = parse_policy(policy)[0]
            if self.mode == "passive" and kind != FAITHFUL:
                raise AdversaryError(f"passive Eve cannot apply {policy!r} on {link}")
        if self.attack is not None:
            if self.mode != "active":
                raise AdversaryError("scripted attacks need active mode")
            self.attack.validate(params, self.compromised)


def channel_apply(policy: Tuple, data: bytes, rng: random.Random, mode: str = "active"):
    """Delivered bytes, or ``Blocked``."""
    kind = policy[0]
    if kind == FAITHFUL:
        return data
    if mode == "passive":
        raise AdversaryError(f"passive Eve cannot apply {kind!r}")
    if kind == BLOCK:
        return Blocked
    out = bytearray(data)
    if kind == RANDOM:
        pos = rng.randrange(len(out))
        out[pos] ^= rng.randrange(1, 256)
    else:
        _, pos, mask = policy
        if pos >= len(out):
            raise AdversaryError(f"flip position {pos} past message end {len(out)}")
        out[pos] ^= mask
    return bytes(out)


def eve_inject(
    config: AdversaryConfig, hub: int, share: Sequence[int], tag: int
) -> Tuple[Tuple[int, ...], int]:
    if hub not in config.compromised:
        raise AdversaryError(f"hub {hub} is not compromised")
    return tuple(share), tag


@dataclass
class Transit:
    link: str
    data: bytes


class Eve:
    """Event hook owned by the simulator.

    ``transits`` records every channel crossing (o travels in the clear
    there). ``shares`` holds the plaintext share for compromised hubs and
    ``None`` for honest ones; ``tags`` is the o each compromised hub saw.
    """

    def __init__(
        self,
        config: AdversaryConfig,
        params: ThresholdParams,
        rng: random.Random,
        general: bool = False,
        *,
        validate: bool = True,
    ):
        if validate:
            config.validate(params, enforce_threshold=False)
        self.config = config
        self.params = params
        self.rng = rng
        self.general = general
        self.transits: List[Transit] = []
        self.shares: Dict[int, Optional[Tuple[int, ...]]] = {i: None for i in range(1, params.n + 1)}
        self.tags: List[int] = []
        self.tampered: List[str] = []
        attack = config.attack
        self._shift = attack.share_delta(params) if attack else None
        self._cut = set(attack.cut_links(params)) if attack else set()

    def observe_transit(self, link: str, data: bytes) -> None:
        self.transits.append(Transit(link, data))

    def observe_tag(self, tag: int) -> None:
        self.tags.append(tag)

    def link_policy(self, link: str) -> Tuple:
        if link in self.config.channel_policy:
            return parse_policy(self.config.channel_policy[link])
        if link in self._cut:
            return (RANDOM,) if self.general else (BLOCK,)
        return (FAITHFUL,)

    def channel(self, link: str, data: bytes):
        policy = self.link_policy(link)
        out = channel_apply(policy, data, self.rng, self.config.mode)
        if out is not data:
            self.tampered.append(link)
        return out

    def compromised_relay(self, hub: int, share: Tuple[int, ...], secret_tag: int, msg: wire.ProtocolMessage):
        self.shares[hub] = share
        self.observe_tag(secret_tag)
        new_share, new_tag = eve_inject(self.config, hub, share, secret_tag)
        attack = self.config.attack
        if attack is not None:
            if hub == attack.target:
                new_share = tuple(a ^ b for a, b in zip(new_share, self._shift))
            if attack.tag_delta and hub in attack.keep:
                new_tag ^= attack.tag_delta
        elif self.config.hub_behaviour == "random-shift":
            spec = self.params.spec
            delta = [0] * len(share)
            while not any(delta):
                delta = [self.rng.getrandbits(spec.r) for _ in share]
            new_share = tuple(a ^ b for a, b in zip(new_share, delta))
        return new_share, new_tag

    def share_view(self) -> Dict[int, Optional[Tuple[int, ...]]]:
        return dict(self.shares)


def default_attack(params: ThresholdParams, target: int = 1) -> BestKnownAttack:
    """Shift (d, e, first payload element) by (2, 3, 1) through hubs 1..k.

    The validation check then passes exactly when c is a root of
    c^2 + 3c + 2 over the field (two roots), which is the strongest
    c'=0 attack for m=1.
    """
    delta = [0, 2, 3, 1] + [0] * (params.m - 1)
    keep = tuple(range(1, params.k + 1))
    if target not in keep:
        keep = (target,) + keep[1:]
    return BestKnownAttack(target, tuple(delta), tuple(sorted(keep)))


@dataclass
class AttackReport:
    accepted: bool
    wrong_secret: bool
    outcome: str
    secret_b: Optional[Tuple[int, ...]]
    secret_a: Tuple[int, ...]


def run_best_known_attack(config, seed, alice_pads=None, *, validate: bool = True) -> AttackReport:
    """Run one session of ``config`` (which carries the attack) and judge it."""
    from .simnet import run_session

    if not config.adversary.compromised:
        raise AdversaryError("the attack needs at least one compromised hub")
    run = run_session(config, seed, alice_pads, validate=validate)
    secret_a = run.secret_a.s if run.secret_a is not None else ()
    kind = run.kind
    return AttackReport(
        accepted=run.outcome.kind == "secret",
        wrong_secret=kind == "wrong",
        outcome=kind,
        secret_b=run.outcome.value,
        secret_a=secret_a,
    )
