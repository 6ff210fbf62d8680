"""The acceptance suite: one function per criterion, shared by ``dske selftest`` and pytest."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional

from . import estimators, psrd, wire
from .adversary import AdversaryConfig, default_attack
from .field import GF16, GF256, GF2_64, BUILTIN_SPECS
from .sharing import ShareTuple, ThresholdParams, apply_tamper, reconstruct
from .simnet import ScenarioConfig, run_session, run_trials


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    @property
    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number}. {self.title} ({self.seconds:.1f}s / {self.budget:.0f}s): {self.detail}"


def _honest_configs(total: int) -> List[ScenarioConfig]:
    shapes = [(3, 2), (5, 3), (7, 4)]
    base, extra = divmod(total, len(shapes))
    out = []
    for idx, (n, k) in enumerate(shapes):
        compromised = frozenset(range(1, min(n - k, k - 1) + 1))
        adv = AdversaryConfig(compromised, "passive", hub_behaviour="random-shift")
        out.append(ScenarioConfig(n=n, k=k, m=1, field="gf2_64", trials=base + (idx < extra),
                                  master_seed=5000 + idx, adversary=adv))
    return out


def attack_config(field: str = "gf16", mode: str = "skeleton", master_seed: int = 0) -> ScenarioConfig:
    cfg = ScenarioConfig(n=3, k=2, m=1, field=field, mode=mode, master_seed=master_seed)
    cfg.adversary = AdversaryConfig(frozenset({1}), "active", attack=default_attack(cfg.params))
    return cfg


# -- criteria --------------------------------------------------------------

def message_tag_bound() -> tuple:
    reports = [estimators.forgery_bound_exhaustive("gf16", s) for s in (1, 2, 3)]
    ok = all(r.measured == r.bound for r in reports)
    return ok, ", ".join(f"s={s}: {r.measured} vs {r.bound}" for s, r in zip((1, 2, 3), reports))


def secret_validation_bound() -> tuple:
    parts, ok = [], True
    for m in (1, 2):
        r = estimators.secret_validation_bound_exhaustive("gf16", m)
        top = max(c["max"] for c in r.details["classes"].values() if c["max"] is not None)
        ok = ok and r.passed and r.measured <= min((m + 1) / 16, 1) and top >= 1 / 16
        parts.append(f"m={m}: max {r.measured} <= {r.bound}")
    return ok, "; ".join(parts)


def shamir_confidentiality() -> tuple:
    single = estimators.confidentiality_exact("gf16", 3, 2, 1)
    views = [estimators.eve_view_distance("gf16", 3, 2, hub) for hub in (1, 2, 3)]
    worst = max(v.measured for v in views)
    ok = single.measured == 0.0 and worst == 0.0 and all(v.passed for v in views)
    return ok, f"one share: {single.measured}; Eve view (share + o), hubs 1-3: {worst}"


def linearity_oracle(cases: int = 1000, seed: int = 4) -> tuple:
    rng = random.Random(seed)
    spec = GF256
    mismatches = 0
    for _ in range(cases):
        n = rng.randint(2, 12)
        k = rng.randint(1, n)
        m = rng.randint(1, 3)
        params = ThresholdParams(n, k, m, spec)
        subset = sorted(rng.sample(range(1, n + 1), k))
        points = [ShareTuple(i, tuple(rng.getrandbits(8) for _ in range(params.width))) for i in subset]
        tamper = {}
        for i in rng.sample(subset, rng.randint(1, k)):
            tamper[i] = tuple(rng.getrandbits(8) for _ in range(params.width))
        tampered = [ShareTuple(p.index, tuple(a ^ b for a, b in zip(p.elements, tamper.get(p.index, (0,) * params.width))))
                    for p in points]
        expected = tuple(a ^ b for a, b in zip(reconstruct(params, points).elements,
                                                apply_tamper(params, subset, tamper)))
        mismatches += reconstruct(params, tampered).elements != expected
    return mismatches == 0, f"{cases} cases at gf256, {mismatches} mismatches"


def honest_robustness(total: int = 10_000) -> tuple:
    wrong = aborted = other = 0
    parts = []
    for cfg in _honest_configs(total):
        s = run_trials(cfg)
        wrong += s.counts["wrong"]
        aborted += s.counts["abort"]
        other += s.counts["incomplete"] + s.counts["exhausted"]
        parts.append(f"({cfg.n},{cfg.k}) |C|={len(cfg.adversary.compromised)}: {s.counts['success']}/{s.trials}")
    ok = wrong == 0 and aborted == 0 and other == 0
    return ok, f"wrong={wrong} abort={aborted} other={other}; " + ", ".join(parts)


def skeleton_attack(mc_trials: int = 100_000) -> tuple:
    cfg = attack_config("gf16", "skeleton", master_seed=6)
    exact = estimators.skeleton_attack_exhaustive(cfg)
    mc = estimators.monte_carlo_attack(cfg, mc_trials)
    lo, hi = mc.details["ci99"]
    ok = exact.measured <= 0.375 and lo <= exact.measured <= hi
    return ok, (f"exhaustive {exact.details['wrong']}/{exact.trials} = {exact.measured} <= 0.375; "
                f"MC {mc.measured:.5f}, 99% CI [{lo:.5f}, {hi:.5f}]")


def protocol_composition(trials: int = 10_000) -> tuple:
    small = estimators.protocol_epsilon_estimate(attack_config("gf16", "general", master_seed=7), trials)
    big = estimators.protocol_epsilon_estimate(attack_config("gf2_64", "general", master_seed=8), trials)
    ok = small.passed and big.details["bad_events"] == 0
    return ok, (f"gf16 bad rate {small.measured:.4f} <= {small.bound:.4f} + 3 sigma; "
                f"gf2_64 bad events {big.details['bad_events']}/{trials}")


def security_loss_arithmetic() -> tuple:
    bits = estimators.security_loss_bits(99, 50)
    return abs(bits - 95.35) <= 0.01, f"log2 C(99,50) = {bits:.4f}"


def _random_message(rng: random.Random) -> wire.ProtocolMessage:
    spec = rng.choice(list(BUILTIN_SPECS.values()))
    m = rng.randint(1, 4)

    def ident() -> str:
        return "".join(rng.choice("ABPQxyz0123_é") for _ in range(rng.randint(0, 6)))

    elem = lambda: rng.getrandbits(spec.r)  # noqa: E731
    return wire.ProtocolMessage(
        spec, ident(), ident(), ident(), rng.getrandbits(64).to_bytes(8, "big"),
        elem(), tuple(elem() for _ in range(3 + m)), elem(), elem(),
    )


def infrastructure(messages: int = 100_000, seed: int = 9) -> tuple:
    rng = random.Random(seed)
    mismatches = 0
    for _ in range(messages):
        msg = _random_message(rng)
        if wire.decode(wire.encode(msg), msg.spec) != msg:
            mismatches += 1

    double_reads = _psrd_double_reads(rng)

    cfgs = [ScenarioConfig(), attack_config("gf16", "general"),
            ScenarioConfig(n=5, k=3, delivery="seeded-shuffle", field="gf256")]
    diverged = 0
    for cfg in cfgs:
        for s in range(5):
            a, b = run_session(cfg, s), run_session(cfg, s)
            diverged += a.transcript.to_jsonl() != b.transcript.to_jsonl()
    ok = mismatches == 0 and double_reads == 0 and diverged == 0
    return ok, f"wire mismatches {mismatches}/{messages}; PSRD double reads {double_reads}; transcript divergences {diverged}"


def _psrd_double_reads(rng: random.Random, rounds: int = 300) -> int:
    """Random allocate/consume/replay traffic against one table pair; count elements handed out twice."""
    double = 0
    for _ in range(rounds):
        spec = rng.choice([GF16, GF256, GF2_64])
        m = rng.randint(1, 3)
        length = min(spec.order, rng.randint(psrd.block_size(m), 60))
        sender, receiver = psrd.generate_pair(rng, length, ("A", "P1", "up"), spec)
        handed_out = set()
        sent = set()
        offsets = []
        for _ in range(rng.randint(1, 12)):
            try:
                alloc = psrd.allocate_next(sender, m)
            except psrd.Exhausted:
                break
            cells = set(range(alloc.offset, alloc.offset + psrd.block_size(m)))
            double += len(cells & sent)
            sent |= cells
            offsets.append(alloc.offset)
        for _ in range(len(offsets) * 2):
            off = rng.choice(offsets + [rng.randrange(-2, length + 2)])
            try:
                alloc = psrd.consume_at(receiver, off, m)
            except psrd.PsrdError:
                continue
            cells = set(range(alloc.offset, alloc.offset + psrd.block_size(m)))
            double += len(cells & handed_out)
            handed_out |= cells
    return double


CRITERIA: Dict[int, tuple] = {
    1: ("message-tag bound is exact", message_tag_bound, 10),
    2: ("secret-validation bound", secret_validation_bound, 60),
    3: ("sharing confidentiality and Eve-view independence", shamir_confidentiality, 120),
    4: ("linearity oracle", linearity_oracle, 5),
    5: ("honest correctness and robustness", honest_robustness, 60),
    6: ("skeleton attack within epsilon", skeleton_attack, 120),
    7: ("general-protocol composition", protocol_composition, 120),
    8: ("subset security-loss arithmetic", security_loss_arithmetic, 1),
    9: ("infrastructure properties", infrastructure, 60),
}


def run_criterion(number: int) -> CriterionResult:
    title, fn, budget = CRITERIA[number]
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported like one
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    seconds = time.perf_counter() - start
    if seconds > budget:
        ok = False
        detail += f"; over time budget ({seconds:.1f}s > {budget}s)"
    return CriterionResult(number, title, ok, detail, seconds, budget)


def run_all(only: Optional[Iterable[int]] = None, report: Callable[[str], None] = print) -> List[CriterionResult]:
    results = []
    for number in sorted(only or CRITERIA):
        res = run_criterion(number)
        report(res.line)
        results.append(res)
    return results
