"""Exhaustive oracles and Monte Carlo estimators for the security bounds.

The exhaustive oracles build their own multiplication table by schoolbook
shift-and-xor from the reduction polynomial, so they do not share code
with the field module they are checking.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .field import FieldSpec, spec_by_name
from .sharing import ShareTuple, ThresholdParams, extend_shares
from .stats import binomial_sigma, clopper_pearson

ENUMERATION_CAP = 1 << 24
NORMALIZATION_TOL = 1e-12


class EnumerationTooLarge(ValueError):
    pass


@dataclass
class BoundReport:
    name: str
    formula: str
    bound: float
    measured: float
    method: str
    passed: bool
    trials: Optional[int] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _spec(spec: Union[str, FieldSpec]) -> FieldSpec:
    return spec_by_name(spec) if isinstance(spec, str) else spec


def _check_cap(points: int, what: str) -> None:
    if points > ENUMERATION_CAP:
        raise EnumerationTooLarge(f"{what}: {points} points exceeds the cap of {ENUMERATION_CAP}")


def schoolbook_table(spec: FieldSpec) -> np.ndarray:
    """q x q product table, built bit by bit."""
    q, r = spec.order, spec.r
    if r > 8:
        raise EnumerationTooLarge(f"{spec.name} is too large for a product table")
    full_poly = (1 << r) | spec.reduction_poly
    table = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(q):
            acc, x = 0, a
            for bit in range(r):
                if (b >> bit) & 1:
                    acc ^= x
                x <<= 1
                if x >> r:
                    x ^= full_poly
            table[a, b] = acc
    return table


def _power_table(mul: np.ndarray, top: int) -> np.ndarray:
    """pw[c, j] = c**j for j in 0..top."""
    q = mul.shape[0]
    pw = np.zeros((q, top + 1), dtype=np.int64)
    pw[:, 0] = 1
    for j in range(1, top + 1):
        pw[:, j] = mul[pw[:, j - 1], np.arange(q)]
    return pw


def _digits(count: int, q: int, width: int) -> np.ndarray:
    idx = np.arange(count, dtype=np.int64)
    return np.stack([(idx // q ** (width - 1 - j)) % q for j in range(width)], axis=1)


# -- statistical distance --------------------------------------------------

Distribution = Union[Mapping[Any, float], Sequence[float], np.ndarray]


def statistical_distance(p: Distribution, q: Distribution) -> float:
    """Half the L1 distance between two distributions on the same support."""
    if isinstance(p, Mapping) or isinstance(q, Mapping):
        if not (isinstance(p, Mapping) and isinstance(q, Mapping)) or set(p) != set(q):
            raise ValueError("distributions must share one support")
        keys = sorted(p, key=repr)
        pa = np.array([p[k] for k in keys], dtype=float)
        qa = np.array([q[k] for k in keys], dtype=float)
    else:
        pa = np.asarray(p, dtype=float).ravel()
        qa = np.asarray(q, dtype=float).ravel()
        if pa.shape != qa.shape:
            raise ValueError("distributions must share one support")
    for arr in (pa, qa):
        if (arr < 0).any() or abs(arr.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("each distribution must be non-negative and sum to 1")
    return float(0.5 * np.abs(pa - qa).sum())


# -- message tag -----------------------------------------------------------

def forgery_bound_exhaustive(
    spec: Union[str, FieldSpec] = "gf16", s: int = 1, observed: Optional[Sequence[int]] = None
) -> BoundReport:
    """Largest P(forged (v*, t*) verifies | (v, t) seen) over all keys (c, d).

    For every observed tag t the consistent keys are enumerated, and every
    v* != v and t* is scored. Past the enumeration cap with s >= |F| the
    worst case is attained by v* = v + (1 at positions 1 and |F|), whose
    difference polynomial c + c^|F| vanishes on the whole field; that
    single v* is checked against every key.
    """
    spec = _spec(spec)
    q = spec.order
    if s < 1:
        raise ValueError("s must be >= 1")
    bound = min(s / q, 1.0)
    formula = f"min(s/|F|, 1) = min({s}/{q}, 1)"
    mul = schoolbook_table(spec)
    pw = _power_table(mul, s)
    v = np.zeros(s, dtype=np.int64) if observed is None else np.asarray(observed, dtype=np.int64)
    if v.shape != (s,):
        raise ValueError(f"observed message must have {s} elements")

    def hash_no_d(msgs: np.ndarray) -> np.ndarray:
        # out[row, c] = sum_j c^j * msgs[row, j-1]
        out = np.zeros((msgs.shape[0], q), dtype=np.int64)
        for j in range(s):
            out ^= mul[pw[None, :, j + 1], msgs[:, j][:, None]]
        return out

    h_v = hash_no_d(v[None, :])[0]
    points = q ** s * q * q
    if points <= ENUMERATION_CAP:
        candidates = _digits(q ** s, q, s)
        h_star = hash_no_d(candidates)
        is_v = (candidates == v).all(axis=1)
        best = 0
        for t in range(q):
            d = t ^ h_v  # the one d per c consistent with tag t
            forged = d[None, :] ^ h_star  # tag of v* under each consistent key
            codes = (np.arange(len(candidates))[:, None] * q + forged).ravel()
            hist = np.bincount(codes, minlength=len(candidates) * q).reshape(len(candidates), q)
            hist[is_v] = 0
            best = max(best, int(hist.max()))
        measured = best / q
        method = "exhaustive"
        details = {"keys": q * q, "forgeries": int((~is_v).sum()) * q, "points": points}
    elif s >= q:
        witness = v.copy()
        witness[0] ^= 1
        witness[q - 1] ^= 1
        diff = hash_no_d(witness[None, :])[0] ^ h_v
        measured = float(np.bincount(diff, minlength=q).max()) / q
        method = "exhaustive-keys(witness)"
        details = {"keys": q * q, "witness_positions": [1, q]}
    else:
        raise EnumerationTooLarge(f"forgery enumeration for s={s} over {spec.name} needs {points} points")
    return BoundReport("message-tag forgery", formula, bound, measured, method, measured == bound,
                       details=details)


# -- secret validation ----------------------------------------------------

def secret_validation_bound_exhaustive(
    spec: Union[str, FieldSpec] = "gf16",
    m: int = 1,
    payloads: Optional[Iterable[Sequence[int]]] = None,
) -> BoundReport:
    """Exact acceptance probability of every additive alteration of (u, S, o).

    The alteration is (c', d', e', y', t') with y' != 0. Given o, d is fixed
    by (c, e), so the probability is over uniform (c, e); d' and t' only
    enter as the difference t' - d', which is maximized over. Each payload S
    is its own enumeration and must fit the cap.
    """
    spec = _spec(spec)
    q = spec.order
    if m < 1:
        raise ValueError("m must be >= 1")
    mul = schoolbook_table(spec)
    pw = _power_table(mul, m + 1)
    if payloads is None:
        if m == 1:
            payloads = [(y,) for y in range(q)]
        else:
            payloads = [tuple(range(3, 3 + m))]
    payloads = [tuple(p) for p in payloads]
    n_attacks = q * q * (q ** m - 1)
    _check_cap(n_attacks * q * q, f"validation enumeration per payload at m={m}")

    y_alts = _digits(q ** m, q, m)[1:]  # y' != 0
    cs = np.repeat(np.arange(q), q)  # (c, e) grid
    es = np.tile(np.arange(q), q)
    bound = min((m + 1) / q, 1.0)
    classes = {
        "c'=0": {"attacks": 0, "max": 0.0, "min": 1.0},
        "c'!=0, depends on C": {"attacks": 0, "max": 0.0, "min": 1.0},
        "c'!=0, constant in C": {"attacks": 0, "max": 0.0, "min": 1.0},
    }
    root_mismatch = 0
    overall = 0.0
    witness = None
    for payload in payloads:
        y = np.asarray(payload, dtype=np.int64)
        base = np.zeros(q, dtype=np.int64)  # sum_j C^{j+1} y_j for each C
        for j in range(m):
            base ^= mul[pw[:, j + 2], y[j]]
        for c_alt in range(q):
            shifted = np.arange(q) ^ c_alt
            yy = y[None, :] ^ y_alts  # (A_y, m)
            moved = np.zeros((len(y_alts), q), dtype=np.int64)  # sum_j (C+c')^{j+1}(y_j+y'_j)
            for j in range(m):
                moved ^= mul[pw[shifted, j + 2][None, :], yy[:, j][:, None]]
            # polynomial part in C, per (e', y'): C e' + moved - base
            e_alts = np.arange(q)
            poly = (mul[np.arange(q)[None, None, :], e_alts[:, None, None]]
                    ^ moved[None, :, :] ^ base[None, None, :])  # (e', y', C)
            const_in_c = (poly == poly[:, :, :1]).all(axis=2)
            lin = mul[c_alt, es][None, None, :] ^ mul[c_alt, e_alts][:, None, None]  # c'E + c'e'
            values = poly[:, :, cs] ^ lin  # (e', y', (C,E))
            rows = values.shape[0] * values.shape[1]
            codes = (np.arange(rows)[:, None] * q + values.reshape(rows, -1)).ravel()
            hist = np.bincount(codes, minlength=rows * q).reshape(rows, q)
            prob = hist.max(axis=1) / (q * q)
            const_flat = const_in_c.ravel()
            if c_alt == 0:
                groups = [("c'=0", np.ones(rows, dtype=bool))]
                # acceptance must equal the largest root count of poly(C) = tau, over q
                roots = np.array([np.bincount(row, minlength=q).max() for row in poly.reshape(rows, q)])
                root_mismatch += int((roots / q != prob).sum())
            else:
                groups = [("c'!=0, depends on C", ~const_flat), ("c'!=0, constant in C", const_flat)]
            for name, mask in groups:
                if not mask.any():
                    continue
                cls = classes[name]
                cls["attacks"] += int(mask.sum())
                cls["max"] = max(cls["max"], float(prob[mask].max()))
                cls["min"] = min(cls["min"], float(prob[mask].min()))
                if name == "c'!=0, constant in C" and witness is None:
                    flat = int(np.flatnonzero(mask)[0])
                    e_alt, y_row = divmod(flat, len(y_alts))
                    witness = {"payload": list(payload), "c'": c_alt, "e'": e_alt,
                               "y'": [int(v) for v in y_alts[y_row]], "probability": float(prob[flat])}
            overall = max(overall, float(prob.max()))
    for cls in classes.values():
        if cls["attacks"] == 0:
            cls["min"] = cls["max"] = None
    achieves = any(c["max"] is not None and c["max"] >= 1 / q for c in classes.values())
    passed = overall <= bound and achieves and root_mismatch == 0
    details = {"payloads": [list(p) for p in payloads], "classes": classes,
               "constant_in_c_witness": witness, "root_count_mismatches": root_mismatch}
    return BoundReport("secret validation", f"min((m+1)/|F|, 1) = min({m + 1}/{q}, 1)",
                       bound, overall, "exhaustive", passed, details=details)


# -- sharing confidentiality ----------------------------------------------

def confidentiality_exact(
    spec: Union[str, FieldSpec] = "gf16", n: int = 3, k: int = 2, observe: int = 1
) -> BoundReport:
    """Max distance from uniform of the secret given any ``observe`` shares."""
    spec = _spec(spec)
    q = spec.order
    if not 1 <= k <= n < q or not 0 <= observe <= n:
        raise ValueError("need 1 <= k <= n < |F| and 0 <= observe <= n")
    _check_cap(q ** k, "polynomial enumeration")
    mul = schoolbook_table(spec)
    coeffs = _digits(q ** k, q, k)  # column 0 is the secret
    points = np.zeros((len(coeffs), n + 1), dtype=np.int64)
    for x in range(n + 1):
        acc = np.zeros(len(coeffs), dtype=np.int64)
        for j in range(k - 1, -1, -1):
            acc = mul[acc, x] ^ coeffs[:, j]
        points[:, x] = acc
    uniform = np.full(q, 1.0 / q)
    worst = 0.0
    for subset in combinations(range(1, n + 1), observe):
        code = np.zeros(len(coeffs), dtype=np.int64)
        for x in subset:
            code = code * q + points[:, x]
        joint = np.bincount(code * q + points[:, 0], minlength=q ** observe * q).reshape(-1, q)
        for row in joint:
            total = row.sum()
            if total:
                worst = max(worst, statistical_distance(row / total, uniform))
    bound = 0.0
    passed = worst == 0.0 if observe < k else True
    return BoundReport(
        "sharing confidentiality", "0 for fewer than k shares", bound, worst, "exhaustive", passed,
        details={"n": n, "k": k, "observe": observe, "polynomials": len(coeffs)},
    )


def _share_counts(params: ThresholdParams, hub: int, coord: int) -> np.ndarray:
    """counts[y0, y_hub] over every pad pair for one coordinate, via the protocol's sharing."""
    q = params.spec.order
    counts = np.zeros((q, q), dtype=np.int64)
    zero = [0] * params.width
    for pads in np.ndindex(*([q] * params.k)):
        first = []
        for i, val in enumerate(pads, start=1):
            row = list(zero)
            row[coord] = int(val)
            first.append(ShareTuple(i, tuple(row)))
        shares, secret = extend_shares(params, first)
        counts[secret.elements[coord], shares[hub - 1].elements[coord]] += 1
    return counts


def eve_view_distance(
    spec: Union[str, FieldSpec] = "gf16", n: int = 3, k: int = 2, compromised: int = 1
) -> BoundReport:
    """Max distance between Eve's (Y_compromised, o) given S = s and given S = s', m = 1.

    Every coordinate of (Y_0, Y_i) is an independent sharing over its own
    pads, so the joint count factorizes per coordinate; o is then folded in
    through the indicator of d + c(e + c*y) = o.
    """
    spec = _spec(spec)
    q = spec.order
    params = ThresholdParams(n, k, 1, spec)
    if k != 2:
        raise EnumerationTooLarge("the Eve-view enumeration handles one compromised hub (k = 2)")
    _check_cap(q ** 6, "Eve view")
    if not 1 <= compromised <= n:
        raise ValueError("compromised hub outside 1..n")
    mul = schoolbook_table(spec)
    n_c, n_d, n_e, n_y = (_share_counts(params, compromised, j) for j in range(4))
    c = np.arange(q)[:, None, None]
    e = np.arange(q)[None, None, :]
    d = np.arange(q)[None, :, None]
    views = []
    for y in range(q):
        tag = d ^ mul[c, e ^ mul[c, y]]  # (c, d, e)
        indicator = (tag[..., None] == np.arange(q)).astype(np.int64)  # (c, d, e, o)
        joint = np.einsum("ca,db,ef,cdeo->abfo", n_c, n_d, n_e, indicator, optimize=True)
        full = joint[..., None] * n_y[y][None, None, None, None, :]
        views.append(full.ravel() / full.sum())
    worst = max(statistical_distance(views[0], v) for v in views[1:])
    marginal = n_y.sum(axis=1)
    uniform = bool((marginal == marginal[0]).all())
    return BoundReport(
        "Eve view independence", "0", 0.0, worst, "exhaustive", worst == 0.0 and uniform,
        details={"n": n, "k": k, "compromised": [compromised], "secret_uniform": uniform,
                 "secret_counts": [int(v) for v in marginal]},
    )


# -- protocol level --------------------------------------------------------

def skeleton_epsilon(n: int, k: int, m: int, q: int) -> float:
    return min(math.comb(n, k) * (m + 1) / q, 1.0)


def composed_bound(params: ThresholdParams) -> Dict[str, float]:
    """eps, eps' (for the longest tagged message) and min(eps + 2n*eps', 1)."""
    from .simnet import ALICE, BOB, hub_id
    from .wire import tagged_length

    q = params.spec.order
    eps = skeleton_epsilon(params.n, params.k, params.m, q)
    s = max(tagged_length(params.spec, (hub_id(i), ALICE, BOB), params.m) for i in range(1, params.n + 1))
    eps_tag = min(s / q, 1.0)
    return {"epsilon": eps, "epsilon_tag": eps_tag, "s": s, "bound": min(eps + 2 * params.n * eps_tag, 1.0)}


def protocol_epsilon_estimate(config, trials: Optional[int] = None) -> BoundReport:
    """Bad-event rate S^B not in {S^A, abort} against eps + 2n*eps' + 3 sigma."""
    from .simnet import run_trials

    params = config.params
    total = config.trials if trials is None else trials
    summary = run_trials(config, total)
    parts = composed_bound(params)
    eps, eps_tag, s, bound = parts["epsilon"], parts["epsilon_tag"], parts["s"], parts["bound"]
    bad = summary.counts["wrong"]
    rate = bad / total
    sigma = binomial_sigma(rate, total)
    passed = rate <= bound + 3 * sigma
    details = {
        "epsilon": eps, "epsilon_tag": eps_tag, "s": s, "bad_events": bad,
        "sigma": sigma, "counts": summary.counts, "ci99": list(summary.intervals["wrong"]),
        "tampered_total": summary.tampered_total, "tampered_accepted": summary.tampered_accepted,
        "config": summary.config,
    }
    if summary.tampered_total:
        forge_rate = summary.tampered_accepted / summary.tampered_total
        forge_sigma = binomial_sigma(forge_rate, summary.tampered_total)
        details["forgery_rate"] = forge_rate
        passed = passed and forge_rate <= eps_tag + 3 * forge_sigma
    return BoundReport(
        "protocol composition", f"min(eps + 2n*eps', 1), eps={eps:.6g}, eps'={eps_tag:.6g}, n={params.n}",
        bound, rate, f"monte-carlo({total})", passed, trials=total, details=details,
    )


def skeleton_attack_exhaustive(config, pad_seed: int = 0) -> BoundReport:
    """Run the configured attack once per secret tuple Y_0 in F^(3+m).

    Hub 1's pad stays fixed and hub 2's pad is solved so that Y_0 takes
    each value exactly once. Needs k = 2.
    """
    import random as _random

    from .adversary import run_best_known_attack

    params = config.params
    spec = params.spec
    q, width = spec.order, params.width
    if params.k != 2:
        raise ValueError("exhaustive secret enumeration is implemented for k = 2")
    _check_cap(q ** width, "secret tuples")
    from .sharing import lagrange_at

    coeff = lagrange_at(params, (1, 2), 0)
    rng = _random.Random(pad_seed)
    pad1 = [rng.getrandbits(spec.r) for _ in range(width)]
    inv2 = spec.inv(coeff[2])
    config.validate()
    wrong = accepted = 0
    total = q ** width
    for y0 in np.ndindex(*([q] * width)):
        pad2 = [spec.mul(inv2, int(y) ^ spec.mul(coeff[1], p1)) for y, p1 in zip(y0, pad1)]
        report = run_best_known_attack(config, f"exhaustive:{pad_seed}", {1: pad1, 2: pad2}, validate=False)
        wrong += report.wrong_secret
        accepted += report.accepted
    eps = skeleton_epsilon(params.n, params.k, params.m, q)
    rate = wrong / total
    return BoundReport(
        "skeleton attack", f"min(C(n,k)(m+1)/|F|, 1) = {eps}", eps, rate, "exhaustive", rate <= eps,
        trials=total, details={"wrong": wrong, "accepted": accepted, "secret_tuples": total},
    )


def monte_carlo_attack(config, trials: int) -> BoundReport:
    from .simnet import run_trials

    params = config.params
    summary = run_trials(config, trials)
    eps = skeleton_epsilon(params.n, params.k, params.m, params.spec.order)
    wrong = summary.counts["wrong"]
    lo, hi = summary.intervals["wrong"]
    return BoundReport(
        "skeleton attack", f"min(C(n,k)(m+1)/|F|, 1) = {eps}", eps, wrong / trials,
        f"monte-carlo({trials})", lo <= eps, trials=trials,
        details={"counts": summary.counts, "ci99": [lo, hi]},
    )


# -- misc ------------------------------------------------------------------

def security_loss_bits(n: int, k: int) -> float:
    """log2 C(n, k): bits lost to trying every k-subset."""
    return math.log2(math.comb(n, k))


def ci_width(successes: int, trials: int, confidence: float = 0.99) -> float:
    lo, hi = clopper_pearson(successes, trials, confidence)
    return hi - lo
