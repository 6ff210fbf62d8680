"""Shamir (n, k) sharing run element-wise over (3+m)-element tuples.

Share i sits at x_i = g(i); the secret tuple sits at x_0 = 0. Shares
1..k are supplied by the caller (in the protocol they are PSRD pads) and
the remaining shares and the secret are obtained by interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

from .field import FieldSpec
from .wegman import SecretTagKey

SECRET_INDEX = 0
TAG_KEY_LEN = 3


class SharingError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdParams:
    n: int
    k: int
    m: int
    spec: FieldSpec

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.n < self.spec.order:
            raise SharingError(f"need 1 <= k <= n < |F|, got k={self.k} n={self.n}")
        if self.m < 1:
            raise SharingError("secret payload length m must be >= 1")

    @property
    def width(self) -> int:
        """Elements per share tuple: 3 tag-key elements plus m payload."""
        return TAG_KEY_LEN + self.m

    def x(self, i: int) -> int:
        if not 0 <= i <= self.n:
            raise SharingError(f"index {i} outside 0..{self.n}")
        return i

    def subsets(self) -> Iterable[Tuple[int, ...]]:
        return combinations(range(1, self.n + 1), self.k)


@dataclass(frozen=True)
class ShareTuple:
    index: int
    elements: Tuple[int, ...]


@dataclass(frozen=True)
class SecretTuple:
    u: Tuple[int, int, int]
    s: Tuple[int, ...]

    @property
    def elements(self) -> Tuple[int, ...]:
        return self.u + self.s

    def tag_key(self, spec: FieldSpec) -> SecretTagKey:
        return SecretTagKey(spec, *self.u)

    @classmethod
    def from_elements(cls, elements: Sequence[int]) -> "SecretTuple":
        elements = tuple(elements)
        return cls(elements[:TAG_KEY_LEN], elements[TAG_KEY_LEN:])


@lru_cache(maxsize=4096)
def _multiplier(spec: FieldSpec, c: int) -> Callable[[int], int]:
    return spec.multiplier(c)


@lru_cache(maxsize=8192)
def _basis(spec: FieldSpec, subset: Tuple[int, ...], target: int) -> Tuple[int, ...]:
    coeffs = []
    for i in subset:
        num = den = 1
        for j in subset:
            if j == i:
                continue
            num = spec.mul(num, target ^ j)
            den = spec.mul(den, i ^ j)
        coeffs.append(spec.mul(num, spec.inv(den)))
    return tuple(coeffs)


def _check_subset(params: ThresholdParams, subset: Iterable[int]) -> Tuple[int, ...]:
    subset = tuple(subset)
    if len(set(subset)) != len(subset):
        raise SharingError(f"duplicate indices in {subset}")
    if len(subset) != params.k:
        raise SharingError(f"need exactly k={params.k} indices, got {len(subset)}")
    for i in subset:
        if not 1 <= i <= params.n:
            raise SharingError(f"share index {i} outside 1..{params.n}")
    return tuple(sorted(subset))


def lagrange_at(params: ThresholdParams, subset: Iterable[int], target: int) -> Dict[int, int]:
    """L_i(target) for each i in the subset."""
    subset = _check_subset(params, subset)
    params.spec.check(target)
    return dict(zip(subset, _basis(params.spec, subset, target)))


def _combine(spec: FieldSpec, coeffs: Sequence[int], rows: Sequence[Sequence[int]]) -> Tuple[int, ...]:
    out = [0] * len(rows[0])
    for c, row in zip(coeffs, rows):
        times_c = _multiplier(spec, c)
        for j, y in enumerate(row):
            out[j] ^= times_c(y)
    return tuple(out)


def _check_tuple(params: ThresholdParams, elements: Sequence[int]) -> None:
    if len(elements) != params.width:
        raise SharingError(f"share tuple must have {params.width} elements, got {len(elements)}")
    order = params.spec.order
    for v in elements:
        if not 0 <= v < order:
            raise SharingError(f"{v!r} is not an element of {params.spec.name}")


def extend_shares(
    params: ThresholdParams, first_k: Sequence[ShareTuple]
) -> Tuple[List[ShareTuple], SecretTuple]:
    """Interpolate through shares 1..k; return all n shares and the secret tuple."""
    if len(first_k) != params.k:
        raise SharingError(f"need exactly k={params.k} initial shares, got {len(first_k)}")
    by_index = {s.index: s for s in first_k}
    base = tuple(range(1, params.k + 1))
    if sorted(by_index) != list(base):
        raise SharingError("initial shares must carry indices 1..k")
    for s in first_k:
        _check_tuple(params, s.elements)
    rows = [by_index[i].elements for i in base]
    spec = params.spec
    shares = [by_index[i] for i in base]
    for i in range(params.k + 1, params.n + 1):
        shares.append(ShareTuple(i, _combine(spec, _basis(spec, base, params.x(i)), rows)))
    secret = _combine(spec, _basis(spec, base, params.x(SECRET_INDEX)), rows)
    return shares, SecretTuple.from_elements(secret)


def reconstruct(params: ThresholdParams, points: Sequence[ShareTuple]) -> SecretTuple:
    """Secret tuple from any k shares: sum of y_i * L_i(x_0)."""
    subset = _check_subset(params, (p.index for p in points))
    by_index = {p.index: p for p in points}
    for p in points:
        _check_tuple(params, p.elements)
    rows = [by_index[i].elements for i in subset]
    coeffs = _basis(params.spec, subset, params.x(SECRET_INDEX))
    return SecretTuple.from_elements(_combine(params.spec, coeffs, rows))


def apply_tamper(
    params: ThresholdParams, subset: Iterable[int], tamper: Mapping[int, Sequence[int]]
) -> Tuple[int, ...]:
    """Shift of the reconstructed secret caused by adding ``tamper[i]`` to share i."""
    subset = _check_subset(params, subset)
    coeffs = dict(zip(subset, _basis(params.spec, subset, params.x(SECRET_INDEX))))
    shift = [0] * params.width
    for i, delta in tamper.items():
        if i not in coeffs:
            raise SharingError(f"tampered index {i} not in subset {subset}")
        _check_tuple(params, delta)
        times_c = _multiplier(params.spec, coeffs[i])
        for j, y in enumerate(delta):
            shift[j] ^= times_c(y)
    return tuple(shift)


def share_delta_for(
    params: ThresholdParams, subset: Iterable[int], target: int, secret_delta: Sequence[int]
) -> Tuple[int, ...]:
    """Per-element delta for share ``target`` that moves the secret by ``secret_delta``."""
    coeff = lagrange_at(params, subset, 0)
    if target not in coeff:
        raise SharingError(f"target {target} not in subset")
    times_inv = _multiplier(params.spec, params.spec.inv(coeff[target]))
    return tuple(times_inv(y) for y in secret_delta)


def consistent(params: ThresholdParams, shares: Sequence[ShareTuple]) -> bool:
    """True iff all given shares lie on one polynomial of degree < k per element."""
    if len(shares) <= params.k:
        return True
    ordered = sorted(shares, key=lambda s: s.index)
    head, tail = ordered[: params.k], ordered[params.k :]
    subset = tuple(s.index for s in head)
    rows = [s.elements for s in head]
    for s in tail:
        if _combine(params.spec, _basis(params.spec, subset, params.x(s.index)), rows) != s.elements:
            return False
    return True
