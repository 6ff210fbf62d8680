"""Polynomial Carter-Wegman hash families.

``tag_message`` authenticates channel messages with a one-time key (c, d);
``tag_secret`` is the secret-authenticating tag keyed by the 3-element
prefix u = (c, d, e) of the reconstructed secret tuple.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .field import FieldError, FieldSpec


@dataclass(frozen=True)
class MessageTagKey:
    spec: FieldSpec
    c: int
    d: int

    def __post_init__(self) -> None:
        self.spec.check(self.c)
        self.spec.check(self.d)


@dataclass(frozen=True)
class SecretTagKey:
    spec: FieldSpec
    c: int
    d: int
    e: int

    def __post_init__(self) -> None:
        for v in (self.c, self.d, self.e):
            self.spec.check(v)

    def as_tuple(self) -> tuple:
        return (self.c, self.d, self.e)


def _horner(spec: FieldSpec, c: int, values: Sequence[int]) -> int:
    # sum_{j=1..s} c^j * values[j-1]
    times_c = spec.multiplier(c)
    acc = 0
    for v in reversed(values):
        acc = times_c(acc ^ v)
    return acc


def _check_values(spec: FieldSpec, values: Sequence[int]) -> None:
    if values and (min(values) < 0 or max(values) >= spec.order):
        bad = next(v for v in values if not 0 <= v < spec.order)
        raise FieldError(f"{bad!r} is not an element of {spec.name}")


def tag_message(key: MessageTagKey, msg: Sequence[int]) -> int:
    """``d + sum_{j=1..s} c^j v_j`` for a non-empty message."""
    if len(msg) == 0:
        raise ValueError("message tag needs at least one element")
    _check_values(key.spec, msg)
    return key.d ^ _horner(key.spec, key.c, msg)


def tag_secret(key: SecretTagKey, secret: Sequence[int]) -> int:
    """``d + c*e + sum_{j=1..m} c^(j+1) y_j`` for a non-empty payload."""
    if len(secret) == 0:
        raise ValueError("secret tag needs at least one element")
    spec = key.spec
    _check_values(spec, secret)
    return key.d ^ spec.mul(key.c, key.e ^ _horner(spec, key.c, secret))
