"""Arithmetic in GF(2^r) for 1 <= r <= 64.

Elements are coefficient bitmasks. Inside the protocol code elements are
handled as plain ints that belong to the ``FieldSpec`` of the enclosing
object; :class:`FieldElement` is the checked wrapper used at API edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional

MAX_BITS = 64
EXHAUSTIVE_CHECK_BITS = 16

# Reduction polynomials for r > EXHAUSTIVE_CHECK_BITS, degree-r term implicit.
# Taken from standard low-weight irreducible trinomial/pentanomial tables.
_TRUSTED_POLYS = {
    32: 0x8D,  # x^32 + x^7 + x^3 + x^2 + 1
    64: 0x1B,  # x^64 + x^4 + x^3 + x + 1
}


class FieldError(ValueError):
    """Raised for invalid field specs, foreign elements, or domain errors."""


def clmul(a: int, b: int) -> int:
    """Carry-less product of two non-negative ints (schoolbook)."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def poly_mod(a: int, m: int) -> int:
    """Remainder of polynomial ``a`` divided by ``m`` over GF(2)."""
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def is_irreducible(full_poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree <= r/2."""
    r = full_poly.bit_length() - 1
    if r < 1:
        return False
    if r == 1:
        return True
    if not full_poly & 1:
        return False
    for d in range(2, 1 << (r // 2 + 1)):
        if poly_mod(full_poly, d) == 0:
            return False
    return True


# byte -> 8 bytes holding its bits (MSB first), used by the spread multiply
_TO_01 = bytes.maketrans(b"01", b"\x00\x01")
_PARITY_ASCII = bytes(0x30 | (v & 1) for v in range(256))


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """GF(2^r) defined by ``x^r + reduction_poly``.

    ``reduction_poly`` holds the low r coefficients; the x^r term is implicit.
    """

    r: int
    reduction_poly: int
    name: str
    _mul_table: Optional[List[List[int]]] = field(default=None, init=False, repr=False)
    _log: Optional[List[int]] = field(default=None, init=False, repr=False)
    _exp: Optional[List[int]] = field(default=None, init=False, repr=False)
    order: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 1 <= self.r <= MAX_BITS:
            raise FieldError(f"bit width {self.r} outside 1..{MAX_BITS}")
        if not 0 <= self.reduction_poly < (1 << self.r):
            raise FieldError("reduction_poly must hold only the low r coefficients")
        full = (1 << self.r) | self.reduction_poly
        if self.r <= EXHAUSTIVE_CHECK_BITS:
            if not is_irreducible(full):
                raise FieldError(f"{self.name}: x^{self.r}+{self.reduction_poly:#x} is reducible")
        elif _TRUSTED_POLYS.get(self.r) != self.reduction_poly:
            raise FieldError(f"{self.name}: no trusted reduction polynomial for r={self.r}")
        taps = [b for b in range(self.r) if (self.reduction_poly >> b) & 1]
        object.__setattr__(self, "_taps", tuple(taps))
        object.__setattr__(self, "_mask", (1 << self.r) - 1)
        object.__setattr__(self, "order", 1 << self.r)
        if self.r <= 8:
            self._build_tables(full_table=True)
        elif self.r <= EXHAUSTIVE_CHECK_BITS:
            self._build_tables(full_table=False)

    # -- identity -------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldSpec):
            return NotImplemented
        return self.r == other.r and self.reduction_poly == other.reduction_poly

    def __hash__(self) -> int:
        return hash((self.r, self.reduction_poly))

    @property
    def byte_width(self) -> int:
        return (self.r + 7) // 8

    # -- int-level arithmetic ---------------------------------------------
    def _reduce(self, p: int) -> int:
        r, mask, taps = self.r, self._mask, self._taps
        hi = p >> r
        while hi:
            p &= mask
            for t in taps:
                p ^= hi << t
            hi = p >> r
        return p

    def _slow_mul(self, a: int, b: int) -> int:
        return self._reduce(clmul(a, b))

    def _build_tables(self, full_table: bool) -> None:
        q = self.order
        # find a generator of the multiplicative group
        gen = None
        for cand in range(2, q) if q > 2 else [1]:
            x, n = 1, 0
            while True:
                x = self._slow_mul(x, cand)
                n += 1
                if x == 1:
                    break
            if n == q - 1:
                gen = cand
                break
        exp = [0] * (2 * (q - 1))
        log = [0] * q
        x = 1
        for i in range(q - 1):
            exp[i] = x
            log[x] = i
            x = self._slow_mul(x, gen)
        for i in range(q - 1, 2 * (q - 1)):
            exp[i] = exp[i - (q - 1)]
        object.__setattr__(self, "_exp", exp)
        object.__setattr__(self, "_log", log)
        if full_table:
            table = [[0] * q]
            for a in range(1, q):
                la = log[a]
                table.append([0] + [exp[la + log[b]] for b in range(1, q)])
            object.__setattr__(self, "_mul_table", table)

    @staticmethod
    def _spread(a: int) -> int:
        # one bit per byte so a plain integer product cannot carry between columns
        return int.from_bytes(format(a, "064b").encode().translate(_TO_01), "big")

    def _spread_mul(self, spread_a: int, b: int) -> int:
        p = spread_a * self._spread(b)
        return self._reduce(int(p.to_bytes(128, "big").translate(_PARITY_ASCII), 2))

    def mul(self, a: int, b: int) -> int:
        if self._mul_table is not None:
            return self._mul_table[a][b]
        if self._log is not None:
            if a == 0 or b == 0:
                return 0
            return self._exp[self._log[a] + self._log[b]]
        if a == 0 or b == 0:
            return 0
        return self._spread_mul(self._spread(a), b)

    def multiplier(self, c: int) -> Callable[[int], int]:
        """Return ``y -> c*y``, precomputing whatever depends on ``c`` alone."""
        if self._mul_table is not None:
            return self._mul_table[c].__getitem__
        if self._log is not None:
            if c == 0:
                return lambda y: 0
            exp, log, lc = self._exp, self._log, self._log[c]
            return lambda y: exp[lc + log[y]] if y else 0
        if c == 0:
            return lambda y: 0
        sc = self._spread(c)
        r, mask, taps = self.r, self._mask, self._taps
        width, nbytes = f"0{r}b", 2 * r

        def times_c(y: int) -> int:
            if not y:
                return 0
            spread_y = int.from_bytes(format(y, width).encode().translate(_TO_01), "big")
            p = int((sc * spread_y).to_bytes(nbytes, "big").translate(_PARITY_ASCII), 2)
            hi = p >> r
            while hi:
                p &= mask
                for t in taps:
                    p ^= hi << t
                hi = p >> r
            return p

        return times_c

    def inv(self, a: int) -> int:
        if a == 0:
            raise FieldError("zero has no multiplicative inverse")
        if self._log is not None:
            return self._exp[(self.order - 1) - self._log[a]]
        return self.pow(a, self.order - 2)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            raise FieldError("negative exponent")
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def check(self, value: int) -> int:
        if not isinstance(value, int) or not 0 <= value < self.order:
            raise FieldError(f"{value!r} is not an element of {self.name}")
        return value

    def element(self, value: int) -> "FieldElement":
        return FieldElement(self.check(value), self)

    def elements(self) -> Iterable["FieldElement"]:
        for v in range(self.order):
            yield FieldElement(v, self)

    # -- serialization -----------------------------------------------------
    def to_bytes(self, value: int) -> bytes:
        return value.to_bytes(self.byte_width, "big")

    def from_bytes(self, data: bytes) -> int:
        if len(data) != self.byte_width:
            raise FieldError("wrong element width")
        return self.check(int.from_bytes(data, "big"))


GF16 = FieldSpec(4, 0x3, "gf16")
GF256 = FieldSpec(8, 0x1B, "gf256")
GF2_64 = FieldSpec(64, 0x1B, "gf2_64")

BUILTIN_SPECS = {spec.name: spec for spec in (GF16, GF256, GF2_64)}


def spec_by_name(name: str) -> FieldSpec:
    try:
        return BUILTIN_SPECS[name]
    except KeyError:
        raise FieldError(f"unknown field {name!r}; known: {sorted(BUILTIN_SPECS)}") from None


@dataclass(frozen=True)
class FieldElement:
    value: int
    spec: FieldSpec

    def __post_init__(self) -> None:
        self.spec.check(self.value)

    def _same(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement):
            raise TypeError(f"expected FieldElement, got {type(other).__name__}")
        if other.spec != self.spec:
            raise FieldError(f"field mismatch: {self.spec.name} vs {other.spec.name}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        return add(self, other)

    __sub__ = __add__

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        return mul(self, other)

    def __pow__(self, e: int) -> "FieldElement":
        return pow_(self, e)

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"{self.spec.name}({self.value:#x})"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    a._same(b)
    return FieldElement(a.value ^ b.value, a.spec)


sub = add


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    a._same(b)
    return FieldElement(a.spec.mul(a.value, b.value), a.spec)


def inv(a: FieldElement) -> FieldElement:
    return FieldElement(a.spec.inv(a.value), a.spec)


def pow_(a: FieldElement, e: int) -> FieldElement:
    """``a**e`` with ``0**0 == 1``."""
    return FieldElement(a.spec.pow(a.value, e), a.spec)


def g_encode(spec: FieldSpec, i: int) -> FieldElement:
    """Integer-to-element map: the identity on bit patterns."""
    if not 0 <= i < spec.order:
        raise FieldError(f"{i} outside 0..{spec.order - 1}")
    return FieldElement(i, spec)


def g_decode(element: FieldElement) -> int:
    return element.value
