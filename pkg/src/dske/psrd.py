"""Pre-shared random data tables.

Each (party, hub, direction) pair owns two identical copies of a table.
The sender walks a cursor forward with :func:`allocate_next`; the receiver
consumes blocks at whatever offset a message names with :func:`consume_at`.
Every element is handed out at most once and zeroed afterwards.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import List, Protocol, Tuple

from .field import FieldSpec, spec_by_name
from .sharing import TAG_KEY_LEN

MAGIC = b"DSKE"
FORMAT_VERSION = 0x01
TAG_KEY_ELEMENTS = 2


class PsrdError(Exception):
    pass


class Exhausted(PsrdError):
    pass


class AlreadyUsed(PsrdError):
    pass


class OutOfRange(PsrdError):
    pass


class CorruptTableFile(PsrdError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class EntropySource(Protocol):
    def getrandbits(self, k: int) -> int: ...


def block_size(m: int) -> int:
    """Elements per allocation: share pad (3+m) plus tag key (2)."""
    return TAG_KEY_LEN + m + TAG_KEY_ELEMENTS


OwnerPair = Tuple[str, str, str]


@dataclass
class PsrdAllocation:
    offset: int
    share_pad: Tuple[int, ...]
    tag_key: Tuple[int, int]


@dataclass
class PsrdTable:
    owner_pair: OwnerPair
    spec: FieldSpec
    elements: List[int]
    used: List[bool] = field(default_factory=list)
    next_offset: int = 0

    def __post_init__(self) -> None:
        if not self.used:
            self.used = [False] * len(self.elements)
        if len(self.elements) > self.spec.order:
            raise PsrdError(f"table longer than |F|={self.spec.order} cannot be addressed")

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def unused_count(self) -> int:
        return self.used.count(False)

    def copy(self) -> "PsrdTable":
        return PsrdTable(self.owner_pair, self.spec, list(self.elements), list(self.used), self.next_offset)

    def _take(self, offset: int, m: int) -> PsrdAllocation:
        size = block_size(m)
        block = self.elements[offset : offset + size]
        for j in range(offset, offset + size):
            self.used[j] = True
            self.elements[j] = 0
        pad_len = TAG_KEY_LEN + m
        return PsrdAllocation(offset, tuple(block[:pad_len]), (block[pad_len], block[pad_len + 1]))

    def check_unused(self, offset: int, m: int) -> None:
        """Raise unless the block at ``offset`` exists and is untouched. Never consumes."""
        size = block_size(m)
        if offset < 0 or offset + size > len(self.elements):
            raise OutOfRange(f"block {offset}..{offset + size} overruns table of {len(self.elements)}")
        if any(self.used[offset : offset + size]):
            raise AlreadyUsed(f"elements at offset {offset} already used")

    def can_allocate(self, m: int) -> bool:
        return self.next_offset + block_size(m) <= len(self.elements)


def generate_pair(
    rng: EntropySource, length: int, owner_pair: OwnerPair, spec: FieldSpec
) -> Tuple[PsrdTable, PsrdTable]:
    """Hub copy and client copy of one freshly drawn table."""
    if length <= 0:
        raise PsrdError("table length must be positive")
    if length > spec.order:
        raise PsrdError(f"table length {length} exceeds |F|={spec.order}")
    r, mask = spec.r, spec.order - 1
    pool = rng.getrandbits(r * length)
    values = [(pool >> (r * i)) & mask for i in range(length)]
    return PsrdTable(owner_pair, spec, list(values)), PsrdTable(owner_pair, spec, list(values))


def allocate_next(table: PsrdTable, m: int) -> PsrdAllocation:
    if not table.can_allocate(m):
        raise Exhausted(
            f"{table.owner_pair}: need {block_size(m)} elements at offset {table.next_offset}, "
            f"table has {len(table)}"
        )
    offset = table.next_offset
    try:
        table.check_unused(offset, m)
    except AlreadyUsed as exc:
        raise Exhausted(str(exc)) from None
    alloc = table._take(offset, m)
    table.next_offset = offset + block_size(m)
    return alloc


def consume_at(table: PsrdTable, offset: int, m: int) -> PsrdAllocation:
    table.check_unused(offset, m)
    return table._take(offset, m)


# -- file format -----------------------------------------------------------

def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 255:
        raise PsrdError(f"string too long for table header: {s!r}")
    return bytes([len(raw)]) + raw


def dumps(table: PsrdTable) -> bytes:
    out = bytearray(MAGIC)
    out.append(FORMAT_VERSION)
    out += _pack_str(table.spec.name)
    for part in table.owner_pair:
        out += _pack_str(part)
    out += struct.pack(">I", len(table.elements))
    width = table.spec.byte_width
    for v in table.elements:
        out += v.to_bytes(width, "big")
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptTableFile(f"truncated {what}", min(self.pos, len(self.data)))
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def string(self, what: str) -> str:
        start = self.pos
        (n,) = self.take(1, what)
        try:
            return self.take(n, what).decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptTableFile(f"bad UTF-8 in {what}", start) from None


def loads(data: bytes) -> PsrdTable:
    rd = _Reader(data)
    if rd.take(4, "magic") != MAGIC:
        raise CorruptTableFile("bad magic", 0)
    (version,) = rd.take(1, "version")
    if version != FORMAT_VERSION:
        raise CorruptTableFile(f"unsupported version {version}", 4)
    name_at = rd.pos
    name = rd.string("field name")
    try:
        spec = spec_by_name(name)
    except ValueError:
        raise CorruptTableFile(f"unknown field {name!r}", name_at) from None
    owner = (rd.string("party id"), rd.string("hub id"), rd.string("direction"))
    (count,) = struct.unpack(">I", rd.take(4, "element count"))
    width = spec.byte_width
    elements = []
    for _ in range(count):
        at = rd.pos
        v = int.from_bytes(rd.take(width, "element"), "big")
        if v >= spec.order:
            raise CorruptTableFile(f"element {v:#x} outside {spec.name}", at)
        elements.append(v)
    if rd.pos != len(data):
        raise CorruptTableFile("trailing bytes", rd.pos)
    try:
        return PsrdTable(owner, spec, elements)
    except PsrdError as exc:
        raise CorruptTableFile(str(exc), 0) from None


def save(table: PsrdTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(table))


def load(path) -> PsrdTable:
    with open(path, "rb") as fh:
        return loads(fh.read())
