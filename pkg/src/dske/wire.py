"""Byte layout of protocol messages and the element sequence they are tagged over.

Layout (version 0x01)::

    version(1) | len(1) hub_id | len(1) sender_id | len(1) receiver_id |
    session_id(8) | g(j) | Z_1..Z_{3+m} | o | t

Every element is big-endian, ceil(r/8) bytes wide. The field is not on the
wire; both ends know it from configuration, and m follows from the length.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

from .field import FieldSpec
from .sharing import TAG_KEY_LEN

WIRE_VERSION = 0x01
SESSION_ID_LEN = 8
# g(j), o and t surround the masked share
_FIXED_ELEMENTS = 3


class Malformed(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolMessage:
    spec: FieldSpec
    hub_id: str
    sender_id: str
    receiver_id: str
    session_id: bytes
    offset: int
    masked_share: Tuple[int, ...]
    secret_tag: int
    msg_tag: int = 0

    @property
    def m(self) -> int:
        return len(self.masked_share) - TAG_KEY_LEN

    @property
    def route(self) -> Tuple[str, str, str]:
        return (self.hub_id, self.sender_id, self.receiver_id)

    def with_tag(self, t: int) -> "ProtocolMessage":
        return ProtocolMessage(
            self.spec, self.hub_id, self.sender_id, self.receiver_id,
            self.session_id, self.offset, self.masked_share, self.secret_tag, t,
        )


@lru_cache(maxsize=1024)
def _id_bytes(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 255:
        raise ValueError(f"identifier longer than 255 bytes: {s[:20]!r}...")
    return raw


def encode(msg: ProtocolMessage) -> bytes:
    if len(msg.session_id) != SESSION_ID_LEN:
        raise ValueError(f"session id must be {SESSION_ID_LEN} bytes")
    if msg.m < 1:
        raise ValueError("masked share must carry at least 3+1 elements")
    spec = msg.spec
    out = bytearray([WIRE_VERSION])
    for ident in (msg.hub_id, msg.sender_id, msg.receiver_id):
        raw = _id_bytes(ident)
        out.append(len(raw))
        out += raw
    out += msg.session_id
    width, order = spec.byte_width, spec.order
    for v in (msg.offset, *msg.masked_share, msg.secret_tag, msg.msg_tag):
        if not 0 <= v < order:
            raise ValueError(f"{v!r} is not an element of {spec.name}")
        out += v.to_bytes(width, "big")
    return bytes(out)


def decode(data: bytes, spec: FieldSpec, m: Optional[int] = None) -> ProtocolMessage:
    if len(data) < 1 or data[0] != WIRE_VERSION:
        raise Malformed("missing or unsupported version byte")
    pos = 1
    ids = []
    for what in ("hub id", "sender id", "receiver id"):
        if pos >= len(data):
            raise Malformed(f"truncated before {what}")
        n = data[pos]
        pos += 1
        if pos + n > len(data):
            raise Malformed(f"truncated {what}")
        try:
            ids.append(data[pos : pos + n].decode("utf-8"))
        except UnicodeDecodeError:
            raise Malformed(f"{what} is not UTF-8") from None
        pos += n
    if pos + SESSION_ID_LEN > len(data):
        raise Malformed("truncated session id")
    session_id = bytes(data[pos : pos + SESSION_ID_LEN])
    pos += SESSION_ID_LEN
    width = spec.byte_width
    rest = len(data) - pos
    if rest % width:
        raise Malformed("element area is not a whole number of elements")
    count = rest // width
    got_m = count - _FIXED_ELEMENTS - TAG_KEY_LEN
    if got_m < 1:
        raise Malformed("truncated element area")
    if m is not None and got_m != m:
        raise Malformed(f"expected m={m}, message carries m={got_m}")
    if width == 1:
        values = list(data[pos:])
    else:
        values = [int.from_bytes(data[p : p + width], "big") for p in range(pos, len(data), width)]
    if max(values) >= spec.order:
        bad = next(v for v in values if v >= spec.order)
        raise Malformed(f"element {bad:#x} outside {spec.name}")
    return ProtocolMessage(
        spec, ids[0], ids[1], ids[2], session_id,
        values[0], tuple(values[1:-2]), values[-2], values[-1],
    )


def _chunk_bits(spec: FieldSpec) -> int:
    if spec.r >= 8:
        return 8
    for b in (4, 2, 1):
        if b <= spec.r:
            return b
    raise AssertionError("unreachable")


_HEX_DIGIT_VALUE = bytes.maketrans(b"0123456789abcdef", bytes(range(16)))


def _pack(data: bytes, bits: int) -> List[int]:
    if bits == 8:
        return list(data)
    if bits == 4:
        return list(data.hex().encode().translate(_HEX_DIGIT_VALUE))
    per_byte = 8 // bits
    mask = (1 << bits) - 1
    out = []
    for byte in data:
        for k in range(per_byte - 1, -1, -1):
            out.append((byte >> (k * bits)) & mask)
    return out


@lru_cache(maxsize=4096)
def _header_elements(bits: int, hub_id: str, sender_id: str, receiver_id: str, session_id: bytes) -> Tuple[int, ...]:
    header = bytearray()
    for ident in (hub_id, sender_id, receiver_id):
        raw = _id_bytes(ident)
        header.append(len(raw))
        header += raw
    header += session_id
    return tuple(_pack(bytes(header), bits))


def message_elements(msg: ProtocolMessage) -> List[int]:
    """Element sequence that the message tag covers (everything except t)."""
    elems = list(_header_elements(
        _chunk_bits(msg.spec), msg.hub_id, msg.sender_id, msg.receiver_id, msg.session_id
    ))
    elems.append(msg.offset)
    elems.extend(msg.masked_share)
    elems.append(msg.secret_tag)
    return elems


def tagged_length(spec: FieldSpec, ids: Tuple[str, str, str], m: int) -> int:
    """s, the number of elements tagged for a message with these ids and m."""
    per_byte = 8 // _chunk_bits(spec)
    header = sum(1 + len(_id_bytes(i)) for i in ids) + SESSION_ID_LEN
    return header * per_byte + 1 + TAG_KEY_LEN + m + 1
