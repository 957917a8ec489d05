"""Binary codec for the peer-to-peer session messages.

Every message is a fixed-size frame: magic byte 0x54, a kind byte, the
kind's body, then a CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF) over all
preceding bytes, big-endian. Multi-byte integers are big-endian.

    HELLO  0x01  version(1) left_count(1) right_count(1)          -> 7 bytes
    CALIB  0x02  intensity(1) op(1; 0=propose, 1=confirm)         -> 6 bytes
    TOUCH  0x03  seq(2) timestamp_us(4) mask(7) intensity(1)      -> 18 bytes
    BYE    0x04  (empty)                                          -> 4 bytes

The TOUCH mask field is 56 bits: bit j of mask byte k carries electrode
8k + j, so the field covers layouts up to 56 electrodes and the default
53-electrode layout leaves bits 53-55 as mandatory zero padding.

Decoding arbitrary bytes is safe: every failure raises a distinct
:class:`WireError` subclass and nothing else.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Union

from .layout import TouchMask

MAGIC = 0x54
PROTOCOL_VERSION = 1

KIND_HELLO = 0x01
KIND_CALIB = 0x02
KIND_TOUCH = 0x03
KIND_BYE = 0x04

MASK_FIELD_BITS = 56
TOUCH_LEN = 18
_KIND_LEN = {KIND_HELLO: 7, KIND_CALIB: 6, KIND_TOUCH: TOUCH_LEN, KIND_BYE: 4}
_KIND_NAME = {KIND_HELLO: "HELLO", KIND_CALIB: "CALIB", KIND_TOUCH: "TOUCH", KIND_BYE: "BYE"}


class WireError(ValueError):
    """Base for every codec failure."""


class NotOurProtocol(WireError):
    """First byte is not the protocol magic."""


class TruncatedFrame(WireError):
    """Byte count does not match the message kind's fixed length."""


class CorruptFrame(WireError):
    """CRC check failed."""


class MalformedMask(WireError):
    """TOUCH mask has bits set above the session's electrode count."""


class UnknownKind(WireError):
    """Kind byte is not HELLO/CALIB/TOUCH/BYE."""


class UnencodableMask(WireError):
    """Mask does not fit the 56-bit TOUCH mask field."""


# CRC-16/CCITT-FALSE, table-driven.  crc16(b"123456789") == 0x29B1.
_POLY = 0x1021
_CRC_TABLE = []
for _byte in range(256):
    _reg = _byte << 8
    for _ in range(8):
        _reg = (_reg << 1) ^ _POLY if _reg & 0x8000 else _reg << 1
    _CRC_TABLE.append(_reg & 0xFFFF)


def crc16(data: bytes) -> int:
    crc = 0xFFFF
    for b in data:
        crc = (crc << 8 & 0xFF00) ^ _CRC_TABLE[(crc >> 8) ^ b]
    return crc


@dataclass(frozen=True)
class TouchFrame:
    """One frame's touch report: wrapping seq, microsecond clock, mask, level."""

    seq: int
    timestamp_us: int
    mask: TouchMask
    intensity: int

    def __post_init__(self) -> None:
        if not 0 <= self.seq < 1 << 16:
            raise ValueError(f"seq {self.seq} outside u16")
        if not 0 <= self.timestamp_us < 1 << 32:
            raise ValueError(f"timestamp_us {self.timestamp_us} outside u32")
        if not 0 <= self.intensity <= 255:
            raise ValueError(f"intensity {self.intensity} outside 0..255")


@dataclass(frozen=True)
class Hello:
    left_count: int
    right_count: int
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class Calib:
    intensity: int
    confirm: bool = False


@dataclass(frozen=True)
class Touch:
    frame: TouchFrame


@dataclass(frozen=True)
class Bye:
    pass


Message = Union[Hello, Calib, Touch, Bye]


def _seal(body: bytes) -> bytes:
    return body + struct.pack(">H", crc16(body))


def encode(message: Message) -> bytes:
    """Serialize a message to its fixed wire frame."""
    if isinstance(message, Hello):
        body = struct.pack(">BBBBB", MAGIC, KIND_HELLO, message.version,
                           message.left_count, message.right_count)
    elif isinstance(message, Calib):
        body = struct.pack(">BBBB", MAGIC, KIND_CALIB, message.intensity,
                           1 if message.confirm else 0)
    elif isinstance(message, Touch):
        f = message.frame
        if f.mask.size > MASK_FIELD_BITS:
            raise UnencodableMask(
                f"{f.mask.size}-electrode mask exceeds the {MASK_FIELD_BITS}-bit field")
        body = struct.pack(">BBHI", MAGIC, KIND_TOUCH, f.seq, f.timestamp_us)
        body += f.mask.bits.to_bytes(7, "little") + bytes([f.intensity])
    elif isinstance(message, Bye):
        body = struct.pack(">BB", MAGIC, KIND_BYE)
    else:
        raise TypeError(f"not a wire message: {message!r}")
    return _seal(body)


def decode(data: bytes, total: int = 53) -> Message:
    """Parse one wire frame; ``total`` is the session's electrode count.

    Checks run in order: magic, kind, length, CRC, mask padding. Each
    failure raises its own :class:`WireError` subclass so callers can
    count and classify rejects.
    """
    if len(data) == 0:
        raise TruncatedFrame("empty input")
    if data[0] != MAGIC:
        raise NotOurProtocol(f"bad magic 0x{data[0]:02x}")
    if len(data) < 2:
        raise TruncatedFrame("magic only, no kind byte")
    kind = data[1]
    expected = _KIND_LEN.get(kind)
    if expected is None:
        raise UnknownKind(f"kind byte 0x{kind:02x}")
    if len(data) != expected:
        raise TruncatedFrame(f"{_KIND_NAME[kind]} must be {expected} bytes, got {len(data)}")
    (crc_field,) = struct.unpack(">H", data[-2:])
    if crc16(data[:-2]) != crc_field:
        raise CorruptFrame("CRC mismatch")

    if kind == KIND_HELLO:
        version, left, right = data[2], data[3], data[4]
        return Hello(left_count=left, right_count=right, version=version)
    if kind == KIND_CALIB:
        return Calib(intensity=data[2], confirm=data[3] != 0)
    if kind == KIND_BYE:
        return Bye()

    seq, timestamp_us = struct.unpack(">HI", data[2:8])
    bits = int.from_bytes(data[8:15], "little")
    if total > MASK_FIELD_BITS:
        raise MalformedMask(f"session electrode count {total} exceeds the mask field")
    if bits >> total:
        raise MalformedMask(f"padding bits above electrode {total - 1} are set")
    mask = TouchMask(total, bits)
    return Touch(TouchFrame(seq=seq, timestamp_us=timestamp_us, mask=mask,
                            intensity=data[15]))


def dump_frame(data: bytes, total: int = 53) -> str:
    """Debug rendering: hex plus parsed fields, or the rejection reason."""
    hexes = data.hex(" ")
    try:
        message = decode(data, total)
    except WireError as exc:
        return f"{hexes}\n  rejected: {type(exc).__name__}: {exc}"
    return f"{hexes}\n  {message!r}"
