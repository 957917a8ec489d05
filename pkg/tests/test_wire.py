"""Wire codec tests: golden bytes, round-trips, CRC rejection, fuzzing."""

import random

import pytest
from hypothesis import given, strategies as st

from teledge.layout import TouchMask
from teledge.wire import (Bye, Calib, CorruptFrame, Hello, MalformedMask,
                          NotOurProtocol, Touch, TouchFrame, TruncatedFrame,
                          UnencodableMask, UnknownKind, WireError, crc16, decode,
                          dump_frame, encode)


def crc16_bitwise(data: bytes) -> int:
    """Independent bit-serial CRC-16/CCITT-FALSE for cross-checking."""
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021 if crc & 0x8000 else crc << 1) & 0xFFFF
    return crc


def reparse_touch(data: bytes) -> tuple:
    """Field-by-field TOUCH re-parser, independent of the codec internals."""
    assert len(data) == 18
    assert data[0] == 0x54 and data[1] == 0x03
    seq = data[2] << 8 | data[3]
    timestamp = data[4] << 24 | data[5] << 16 | data[6] << 8 | data[7]
    electrodes = tuple(8 * k + j for k in range(7) for j in range(8)
                       if data[8 + k] >> j & 1)
    intensity = data[15]
    crc = data[16] << 8 | data[17]
    return seq, timestamp, electrodes, intensity, crc


def random_message(rng: random.Random, total: int = 53):
    kind = rng.randrange(4)
    if kind == 0:
        return Hello(left_count=rng.randrange(256), right_count=rng.randrange(256),
                     version=rng.randrange(256))
    if kind == 1:
        return Calib(intensity=rng.randrange(256), confirm=rng.random() < 0.5)
    if kind == 2:
        return Bye()
    return Touch(TouchFrame(seq=rng.getrandbits(16), timestamp_us=rng.getrandbits(32),
                            mask=TouchMask(total, rng.getrandbits(total)),
                            intensity=rng.randrange(256)))


# -- CRC ----------------------------------------------------------------------

def test_crc16_standard_check_value():
    assert crc16(b"123456789") == 0x29B1


def test_crc16_matches_bitwise_oracle():
    rng = random.Random(0xC4C)
    for _ in range(200):
        data = rng.randbytes(rng.randrange(0, 64))
        assert crc16(data) == crc16_bitwise(data)


# -- golden frames -------------------------------------------------------------

def test_all_zero_touch_frame_bytes():
    frame = TouchFrame(seq=0, timestamp_us=0, mask=TouchMask.empty(53), intensity=0)
    data = encode(Touch(frame))
    body = bytes([0x54, 0x03] + [0] * 14)
    assert data[:16] == body
    assert len(data) == 18
    crc = data[16] << 8 | data[17]
    assert crc == crc16_bitwise(body)


def test_mask_bit_zero_lands_in_byte_eight():
    frame = TouchFrame(seq=0, timestamp_us=0,
                       mask=TouchMask.from_indices(53, [0]), intensity=0)
    assert encode(Touch(frame))[8] == 0x01


def test_mask_bit_placement_formula():
    # bit j of byte 8+k carries electrode 8k + j
    for electrode in (0, 7, 8, 15, 16, 31, 52):
        frame = TouchFrame(seq=0, timestamp_us=0,
                           mask=TouchMask.from_indices(53, [electrode]), intensity=0)
        data = encode(Touch(frame))
        k, j = divmod(electrode, 8)
        for byte_index in range(7):
            expected = (1 << j) if byte_index == k else 0
            assert data[8 + byte_index] == expected


def test_frame_lengths_per_kind():
    assert len(encode(Hello(21, 32))) == 7
    assert len(encode(Calib(100))) == 6
    assert len(encode(Bye())) == 4


def test_big_endian_integer_fields():
    frame = TouchFrame(seq=0x1234, timestamp_us=0xDEADBEEF,
                       mask=TouchMask.empty(53), intensity=0x7F)
    data = encode(Touch(frame))
    assert data[2:4] == bytes([0x12, 0x34])
    assert data[4:8] == bytes([0xDE, 0xAD, 0xBE, 0xEF])
    assert data[15] == 0x7F


# -- round-trips -----------------------------------------------------------------

def test_round_trip_10k_random_messages():
    rng = random.Random(0x70C4)
    for _ in range(10_000):
        message = random_message(rng)
        data = encode(message)
        assert decode(data, 53) == message
        if isinstance(message, Touch):
            seq, timestamp, electrodes, intensity, crc = reparse_touch(data)
            frame = message.frame
            assert (seq, timestamp, electrodes, intensity) == (
                frame.seq, frame.timestamp_us, frame.mask.indices(), frame.intensity)
            assert crc == crc16_bitwise(data[:16])


@given(st.integers(0, 0xFFFF), st.integers(0, 0xFFFFFFFF),
       st.integers(0, (1 << 53) - 1), st.integers(0, 255))
def test_touch_round_trip_property(seq, timestamp, bits, intensity):
    frame = TouchFrame(seq=seq, timestamp_us=timestamp,
                       mask=TouchMask(53, bits), intensity=intensity)
    assert decode(encode(Touch(frame)), 53) == Touch(frame)


def test_non_default_layout_round_trip():
    frame = TouchFrame(seq=1, timestamp_us=2, mask=TouchMask.from_indices(10, [9]),
                       intensity=3)
    message = decode(encode(Touch(frame)), 10)
    assert message == Touch(frame)


# -- rejection ------------------------------------------------------------------

def test_every_single_bit_flip_is_rejected():
    frame = TouchFrame(seq=0x0102, timestamp_us=0x03040506,
                       mask=TouchMask.from_indices(53, [0, 9, 44]), intensity=200)
    data = encode(Touch(frame))
    for bit in range(len(data) * 8):
        flipped = bytearray(data)
        flipped[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(WireError):
            decode(bytes(flipped), 53)


def test_empty_input_is_truncated():
    with pytest.raises(TruncatedFrame):
        decode(b"", 53)


def test_bad_magic():
    with pytest.raises(NotOurProtocol):
        decode(b"\x55\x03" + bytes(16), 53)


def test_magic_only_is_truncated():
    with pytest.raises(TruncatedFrame):
        decode(b"\x54", 53)


def test_unknown_kind():
    with pytest.raises(UnknownKind):
        decode(b"\x54\x07" + bytes(16), 53)


def test_wrong_length_for_kind():
    data = encode(Bye())
    with pytest.raises(TruncatedFrame):
        decode(data + b"\x00", 53)
    with pytest.raises(TruncatedFrame):
        decode(encode(Calib(7))[:-1], 53)


def test_crc_mismatch_is_corrupt():
    data = bytearray(encode(Hello(21, 32)))
    data[-1] ^= 0xFF
    with pytest.raises(CorruptFrame):
        decode(bytes(data), 53)


def test_padding_bits_rejected():
    # a frame valid for 56 electrodes has bits 53..55 set; with the default
    # 53-electrode session those are padding and must be zero
    frame = TouchFrame(seq=0, timestamp_us=0,
                       mask=TouchMask.from_indices(56, [53, 55]), intensity=0)
    data = encode(Touch(frame))
    with pytest.raises(MalformedMask):
        decode(data, 53)
    assert decode(data, 56) == Touch(frame)


def test_oversized_mask_unencodable():
    frame = TouchFrame(seq=0, timestamp_us=0, mask=TouchMask.empty(57), intensity=0)
    with pytest.raises(UnencodableMask):
        encode(Touch(frame))


def test_fuzz_decoder_never_crashes():
    rng = random.Random(0xF022)
    rejected = 0
    for _ in range(30_000):
        data = rng.randbytes(rng.randrange(0, 40))
        if rng.random() < 0.3:
            data = b"\x54" + data  # force deeper paths past the magic check
        try:
            decode(data, 53)
        except WireError:
            rejected += 1
    assert rejected > 0


def test_dump_frame_reports_fields_and_rejections():
    data = encode(Calib(64, confirm=True))
    text = dump_frame(data)
    assert data.hex(" ") in text and "Calib" in text
    assert "NotOurProtocol" in dump_frame(b"\x00\x01")
