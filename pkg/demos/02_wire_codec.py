#!/usr/bin/env python3
"""The binary wire format: fixed frames, big-endian fields, CRC-16.

Every message starts with magic 0x54 and a kind byte and ends with a
CRC-16/CCITT-FALSE. A TOUCH frame is always 18 bytes: at 60 frames per
second that is about 1 kB/s per direction, comfortably real-time.
"""

from teledge import (Bye, Calib, CorruptFrame, Hello, Touch, TouchFrame, TouchMask,
                     decode, dump_frame, encode)

hello = Hello(left_count=21, right_count=32)
calib = Calib(intensity=72, confirm=False)
touch = Touch(TouchFrame(seq=258, timestamp_us=1_000_000,
                         mask=TouchMask.from_indices(53, [0, 26, 52]), intensity=72))
bye = Bye()

for message in (hello, calib, touch, bye):
    data = encode(message)
    print(f"{type(message).__name__:5s} {len(data):2d} bytes: {data.hex(' ')}")
print()

# Round-trip: decoding gives back exactly what was encoded.
assert decode(encode(touch), 53) == touch
print("decoded:", decode(encode(touch), 53))
print()

# The CRC catches every single-bit corruption on the wire.
data = bytearray(encode(touch))
data[9] ^= 0x10  # flip one mask bit in transit
try:
    decode(bytes(data), 53)
except CorruptFrame as exc:
    print("corrupted frame rejected:", exc)
print()

# dump_frame is what `teledge codec-dump` prints.
print(dump_frame(encode(calib)))
print(dump_frame(b"\xde\xad\xbe\xef"))
