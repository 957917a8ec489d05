#!/usr/bin/env python3
"""The live bridge end to end, with two headless protocol clients.

Starts the same WebSocket bridge `teledge serve` runs, connects two
clients, walks both through HELLO and calibration, then has one hold a
spot while the other taps it. Each client receives its own stimulation
mask every frame; the overlap appears on both sides within a couple of
wall-clock frames.
"""

import asyncio

from teledge import Calib, Hello, Touch, TouchFrame, TouchMask, decode, encode, format_mask
from teledge.serve import Bridge

TOTAL = 53


async def go_live(ws, name):
    await ws.send(encode(Hello(21, 32)))
    decode(await ws.recv(), TOTAL)
    await ws.send(encode(Calib(80, confirm=True)))
    decode(await ws.recv(), TOTAL)
    print(f"{name}: calibrated and live")


async def pump_touch(ws, indices, frames):
    for seq in range(frames):
        mask = TouchMask.from_indices(TOTAL, indices)
        await ws.send(encode(Touch(TouchFrame(seq, 0, mask, 80))))
        await asyncio.sleep(1 / 60)


async def watch_stim(ws, name, until_mask):
    seen = []
    while True:
        message = decode(await ws.recv(), TOTAL)
        if not isinstance(message, Touch):
            continue
        mask = message.frame.mask
        if not seen or seen[-1] != mask:
            seen.append(mask)
            print(f"{name}: stim {format_mask(mask)}")
        if mask == until_mask:
            return


async def main():
    from websockets.asyncio.client import connect

    bridge = Bridge()
    port = await bridge.start()
    print(f"bridge on 127.0.0.1:{port}")
    overlap = TouchMask.from_indices(TOTAL, [26])
    uri = f"ws://127.0.0.1:{port}/"
    async with connect(uri) as holder, connect(uri) as tapper:
        await go_live(holder, "holder")
        await go_live(tapper, "tapper")
        hold_task = asyncio.create_task(pump_touch(holder, [25, 26, 27], 40))
        tap_task = asyncio.create_task(pump_touch(tapper, [26], 40))
        await asyncio.gather(
            watch_stim(holder, "holder", overlap),
            watch_stim(tapper, "tapper", overlap),
        )
        hold_task.cancel()
        tap_task.cancel()
    await bridge.stop()
    print("both sides felt the shared electrode; session closed")


if __name__ == "__main__":
    asyncio.run(main())
