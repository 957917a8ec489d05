"""Live two-person session bridge.

Accepts exactly two WebSocket clients, runs one protocol engine per
client on wall-clock 60 Hz frames, and bridges their touch reports: each
frame, every live client is sent a TOUCH message whose mask is its own
stimulation mask (the overlap of its touches with its partner's).

Clients speak the binary wire codec, one message per WebSocket frame:
HELLO (layout must match or the session is refused), CALIB proposals and
confirm during calibration, then TOUCH reports while live, BYE to leave.
Refusals and violations are carried on the WebSocket close reason, since
BYE has no payload.

The frame loop never blocks on a slow client: each client has a
latest-frame-only outbox and a dedicated sender task; a frame that would
queue behind an unsent one replaces it and is counted as dropped.
"""

from __future__ import annotations

import asyncio
import dataclasses
import http
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from websockets.asyncio.server import Server, ServerConnection, serve as ws_serve
from websockets.datastructures import Headers
from websockets.exceptions import ConnectionClosed
from websockets.http11 import Response

from . import engine as eng
from .layout import DEFAULT_LAYOUT, ElectrodeLayout, TouchMask
from .wire import Bye, Calib, Hello, Touch, TouchFrame, WireError, decode, encode

log = logging.getLogger("teledge.serve")

CLOSE_POLICY = 1008
REASON_SESSION_FULL = "session-full"
REASON_LAYOUT_MISMATCH = "layout-mismatch"
REASON_PROTOCOL_VIOLATION = "protocol-violation"

_CONTENT_TYPES = {".html": "text/html", ".js": "text/javascript",
                  ".mjs": "text/javascript", ".css": "text/css",
                  ".map": "application/json", ".ts": "text/plain"}


@dataclass
class _Client:
    ws: ServerConnection
    endpoint_id: str
    state: eng.SessionState
    local_mask: TouchMask
    local_seq: Optional[int] = None
    local_age: int = 0
    inbox: list[TouchFrame] = field(default_factory=list)
    outbox: asyncio.Queue = field(default_factory=lambda: asyncio.Queue(maxsize=1))
    frames_dropped_to_client: int = 0
    sender: Optional[asyncio.Task] = None

    @property
    def live(self) -> bool:
        return self.state.phase is eng.Phase.LIVE


class Bridge:
    """One two-client session, its engines, and the wall-clock frame loop."""

    def __init__(self, layout: ElectrodeLayout = DEFAULT_LAYOUT,
                 params: eng.StimParams | None = None,
                 static_dir: str | None = None):
        self.layout = layout
        self.params = params if params is not None else eng.StimParams()
        self.params.validate_for(layout.total)
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self.clients: dict[str, Optional[_Client]] = {"A": None, "B": None}
        self.refused_count = 0
        self.port: Optional[int] = None
        self._server: Optional[Server] = None
        self._frame_task: Optional[asyncio.Task] = None
        self._t0 = time.monotonic()

    # -- lifecycle ---------------------------------------------------------

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> int:
        self._server = await ws_serve(self._handler, host, port,
                                      process_request=self._process_request)
        self.port = self._server.sockets[0].getsockname()[1]
        self._frame_task = asyncio.create_task(self._frame_loop())
        log.info("serving on %s:%d (layout %d,%d at %d Hz)", host, self.port,
                 self.layout.left_count, self.layout.right_count, self.params.refresh_hz)
        return self.port

    async def stop(self) -> None:
        if self._frame_task is not None:
            self._frame_task.cancel()
            try:
                await self._frame_task
            except asyncio.CancelledError:
                pass
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def serve_forever(self) -> None:
        assert self._server is not None, "start() first"
        await self._server.serve_forever()

    # -- connection handling -------------------------------------------------

    def _now_us(self) -> int:
        return int((time.monotonic() - self._t0) * 1e6)

    def _partner(self, endpoint_id: str) -> Optional[_Client]:
        return self.clients["B" if endpoint_id == "A" else "A"]

    async def _handler(self, ws: ServerConnection) -> None:
        slot = next((eid for eid, c in self.clients.items() if c is None), None)
        if slot is None:
            self.refused_count += 1
            await ws.close(CLOSE_POLICY, REASON_SESSION_FULL)
            return
        client = _Client(ws=ws, endpoint_id=slot,
                         state=eng.new_session(self.layout, self.params,
                                               phase=eng.Phase.HANDSHAKING),
                         local_mask=TouchMask.empty(self.layout.total))
        self.clients[slot] = client
        log.info("client %s connected from %s", slot, ws.remote_address)
        try:
            try:
                if not await self._handshake(client):
                    return
            except WireError as exc:
                log.warning("client %s handshake violation: %s", slot, exc)
                await ws.close(CLOSE_POLICY, REASON_PROTOCOL_VIOLATION)
                return
            client.sender = asyncio.create_task(self._send_loop(client))
            await self._receive_loop(client)
        except ConnectionClosed:
            pass
        finally:
            if client.sender is not None:
                client.sender.cancel()
            self.clients[slot] = None
            log.info("client %s disconnected", slot)

    async def _handshake(self, client: _Client) -> bool:
        message = await self._recv_message(client)
        if not isinstance(message, Hello):
            await client.ws.close(CLOSE_POLICY, REASON_PROTOCOL_VIOLATION)
            return False
        if (message.left_count, message.right_count) != (self.layout.left_count,
                                                         self.layout.right_count):
            await client.ws.close(CLOSE_POLICY, REASON_LAYOUT_MISMATCH)
            return False
        await client.ws.send(encode(Hello(self.layout.left_count, self.layout.right_count)))
        client.state = dataclasses.replace(client.state, phase=eng.Phase.CALIBRATING)
        return True

    async def _recv_message(self, client: _Client):
        data = await client.ws.recv()
        if not isinstance(data, bytes):
            raise WireError("text frame on a binary protocol")
        return decode(data, self.layout.total)

    async def _receive_loop(self, client: _Client) -> None:
        while True:
            try:
                message = await self._recv_message(client)
            except WireError as exc:
                log.warning("client %s violation: %s", client.endpoint_id, exc)
                await client.ws.close(CLOSE_POLICY, REASON_PROTOCOL_VIOLATION)
                return
            if isinstance(message, Bye):
                await client.ws.close()
                return
            if isinstance(message, Calib):
                if not self._apply_calib(client, message):
                    await client.ws.close(CLOSE_POLICY, REASON_PROTOCOL_VIOLATION)
                    return
                continue
            if isinstance(message, Touch) and client.live:
                client.inbox.append(message.frame)
                continue
            log.warning("client %s sent %s in phase %s", client.endpoint_id,
                        type(message).__name__, client.state.phase.value)
            await client.ws.close(CLOSE_POLICY, REASON_PROTOCOL_VIOLATION)
            return

    def _apply_calib(self, client: _Client, message: Calib) -> bool:
        if client.state.phase is not eng.Phase.CALIBRATING:
            return False
        client.state = eng.set_intensity(client.state, message.intensity)
        if message.confirm:
            client.state = eng.calibrate(client.state, "confirm")
            log.info("client %s live at intensity %d", client.endpoint_id,
                     client.state.params.intensity)
        self._queue_latest(client, encode(Calib(client.state.params.intensity,
                                                confirm=message.confirm)))
        return True

    # -- frame loop ---------------------------------------------------------

    async def _send_loop(self, client: _Client) -> None:
        while True:
            data = await client.outbox.get()
            try:
                await client.ws.send(data)
            except ConnectionClosed:
                return

    def _queue_latest(self, client: _Client, data: bytes) -> None:
        if client.outbox.full():
            try:
                client.outbox.get_nowait()
                client.frames_dropped_to_client += 1
            except asyncio.QueueEmpty:
                pass
        client.outbox.put_nowait(data)

    async def _frame_loop(self) -> None:
        period_s = self.params.frame_period_us / 1e6
        next_at = time.monotonic()
        while True:
            next_at += period_s
            delay = next_at - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_at = time.monotonic()  # fell behind; resync instead of bursting
            self._run_frame()

    def _run_frame(self) -> None:
        now_us = self._now_us()
        live = [c for c in self.clients.values() if c is not None and c.live]
        for client in live:
            inbound, client.inbox = client.inbox, []
            partner = self._partner(client.endpoint_id)
            for frame in inbound:
                if eng.seq_newer(frame.seq, client.local_seq):
                    client.local_seq = frame.seq
                    client.local_mask = frame.mask
                    client.local_age = 0
                if partner is not None:
                    partner.state = eng.apply_remote_frame(partner.state, frame)
        for client in live:
            client.local_age += 1
            local = client.local_mask
            if client.local_age > eng.STALENESS_LIMIT_FRAMES:
                local = TouchMask.empty(self.layout.total)
            sent, client.state = eng.emit_frame(client.state, local, now_us)
            plan, client.state = eng.advance_and_stimulate(client.state)
            stim = TouchMask.from_indices(self.layout.total, plan.mask_indices)
            out = TouchFrame(seq=sent.seq, timestamp_us=sent.timestamp_us,
                             mask=stim, intensity=client.state.params.intensity)
            self._queue_latest(client, encode(Touch(out)))

    # -- static files ---------------------------------------------------------

    def _process_request(self, connection: ServerConnection, request):
        if "websocket" in request.headers.get("Upgrade", "").lower():
            return None
        if self.static_dir is None:
            return connection.respond(http.HTTPStatus.NOT_FOUND, "no static content\n")
        name = request.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (self.static_dir / name).resolve()
        if not str(target).startswith(str(self.static_dir)) or not target.is_file():
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        body = target.read_bytes()
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        return Response(http.HTTPStatus.OK, "OK", Headers([
            ("Content-Type", content_type),
            ("Content-Length", str(len(body))),
        ]), body)


async def run_bridge(port: int, layout: ElectrodeLayout = DEFAULT_LAYOUT,
                     params: eng.StimParams | None = None,
                     static_dir: str | None = None, host: str = "0.0.0.0") -> None:
    bridge = Bridge(layout=layout, params=params, static_dir=static_dir)
    await bridge.start(host=host, port=port)
    try:
        await bridge.serve_forever()
    finally:
        await bridge.stop()
