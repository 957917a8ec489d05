"""Transports between the two endpoints.

Two implementations share one shape: a non-blocking send plus a drain of
received datagrams at frame boundaries.

:class:`SimLink` is a deterministic discrete-event link on virtual time.
Per-packet delay is ``max(0, one_way_delay_us + U(-jitter_us, +jitter_us))``,
loss is an independent Bernoulli draw, and with reordering disallowed the
delivery time is clamped to keep each direction FIFO. All randomness comes
from a splitmix64 stream seeded by the link model, so a (seed, send log)
pair fully determines the delivery log.

:class:`UdpTransport` is the real datagram transport for live sessions:
one UDP socket per endpoint, fire-and-forget sends, drain on demand.

Link configuration files are ``key = value`` text with keys ``delay_us``,
``jitter_us``, ``loss``, ``reorder``, ``seed``. Delivery logs are one
line per packet: ``t_us, direction, size, status``.
"""

from __future__ import annotations

import heapq
import socket
from dataclasses import dataclass, field
from typing import Iterable, Optional

_U64 = (1 << 64) - 1


class LinkClosedError(RuntimeError):
    """Send on a link that has been closed."""


class LinkConfigError(ValueError):
    """Unparseable link configuration text."""


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _U64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return state, z ^ (z >> 31)


class SplitMix64:
    """Tiny explicit PRNG so delivery logs replay bit-for-bit anywhere."""

    def __init__(self, seed: int):
        self._state = seed & _U64

    def next_u64(self) -> int:
        self._state, value = _splitmix64(self._state)
        return value

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) / (1 << 53)


@dataclass(frozen=True)
class LinkModel:
    """Simulated-link parameters; all times in microseconds."""

    one_way_delay_us: int = 0
    jitter_us: int = 0
    loss_prob: float = 0.0
    allow_reorder: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.one_way_delay_us < 0 or self.jitter_us < 0:
            raise LinkConfigError("delay and jitter must be >= 0")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise LinkConfigError(f"loss_prob {self.loss_prob} outside [0, 1]")


class SimClock:
    """Virtual-time event queue; ties deliver in insertion order."""

    def __init__(self, now_us: int = 0):
        self.now_us = now_us
        self._pending: list[tuple[int, int, object]] = []
        self._order = 0

    def schedule(self, at_us: int, payload: object) -> None:
        if at_us < self.now_us:
            raise ValueError(f"cannot schedule at {at_us}, clock is at {self.now_us}")
        heapq.heappush(self._pending, (at_us, self._order, payload))
        self._order += 1

    def run_until(self, t_us: int) -> list[tuple[int, object]]:
        """Deliver every event with timestamp <= t_us, in time order."""
        if t_us < self.now_us:
            raise ValueError(f"cannot run back to {t_us}, clock is at {self.now_us}")
        delivered = []
        while self._pending and self._pending[0][0] <= t_us:
            at, _, payload = heapq.heappop(self._pending)
            delivered.append((at, payload))
        self.now_us = t_us
        return delivered

    def pending_count(self) -> int:
        return len(self._pending)


@dataclass
class LogEntry:
    t_us: int
    direction: str
    size: int
    status: str  # delivered | dropped

    def format(self) -> str:
        return f"{self.t_us}, {self.direction}, {self.size}, {self.status}"


@dataclass
class DirectionStats:
    sent: int = 0
    delivered: int = 0
    dropped: int = 0


_OTHER = {"A": "B", "B": "A"}


class SimLink:
    """Deterministic bidirectional link between endpoints A and B."""

    def __init__(self, model: LinkModel, clock: Optional[SimClock] = None):
        self.model = model
        self.clock = clock if clock is not None else SimClock()
        self._rng = SplitMix64(model.seed)
        self._last_delivery_us = {"A->B": 0, "B->A": 0}
        self.stats = {"A->B": DirectionStats(), "B->A": DirectionStats()}
        self.log: list[LogEntry] = []
        self._closed = False
        self._severed = False

    def close(self) -> None:
        self._closed = True

    def sever(self) -> None:
        """Cut the cable: later sends are dropped (and counted), not errors."""
        self._severed = True

    def send(self, src: str, data: bytes, at_us: int) -> None:
        """Queue a datagram from ``src`` toward the opposite endpoint."""
        if self._closed:
            raise LinkClosedError("send on a closed link")
        direction = f"{src}->{_OTHER[src]}"
        stats = self.stats[direction]
        stats.sent += 1
        if self._severed:
            stats.dropped += 1
            self.log.append(LogEntry(at_us, direction, len(data), "dropped"))
            return
        # Two draws per send, always, so the stream stays aligned.
        loss_draw = self._rng.uniform()
        jitter_draw = self._rng.uniform()
        if loss_draw < self.model.loss_prob:
            stats.dropped += 1
            self.log.append(LogEntry(at_us, direction, len(data), "dropped"))
            return
        jitter = round((2.0 * jitter_draw - 1.0) * self.model.jitter_us)
        deliver_at = at_us + max(0, self.model.one_way_delay_us + jitter)
        if not self.model.allow_reorder:
            deliver_at = max(deliver_at, self._last_delivery_us[direction])
        self._last_delivery_us[direction] = deliver_at
        self.clock.schedule(deliver_at, (direction, data))

    def deliver_until(self, t_us: int) -> list[tuple[int, str, bytes]]:
        """Advance virtual time, returning (t_us, dest, data) per arrival."""
        out = []
        for at, payload in self.clock.run_until(t_us):
            direction, data = payload
            stats = self.stats[direction]
            stats.delivered += 1
            self.log.append(LogEntry(at, direction, len(data), "delivered"))
            out.append((at, direction[-1], data))
        return out

    def format_log(self) -> str:
        return "\n".join(entry.format() for entry in self.log)


class UdpTransport:
    """Real datagram endpoint: non-blocking send, drain at frame boundaries."""

    def __init__(self, bind: tuple[str, int] = ("127.0.0.1", 0),
                 peer: Optional[tuple[str, int]] = None):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind(bind)
        self._sock.setblocking(False)
        self.peer = peer
        self.sent = 0
        self.received = 0

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()

    def connect(self, peer: tuple[str, int]) -> None:
        self.peer = peer

    def send(self, data: bytes) -> None:
        if self.peer is None:
            raise RuntimeError("no peer address set")
        try:
            self._sock.sendto(data, self.peer)
            self.sent += 1
        except BlockingIOError:
            pass  # full socket buffer counts as network loss

    def drain(self) -> list[bytes]:
        out = []
        while True:
            try:
                data, _ = self._sock.recvfrom(2048)
            except BlockingIOError:
                return out
            self.received += 1
            out.append(data)

    def close(self) -> None:
        self._sock.close()


_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def parse_link_config(text: str) -> LinkModel:
    """Parse ``key = value`` link configuration text into a LinkModel."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise LinkConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    try:
        kwargs = {}
        if "delay_us" in values:
            kwargs["one_way_delay_us"] = int(values.pop("delay_us"))
        if "jitter_us" in values:
            kwargs["jitter_us"] = int(values.pop("jitter_us"))
        if "loss" in values:
            kwargs["loss_prob"] = float(values.pop("loss"))
        if "reorder" in values:
            word = values.pop("reorder").lower()
            if word in _TRUE_WORDS:
                kwargs["allow_reorder"] = True
            elif word in _FALSE_WORDS:
                kwargs["allow_reorder"] = False
            else:
                raise LinkConfigError(f"reorder must be a boolean word, got {word!r}")
        if "seed" in values:
            kwargs["seed"] = int(values.pop("seed"))
    except ValueError as exc:
        if isinstance(exc, LinkConfigError):
            raise
        raise LinkConfigError(str(exc)) from exc
    if values:
        raise LinkConfigError(f"unknown keys: {', '.join(sorted(values))}")
    return LinkModel(**kwargs)


def format_link_config(model: LinkModel) -> str:
    return "\n".join([
        f"delay_us = {model.one_way_delay_us}",
        f"jitter_us = {model.jitter_us}",
        f"loss = {model.loss_prob}",
        f"reorder = {'true' if model.allow_reorder else 'false'}",
        f"seed = {model.seed}",
    ]) + "\n"


def conservation_ok(link: SimLink) -> bool:
    """Every send is accounted for: delivered, dropped, or still queued."""
    queued = link.clock.pending_count()
    totals = [s for s in link.stats.values()]
    sends = sum(s.sent for s in totals)
    return sends == sum(s.delivered for s in totals) + sum(s.dropped for s in totals) + queued
