"""Touch gestures as time-parameterized masks, plus script files.

Four gesture kinds cover what two hands do on an edge display: ``trace``
slides a finger along one strip at a constant velocity, ``tap`` is the
rhythmic grip-and-release pattern, ``hold`` is a steady grip over a fixed
mask, and ``idle`` is no contact. Each gesture is active over the window
``[start_ms, start_ms + duration_ms)``.

Script files are line oriented, one gesture per line::

    start_ms duration_ms idle
    start_ms duration_ms hold {21,22,23}
    start_ms duration_ms tap {5} <period_ms> <duty>
    start_ms duration_ms trace <left|right> <start> <end> <velocity> [contact_width]

``#`` starts a comment; blank lines are skipped. Indices are global, masks
use the ``{...}`` notation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Union

from .layout import ElectrodeLayout, TouchMask, parse_mask


class OutOfWindowError(ValueError):
    """Gesture sampled outside its active window."""


class ScriptError(ValueError):
    """Invalid gesture parameters or unparseable script text."""


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class Trace:
    """Finger sliding along one strip: start index toward end index."""

    start_ms: int
    duration_ms: int
    strip: str
    start_index: int
    end_index: int
    velocity: float  # electrodes per second
    size: int
    contact_width: int = 1

    def __post_init__(self) -> None:
        if self.velocity <= 0:
            raise ScriptError(f"trace velocity must be > 0, got {self.velocity}")
        if self.contact_width < 1:
            raise ScriptError(f"contact_width must be >= 1, got {self.contact_width}")
        _check_window(self)

    def render(self, t_ms: float) -> TouchMask:
        elapsed_s = (t_ms - self.start_ms) / 1000.0
        span = self.velocity * elapsed_s
        raw = self.start_index + span if self.end_index >= self.start_index else self.start_index - span
        lo, hi = sorted((self.start_index, self.end_index))
        pos = min(hi, max(lo, _round_half_up(raw)))
        touched = range(pos, min(hi, pos + self.contact_width - 1) + 1)
        return TouchMask.from_indices(self.size, touched)


@dataclass(frozen=True)
class Tap:
    """Grip-and-release: mask on for the duty fraction of every period."""

    start_ms: int
    duration_ms: int
    mask: TouchMask
    period_ms: float
    duty: float

    def __post_init__(self) -> None:
        if self.period_ms <= 0:
            raise ScriptError(f"tap period must be > 0, got {self.period_ms}")
        if not 0 < self.duty < 1:
            raise ScriptError(f"tap duty must be in (0, 1), got {self.duty}")
        _check_window(self)

    @property
    def size(self) -> int:
        return self.mask.size

    def render(self, t_ms: float) -> TouchMask:
        phase = ((t_ms - self.start_ms) % self.period_ms) / self.period_ms
        return self.mask if phase < self.duty else TouchMask.empty(self.size)


@dataclass(frozen=True)
class Hold:
    """Steady grip over a fixed mask."""

    start_ms: int
    duration_ms: int
    mask: TouchMask

    def __post_init__(self) -> None:
        _check_window(self)

    @property
    def size(self) -> int:
        return self.mask.size

    def render(self, t_ms: float) -> TouchMask:
        return self.mask


@dataclass(frozen=True)
class Idle:
    start_ms: int
    duration_ms: int
    size: int

    def __post_init__(self) -> None:
        _check_window(self)

    def render(self, t_ms: float) -> TouchMask:
        return TouchMask.empty(self.size)


Gesture = Union[Trace, Tap, Hold, Idle]


def _check_window(g) -> None:
    if g.start_ms < 0:
        raise ScriptError(f"start_ms must be >= 0, got {g.start_ms}")
    if g.duration_ms <= 0:
        raise ScriptError(f"duration_ms must be > 0, got {g.duration_ms}")


def in_window(g: Gesture, t_ms: float) -> bool:
    return g.start_ms <= t_ms < g.start_ms + g.duration_ms


def render_gesture(g: Gesture, t_ms: float) -> TouchMask:
    """Mask produced by a gesture at time ``t_ms`` within its window."""
    if not in_window(g, t_ms):
        raise OutOfWindowError(
            f"t={t_ms} ms outside window [{g.start_ms}, {g.start_ms + g.duration_ms})")
    return g.render(t_ms)


@dataclass(frozen=True)
class GestureScript:
    """Time-sorted, non-overlapping gestures for one endpoint."""

    endpoint_id: str
    gestures: tuple[Gesture, ...]
    size: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "gestures", tuple(
            sorted(self.gestures, key=lambda g: g.start_ms)))
        prev_end = None
        for g in self.gestures:
            if g.size != self.size:
                raise ScriptError(f"gesture mask size {g.size} != script size {self.size}")
            if prev_end is not None and g.start_ms < prev_end:
                raise ScriptError(
                    f"gesture at {g.start_ms} ms overlaps the previous one ending at {prev_end} ms")
            prev_end = g.start_ms + g.duration_ms

    def render(self, t_ms: float) -> TouchMask:
        """Mask at ``t_ms``; gaps between gestures are no contact."""
        for g in self.gestures:
            if in_window(g, t_ms):
                return g.render(t_ms)
        return TouchMask.empty(self.size)

    def validate_for(self, layout: ElectrodeLayout) -> None:
        if self.size != layout.total:
            raise ScriptError(f"script size {self.size} != layout total {layout.total}")
        for g in self.gestures:
            if isinstance(g, Trace):
                try:
                    strip = layout.strip_range(g.strip)
                except ValueError as exc:
                    raise ScriptError(str(exc)) from exc
                for idx in (g.start_index, g.end_index):
                    if idx not in strip:
                        raise ScriptError(
                            f"trace index {idx} outside the {g.strip} strip "
                            f"{strip.start}..{strip.stop - 1}")


def parse_script(text: str, layout: ElectrodeLayout, endpoint_id: str) -> GestureScript:
    """Parse a gesture script file body against a layout."""
    gestures: list[Gesture] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            gestures.append(_parse_line(line, layout))
        except (ScriptError, ValueError) as exc:
            raise ScriptError(f"line {lineno}: {exc}") from exc
    script = GestureScript(endpoint_id=endpoint_id, gestures=tuple(gestures),
                           size=layout.total)
    script.validate_for(layout)
    return script


def _parse_line(line: str, layout: ElectrodeLayout) -> Gesture:
    fields = line.split()
    if len(fields) < 3:
        raise ScriptError(f"expected 'start_ms duration_ms kind ...', got {line!r}")
    start_ms, duration_ms, kind = int(fields[0]), int(fields[1]), fields[2]
    args = fields[3:]
    if kind == "idle":
        if args:
            raise ScriptError("idle takes no arguments")
        return Idle(start_ms, duration_ms, size=layout.total)
    if kind == "hold":
        if len(args) != 1:
            raise ScriptError("hold takes exactly one mask argument")
        return Hold(start_ms, duration_ms, mask=parse_mask(args[0], layout.total))
    if kind == "tap":
        if len(args) != 3:
            raise ScriptError("tap takes: mask period_ms duty")
        return Tap(start_ms, duration_ms, mask=parse_mask(args[0], layout.total),
                   period_ms=float(args[1]), duty=float(args[2]))
    if kind == "trace":
        if len(args) not in (4, 5):
            raise ScriptError("trace takes: strip start end velocity [contact_width]")
        width = int(args[4]) if len(args) == 5 else 1
        return Trace(start_ms, duration_ms, strip=args[0], start_index=int(args[1]),
                     end_index=int(args[2]), velocity=float(args[3]),
                     size=layout.total, contact_width=width)
    raise ScriptError(f"unknown gesture kind {kind!r}")


def load_script(path: str, layout: ElectrodeLayout, endpoint_id: str) -> GestureScript:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_script(fh.read(), layout, endpoint_id)


def random_script(layout: ElectrodeLayout, duration_ms: int, rng: random.Random,
                  endpoint_id: str = "A") -> GestureScript:
    """Seeded random script: useful for property and symmetry testing."""
    gestures: list[Gesture] = []
    t = 0
    while t < duration_ms:
        seg = min(rng.randrange(100, 600), duration_ms - t)
        if seg < 50:
            break
        kind = rng.choice(("idle", "hold", "tap", "trace"))
        if kind == "idle":
            gestures.append(Idle(t, seg, size=layout.total))
        elif kind == "hold":
            gestures.append(Hold(t, seg, mask=_random_block(layout, rng)))
        elif kind == "tap":
            gestures.append(Tap(t, seg, mask=_random_block(layout, rng),
                                period_ms=rng.randrange(80, 400),
                                duty=rng.uniform(0.2, 0.8)))
        else:
            strip = rng.choice(("left", "right"))
            span = layout.strip_range(strip)
            a, b = rng.sample(range(span.start, span.stop), 2)
            gestures.append(Trace(t, seg, strip=strip, start_index=a, end_index=b,
                                  velocity=rng.uniform(5.0, 90.0), size=layout.total))
        t += seg
    return GestureScript(endpoint_id=endpoint_id, gestures=tuple(gestures),
                         size=layout.total)


def _random_block(layout: ElectrodeLayout, rng: random.Random, width: int = 3) -> TouchMask:
    strip = layout.strip_range(rng.choice(("left", "right")))
    width = min(width, len(strip))
    first = rng.randrange(strip.start, strip.stop - width + 1)
    return TouchMask.from_indices(layout.total, range(first, first + width))
