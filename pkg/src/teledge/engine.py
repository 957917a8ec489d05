"""Per-endpoint protocol state machine.

Each endpoint runs a 60 Hz frame loop. A frame opens with a sense window
for touch scanning, then stimulation pulses are packed back to back, one
per electrode in the frame's stimulation mask. The stimulation mask is
the intersection of the local touch mask with the freshest remote mask:
stimulate exactly where both sides touch.

The driver owns the state and advances it one frame at a time. A frame
has two halves so a scheduler can interleave the network exchange:

* :func:`emit_frame` samples local touch and produces the outgoing
  :class:`~teledge.wire.TouchFrame` (advancing the tx sequence);
* :func:`advance_and_stimulate` ages the remote mask, applies the
  staleness cutoff, and builds the frame's :class:`StimPlan`.

:func:`tick` composes both for drivers that do not need the split.
Inbound frames go through :func:`apply_remote_frame`, which keeps only
frames that are newer under 16-bit serial-number comparison.

Remote staleness: after ``STALENESS_LIMIT_FRAMES`` frames without an
accepted remote frame (about 100 ms) the remote mask is treated as empty,
so a dead link stops stimulation instead of freezing it.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import Literal, Optional

from .layout import ElectrodeLayout, MaskSizeError, TouchMask, mask_and
from .wire import TouchFrame

SEQ_MOD = 1 << 16
STALENESS_LIMIT_FRAMES = 6
CALIB_STEP = 5
INITIAL_INTENSITY = 64
DEFAULT_SENSE_WINDOW_US = 1_000


class PhaseError(RuntimeError):
    """Operation called outside the session phase that allows it."""


class ParamsError(ValueError):
    """Stimulation parameters that cannot fit the frame budget."""


class Phase(enum.Enum):
    HANDSHAKING = "handshaking"
    CALIBRATING = "calibrating"
    LIVE = "live"
    CLOSED = "closed"


@dataclass(frozen=True)
class StimParams:
    """Frame timing and pulse shape shared by a session."""

    pulse_width_us: int = 50
    refresh_hz: int = 60
    intensity: int = INITIAL_INTENSITY
    sense_window_us: int = DEFAULT_SENSE_WINDOW_US

    def __post_init__(self) -> None:
        if self.pulse_width_us <= 0:
            raise ParamsError(f"pulse_width_us must be > 0, got {self.pulse_width_us}")
        if self.refresh_hz <= 0:
            raise ParamsError(f"refresh_hz must be > 0, got {self.refresh_hz}")
        if not 0 <= self.intensity <= 255:
            raise ParamsError(f"intensity {self.intensity} outside 0..255")
        if self.sense_window_us < 0:
            raise ParamsError(f"sense_window_us must be >= 0, got {self.sense_window_us}")

    @property
    def frame_period_us(self) -> int:
        return round(1e6 / self.refresh_hz)

    def validate_for(self, total_electrodes: int) -> None:
        """Check the frame budget: sense window plus a full-mask pulse train must fit."""
        need = self.sense_window_us + total_electrodes * self.pulse_width_us
        if need > self.frame_period_us:
            raise ParamsError(
                f"{total_electrodes} electrodes need {need} us per frame, "
                f"budget is {self.frame_period_us} us")


@dataclass(frozen=True)
class Pulse:
    electrode: int
    start_offset_us: int
    width_us: int
    intensity: int

    @property
    def end_offset_us(self) -> int:
        return self.start_offset_us + self.width_us


@dataclass(frozen=True)
class StimPlan:
    """One frame's pulse schedule: ascending electrodes, packed back to back."""

    frame_index: int
    pulses: tuple[Pulse, ...]

    @property
    def mask_indices(self) -> tuple[int, ...]:
        return tuple(p.electrode for p in self.pulses)

    @property
    def total_pulse_us(self) -> int:
        return sum(p.width_us for p in self.pulses)


@dataclass(frozen=True)
class SessionState:
    """One endpoint's half of the synchronized session."""

    params: StimParams
    local_mask: TouchMask
    remote_mask: TouchMask
    remote_seq: Optional[int]
    remote_age_frames: int
    tx_seq: int
    frame_count: int
    phase: Phase
    rx_discards: int

    @property
    def total(self) -> int:
        return self.local_mask.size


def new_session(layout: ElectrodeLayout, params: StimParams | None = None,
                phase: Phase = Phase.HANDSHAKING) -> SessionState:
    """Fresh endpoint state; validates the frame budget against the layout."""
    params = params if params is not None else StimParams()
    params.validate_for(layout.total)
    empty = TouchMask.empty(layout.total)
    return SessionState(params=params, local_mask=empty, remote_mask=empty,
                        remote_seq=None, remote_age_frames=0, tx_seq=0,
                        frame_count=0, phase=phase, rx_discards=0)


def compute_stim_mask(local: TouchMask, remote: TouchMask) -> TouchMask:
    """Stimulate exactly the overlap: a one-sided touch produces nothing."""
    return mask_and(local, remote)


def build_stim_plan(mask: TouchMask, params: StimParams, frame_index: int) -> StimPlan:
    """Pack one pulse per set bit after the sense window, ascending by electrode."""
    params.validate_for(mask.size)
    pulses = tuple(
        Pulse(electrode=e,
              start_offset_us=params.sense_window_us + rank * params.pulse_width_us,
              width_us=params.pulse_width_us,
              intensity=params.intensity)
        for rank, e in enumerate(mask))
    return StimPlan(frame_index=frame_index, pulses=pulses)


def seq_newer(candidate: int, reference: Optional[int]) -> bool:
    """16-bit serial-number comparison: newer iff (a-b) mod 2^16 is in (0, 2^15)."""
    if reference is None:
        return True
    return 0 < (candidate - reference) % SEQ_MOD < SEQ_MOD // 2


def emit_frame(state: SessionState, local_touch: TouchMask,
               now_us: int) -> tuple[TouchFrame, SessionState]:
    """Sample local touch and produce this frame's outgoing report.

    One frame goes out per scheduler frame even when the mask is
    unchanged; the stream doubles as the peer's staleness heartbeat.
    """
    if state.phase is not Phase.LIVE:
        raise PhaseError(f"cannot emit frames while {state.phase.value}")
    if local_touch.size != state.total:
        raise MaskSizeError(
            f"touch mask size {local_touch.size} does not match session {state.total}")
    frame = TouchFrame(seq=state.tx_seq, timestamp_us=now_us & 0xFFFFFFFF,
                       mask=local_touch, intensity=state.params.intensity)
    state = dataclasses.replace(state, local_mask=local_touch,
                                tx_seq=(state.tx_seq + 1) % SEQ_MOD)
    return frame, state


def advance_and_stimulate(state: SessionState) -> tuple[StimPlan, SessionState]:
    """Age the remote mask, enforce staleness, and build this frame's plan."""
    if state.phase is not Phase.LIVE:
        raise PhaseError(f"cannot stimulate while {state.phase.value}")
    age = state.remote_age_frames + 1
    remote = state.remote_mask
    if age > STALENESS_LIMIT_FRAMES:
        remote = TouchMask.empty(state.total)
    stim = compute_stim_mask(state.local_mask, remote)
    plan = build_stim_plan(stim, state.params, state.frame_count)
    state = dataclasses.replace(state, remote_mask=remote, remote_age_frames=age,
                                frame_count=state.frame_count + 1)
    return plan, state


def tick(state: SessionState, local_touch: TouchMask,
         now_us: int) -> tuple[StimPlan, TouchFrame, SessionState]:
    """One whole frame: emit the touch report, then age and stimulate."""
    frame, state = emit_frame(state, local_touch, now_us)
    plan, state = advance_and_stimulate(state)
    return plan, frame, state


def apply_remote_frame(state: SessionState, frame: TouchFrame) -> SessionState:
    """Adopt a decoded peer frame if it is newer; silently discard otherwise.

    Discards (duplicates, reordered stragglers) are counted in
    ``rx_discards`` so they stay observable in traces.
    """
    if frame.mask.size != state.total:
        raise MaskSizeError(
            f"remote mask size {frame.mask.size} does not match session {state.total}")
    if not seq_newer(frame.seq, state.remote_seq):
        return dataclasses.replace(state, rx_discards=state.rx_discards + 1)
    return dataclasses.replace(state, remote_mask=frame.mask, remote_seq=frame.seq,
                               remote_age_frames=0)


CalibCommand = Literal["raise", "lower", "confirm"]


def calibrate(state: SessionState, command: CalibCommand) -> SessionState:
    """Step the intensity to a perceptible level, then confirm to go live."""
    if state.phase is not Phase.CALIBRATING:
        raise PhaseError(f"calibration command while {state.phase.value}")
    if command == "confirm":
        return dataclasses.replace(state, phase=Phase.LIVE)
    if command == "raise":
        step = CALIB_STEP
    elif command == "lower":
        step = -CALIB_STEP
    else:
        raise ValueError(f"unknown calibration command {command!r}")
    level = min(255, max(0, state.params.intensity + step))
    return dataclasses.replace(state, params=dataclasses.replace(state.params, intensity=level))


def set_intensity(state: SessionState, intensity: int) -> SessionState:
    """Adopt an absolute intensity proposal (wire CALIB), clamped to 0..255."""
    if state.phase is not Phase.CALIBRATING:
        raise PhaseError(f"intensity proposal while {state.phase.value}")
    level = min(255, max(0, intensity))
    return dataclasses.replace(state, params=dataclasses.replace(state.params, intensity=level))
