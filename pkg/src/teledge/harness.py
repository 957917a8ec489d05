"""Lockstep two-endpoint sessions on virtual time, and fidelity metrics.

:func:`run_session` drives two engines through a simulated link at the
frame rate, on virtual time only. Each frame boundary does, in order:
render both scripts into local touches, emit and send both TOUCH frames,
deliver everything the link has ready, apply it, then stimulate. With a
zero-delay link both sides therefore intersect the same pair of masks in
the same frame; any real delay shows up as whole frames of lag.

Metrics are computed offline from the recorded :class:`SessionTrace`,
never inside the frame loop.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import engine as eng
from .gestures import GestureScript
from .layout import DEFAULT_LAYOUT, ElectrodeLayout, TouchMask
from .netsim import LinkModel, SimLink
from .trace import SessionTrace, TraceRecord
from .wire import Touch, decode, encode


class InvalidMetricError(ValueError):
    """Metric requested over an empty trace or an empty path."""


def run_session(script_a: GestureScript, script_b: GestureScript, link: LinkModel | SimLink,
                duration_ms: int, layout: ElectrodeLayout = DEFAULT_LAYOUT,
                params: eng.StimParams | None = None,
                cut_at_ms: float | None = None) -> SessionTrace:
    """Advance both endpoints in lockstep and record every frame.

    ``cut_at_ms`` severs the link at the first frame boundary at or after
    that time, simulating an unplugged cable mid-session.
    """
    if duration_ms <= 0:
        raise ValueError(f"duration_ms must be > 0, got {duration_ms}")
    for script in (script_a, script_b):
        script.validate_for(layout)
    params = params if params is not None else eng.StimParams()
    if isinstance(link, LinkModel):
        link = SimLink(link)
    period = params.frame_period_us
    n_frames = duration_ms * params.refresh_hz // 1000

    states = {
        "A": eng.new_session(layout, params, phase=eng.Phase.LIVE),
        "B": eng.new_session(layout, params, phase=eng.Phase.LIVE),
    }
    scripts = {"A": script_a, "B": script_b}
    trace = SessionTrace(left_count=layout.left_count, right_count=layout.right_count,
                         refresh_hz=params.refresh_hz)
    severed = False

    for k in range(n_frames):
        t_us = k * period
        t_ms = t_us / 1000.0
        if cut_at_ms is not None and not severed and t_ms >= cut_at_ms:
            link.sever()
            severed = True

        for end in ("A", "B"):
            local = scripts[end].render(t_ms)
            frame, states[end] = eng.emit_frame(states[end], local, t_us)
            link.send(end, encode(Touch(frame)), t_us)

        for _, dest, data in link.deliver_until(t_us):
            message = decode(data, layout.total)
            assert isinstance(message, Touch)
            states[dest] = eng.apply_remote_frame(states[dest], message.frame)

        for end in ("A", "B"):
            plan, states[end] = eng.advance_and_stimulate(states[end])
            state = states[end]
            trace.records[end].append(TraceRecord(
                frame_index=k,
                endpoint_id=end,
                local_mask=state.local_mask,
                remote_mask=state.remote_mask,
                stim_mask=TouchMask.from_indices(layout.total, plan.mask_indices),
                tx_seq=(state.tx_seq - 1) % eng.SEQ_MOD,
                rx_discards=state.rx_discards,
            ))

    trace.link_stats = {
        direction: {"sent": s.sent, "delivered": s.delivered, "dropped": s.dropped}
        for direction, s in link.stats.items()
    }
    return trace


def continuity_metric(trace: SessionTrace, expected_path: tuple[int, ...] | list[int],
                      endpoint_id: str = "A") -> tuple[float, int]:
    """How much of a traced path the receiving side actually felt.

    Coverage is the fraction of path electrodes that appear anywhere in
    the receiver's stimulation sequence. A skip is a path electrode that
    never appeared although electrodes on both sides of it along the path
    did; fast traces under-sample the path and skip electrodes.
    """
    if trace.frame_count() == 0:
        raise InvalidMetricError("empty trace")
    path = tuple(expected_path)
    if not path:
        raise InvalidMetricError("empty expected path")
    stimulated: set[int] = set()
    for mask in trace.stim_sequence(endpoint_id):
        stimulated.update(mask)
    hit = [p in stimulated for p in path]
    coverage = sum(1 for p in set(path) if p in stimulated) / len(set(path))
    skips = 0
    for i, p in enumerate(path):
        if hit[i]:
            continue
        if any(hit[:i]) and any(hit[i + 1:]):
            skips += 1
    return coverage, skips


@dataclass(frozen=True)
class SymmetryStats:
    mean: float
    max: int
    frames: int


def symmetry_divergence(trace: SessionTrace) -> SymmetryStats:
    """Per-frame Hamming distance between the two endpoints' stim masks."""
    if trace.frame_count() == 0:
        raise InvalidMetricError("empty trace")
    distances = [
        (a.stim_mask.bits ^ b.stim_mask.bits).bit_count()
        for a, b in zip(trace.records["A"], trace.records["B"])
    ]
    return SymmetryStats(mean=sum(distances) / len(distances),
                         max=max(distances), frames=len(distances))


def parse_path(spec: str) -> tuple[int, ...]:
    """Path spec: ``21:52`` (inclusive, either direction) or ``5,7,9``."""
    spec = spec.strip()
    if ":" in spec:
        first, last = (int(p) for p in spec.split(":", 1))
        step = 1 if last >= first else -1
        return tuple(range(first, last + step, step))
    return tuple(int(p) for p in spec.split(",") if p.strip())
