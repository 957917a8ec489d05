#!/usr/bin/env python3
"""Scripted two-person sessions and the fidelity metrics.

The canonical interaction: one side keeps a steady grip while the other
traces along the edge; the gripping side feels the finger move through
its own hand. Fast traces outrun the 60 Hz sampling and skip electrodes,
and link delay shows up as whole frames of lag.
"""

from teledge import (GestureScript, Hold, LinkModel, Tap, TouchMask, Trace,
                     continuity_metric, format_mask, parse_path, run_session,
                     symmetry_divergence)

RIGHT_STRIP = TouchMask.from_indices(53, range(21, 53))


def session(velocity, duration_trace_ms, link, duration_ms):
    holder = GestureScript("A", (Hold(0, duration_ms, RIGHT_STRIP),), size=53)
    tracer = GestureScript("B", (
        Trace(0, duration_trace_ms, "right", 21, 52, velocity, size=53),), size=53)
    return run_session(holder, tracer, link, duration_ms)


path = parse_path("21:52")

slow = session(30.0, 1_300, LinkModel(), 1_400)
coverage, skips = continuity_metric(slow, path, "A")
print(f"slow trace (30 el/s): coverage {coverage:.2f}, skips {skips}")

fast = session(120.0, 260, LinkModel(), 600)
coverage, skips = continuity_metric(fast, path, "A")
print(f"fast trace (120 el/s): coverage {coverage:.2f}, skips {skips} "
      "(quick movements do not survive 60 Hz sampling)")
print()

# What the holder feels, frame by frame (first 20 frames of the slow run):
felt = [r.stim_mask for r in slow.records["A"][:20]]
print("holder's first frames:", " ".join(format_mask(m) for m in felt))
print()

# Simultaneous symmetric motion is ambiguous once the link has latency:
# on an ideal link both sides always feel the identical mask, under delay
# their sensations diverge.
both = GestureScript("A", (Tap(0, 2_000, TouchMask.from_indices(53, [26, 27, 28]),
                               period_ms=250, duty=0.5),), size=53)
partner = GestureScript("B", (Hold(0, 2_000, RIGHT_STRIP),), size=53)

for name, link in [("ideal link", LinkModel()),
                   ("100 ms delay", LinkModel(one_way_delay_us=100_000))]:
    trace = run_session(both, partner, link, 2_000)
    stats = symmetry_divergence(trace)
    print(f"{name}: divergence mean {stats.mean:.3f}, max {stats.max}")
