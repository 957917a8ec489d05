#!/usr/bin/env python3
"""Masks, the overlap rule, and per-frame pulse plans.

The edge display has 53 electrodes: 21 down the left edge (indices 0-20)
and 32 down the right (21-52). Each electrode both senses touch and
stimulates. A frame stimulates exactly the electrodes touched on BOTH
paired devices, so a one-sided touch produces nothing.
"""

from teledge import (DEFAULT_LAYOUT, StimParams, TouchMask, build_stim_plan,
                     compute_stim_mask, format_mask)

layout = DEFAULT_LAYOUT
print(f"layout: {layout.left_count} left + {layout.right_count} right "
      f"= {layout.total} electrodes")
print(f"electrode 10 sits on the {layout.strip_of(10)} strip, "
      f"electrode 40 on the {layout.strip_of(40)} strip")
print()

# One user grips the right edge; the other touches a single point there.
grip = TouchMask.from_indices(layout.total, range(24, 29))
fingertip = TouchMask.from_indices(layout.total, [26])
print("grip      ", format_mask(grip))
print("fingertip ", format_mask(fingertip))
print("stimulated", format_mask(compute_stim_mask(grip, fingertip)))
print("(only the shared electrode fires; the rest of the grip feels nothing)")
print()

# The same fingertip without the grip on the other side: silence.
nothing = compute_stim_mask(TouchMask.empty(layout.total), fingertip)
print("one-sided touch stimulates", format_mask(nothing))
print()

# Frame timing: a 60 Hz frame is 16,667 us. The first 1,000 us are the
# sense window; stimulation pulses are then packed back to back, 50 us
# per touched electrode, in ascending electrode order.
params = StimParams()
print(f"frame period {params.frame_period_us} us, "
      f"sense window {params.sense_window_us} us, "
      f"pulse width {params.pulse_width_us} us")

plan = build_stim_plan(compute_stim_mask(grip, grip), params, frame_index=0)
for pulse in plan.pulses:
    print(f"  electrode {pulse.electrode:2d}: "
          f"{pulse.start_offset_us}-{pulse.end_offset_us} us "
          f"at intensity {pulse.intensity}")

full = TouchMask.from_indices(layout.total, range(layout.total))
budget = build_stim_plan(full, params, frame_index=1)
print(f"worst case, all {layout.total} electrodes: pulses end at "
      f"{budget.pulses[-1].end_offset_us} us of {params.frame_period_us} us")
