"""Bidirectional electro-tactile tele-communication over phone-edge displays.

Two paired devices each expose 53 edge electrodes (21 left, 32 right) that
both sense touch and stimulate. Every 60 Hz frame each endpoint reports
its touch mask to the peer and stimulates exactly the electrodes touched
on both sides, with 50 us pulses packed after a per-frame sense window.

The package provides the mask algebra, the per-endpoint engine, the binary
wire codec, a deterministic link simulator, a gesture harness with
fidelity metrics, and a live two-person WebSocket bridge.
"""

from .layout import (DEFAULT_LAYOUT, ElectrodeLayout, IndexMap, LayoutError,
                     MaskSizeError, TouchMask, format_mask, make_layout, map_remote,
                     mask_and, parse_mask)
from .engine import (CALIB_STEP, INITIAL_INTENSITY, STALENESS_LIMIT_FRAMES, ParamsError,
                     Phase, PhaseError, Pulse, SessionState, StimParams, StimPlan,
                     apply_remote_frame, build_stim_plan, calibrate, compute_stim_mask,
                     emit_frame, advance_and_stimulate, new_session, seq_newer,
                     set_intensity, tick)
from .wire import (Bye, Calib, CorruptFrame, Hello, MalformedMask, Message,
                   NotOurProtocol, Touch, TouchFrame, TruncatedFrame, UnknownKind,
                   UnencodableMask, WireError, crc16, decode, dump_frame, encode)
from .netsim import (LinkClosedError, LinkConfigError, LinkModel, SimClock, SimLink,
                     SplitMix64, UdpTransport, format_link_config, parse_link_config)
from .gestures import (Gesture, GestureScript, Hold, Idle, OutOfWindowError,
                       ScriptError, Tap, Trace, load_script, parse_script,
                       random_script, render_gesture)
from .trace import SessionTrace, TraceFormatError, TraceRecord, read_trace, write_trace
from .harness import (InvalidMetricError, SymmetryStats, continuity_metric, parse_path,
                      run_session, symmetry_divergence)

__version__ = "0.1.0"
