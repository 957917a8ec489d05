"""Engine tests: stim rule, pulse plans, frame loop state, staleness, calibration."""

import dataclasses
import random

import pytest
from hypothesis import given, strategies as st

from teledge import engine as eng
from teledge.engine import (CALIB_STEP, STALENESS_LIMIT_FRAMES, ParamsError, Phase,
                            PhaseError, SessionState, StimParams, apply_remote_frame,
                            advance_and_stimulate, build_stim_plan, calibrate,
                            compute_stim_mask, emit_frame, new_session, seq_newer,
                            set_intensity, tick)
from teledge.layout import MaskSizeError, TouchMask, make_layout
from teledge.wire import TouchFrame


def mask(size, *indices):
    return TouchMask.from_indices(size, indices)


def live_state(layout=make_layout(21, 32), params=None):
    return new_session(layout, params, phase=Phase.LIVE)


def masks10():
    return st.integers(0, 1023).map(lambda bits: TouchMask(10, bits))


# -- parameters ----------------------------------------------------------------

def test_default_frame_period_is_16667_us():
    assert StimParams().frame_period_us == 16_667


def test_defaults_fit_the_default_layout():
    StimParams().validate_for(53)  # must not raise


def test_frame_budget_enforced():
    with pytest.raises(ParamsError):
        StimParams(pulse_width_us=5_000).validate_for(10)  # 1000 + 50000 > 16667


@pytest.mark.parametrize("kwargs", [
    {"pulse_width_us": 0}, {"refresh_hz": 0}, {"intensity": 256},
    {"intensity": -1}, {"sense_window_us": -1},
])
def test_bad_params_rejected(kwargs):
    with pytest.raises(ParamsError):
        StimParams(**kwargs)


# -- stim rule --------------------------------------------------------------------

def test_tracing_finger_felt_through_steady_grip():
    local = mask(53, 10, 11, 12)
    remote = mask(53, 11)
    assert compute_stim_mask(local, remote) == mask(53, 11)


def test_one_sided_touch_produces_nothing():
    assert compute_stim_mask(mask(53, 7), TouchMask.empty(53)) == TouchMask.empty(53)


def test_stim_mask_exhaustive_8_electrodes():
    # per-bit oracle over every pair on a small layout
    bit_sets = [frozenset(i for i in range(8) if value >> i & 1)
                for value in range(256)]
    all_masks = [TouchMask(8, value) for value in range(256)]
    for a in range(256):
        for b in range(256):
            result = compute_stim_mask(all_masks[a], all_masks[b])
            assert bit_sets[result.bits] == bit_sets[a] & bit_sets[b]


@given(masks10(), masks10())
def test_overlap_containment(local, remote):
    stim = compute_stim_mask(local, remote)
    assert stim.issubset(local)
    assert stim.issubset(remote)


@given(masks10(), masks10(), st.integers(0, 9))
def test_monotonicity_adding_a_bit_never_removes_output(local, remote, extra):
    base = compute_stim_mask(local, remote)
    grown = compute_stim_mask(local | mask(10, extra), remote)
    assert base.issubset(grown)


# -- pulse plans --------------------------------------------------------------------

def test_plan_packs_after_sense_window():
    plan = build_stim_plan(mask(53, 0, 5), StimParams(), frame_index=0)
    assert [(p.electrode, p.start_offset_us, p.width_us) for p in plan.pulses] == [
        (0, 1_000, 50), (5, 1_050, 50)]


def test_empty_mask_empty_plan():
    assert build_stim_plan(TouchMask.empty(53), StimParams(), 3).pulses == ()


def test_full_mask_fits_the_frame():
    params = StimParams()
    plan = build_stim_plan(TouchMask.from_indices(53, range(53)), params, 0)
    assert plan.pulses[-1].end_offset_us == 1_000 + 53 * 50 == 3_650
    assert plan.pulses[-1].end_offset_us <= params.frame_period_us
    assert plan.total_pulse_us == 53 * 50


def test_plan_matches_packing_oracle_on_random_masks():
    rng = random.Random(0x9A5)
    params = StimParams()
    for _ in range(500):
        bits = TouchMask(53, rng.getrandbits(53))
        plan = build_stim_plan(bits, params, 0)
        assert len(plan.pulses) == bits.popcount()
        assert plan.mask_indices == bits.indices()
        for rank, pulse in enumerate(plan.pulses):
            assert pulse.start_offset_us == params.sense_window_us + rank * params.pulse_width_us
            assert pulse.width_us == params.pulse_width_us
            assert pulse.intensity == params.intensity
        for earlier, later in zip(plan.pulses, plan.pulses[1:]):
            assert earlier.end_offset_us <= later.start_offset_us


# -- sequence comparison ----------------------------------------------------------------

def test_seq_newer_examples():
    assert seq_newer(10, 9)
    assert not seq_newer(9, 10)
    assert seq_newer(3, 65_534)  # wrap-around
    assert not seq_newer(65_534, 3)
    assert not seq_newer(7, 7)
    assert seq_newer(0, None)


def test_seq_newer_matches_forward_distance_oracle():
    rng = random.Random(0x5EC)
    for _ in range(5_000):
        a, b = rng.getrandbits(16), rng.getrandbits(16)
        forward = (a - b) % 65_536
        assert seq_newer(a, b) == (1 <= forward <= 32_767)


# -- frame loop ------------------------------------------------------------------

def test_tick_requires_live_phase():
    state = new_session(make_layout(21, 32), phase=Phase.CALIBRATING)
    with pytest.raises(PhaseError):
        tick(state, TouchMask.empty(53), 0)


def test_tick_stimulates_fresh_overlap():
    state = live_state()
    state = apply_remote_frame(state, TouchFrame(0, 0, mask(53, 4), 64))
    plan, frame, state = tick(state, mask(53, 4), now_us=16_667)
    assert plan.mask_indices == (4,)
    assert frame.mask == mask(53, 4)
    assert frame.seq == 0
    assert state.tx_seq == 1


def test_tick_with_empty_touch():
    plan, frame, _ = tick(live_state(), TouchMask.empty(53), 0)
    assert plan.pulses == ()
    assert frame.mask == TouchMask.empty(53)


def test_tick_rejects_wrong_mask_size():
    with pytest.raises(MaskSizeError):
        tick(live_state(), TouchMask.empty(10), 0)


def test_tx_seq_wraps_at_u16():
    state = dataclasses.replace(live_state(), tx_seq=65_535)
    _, frame, state = tick(state, TouchMask.empty(53), 0)
    assert frame.seq == 65_535
    assert state.tx_seq == 0


def test_timestamp_wraps_at_u32():
    _, frame, _ = tick(live_state(), TouchMask.empty(53), (1 << 32) + 5)
    assert frame.timestamp_us == 5


def test_staleness_clears_after_limit_plus_one_ticks():
    touch = mask(53, 4)
    state = live_state()
    state = apply_remote_frame(state, TouchFrame(0, 0, touch, 64))
    for tick_number in range(1, STALENESS_LIMIT_FRAMES + 2):
        plan, _, state = tick(state, touch, tick_number * 16_667)
        if tick_number <= STALENESS_LIMIT_FRAMES:
            assert plan.mask_indices == (4,), f"tick {tick_number} lost the remote early"
        else:
            assert plan.mask_indices == (), "tick 7 must stimulate nothing"
    assert state.remote_mask == TouchMask.empty(53)
    assert state.remote_age_frames == STALENESS_LIMIT_FRAMES + 1


def test_fresh_frame_resets_staleness():
    touch = mask(53, 4)
    state = live_state()
    state = apply_remote_frame(state, TouchFrame(0, 0, touch, 64))
    for seq in range(1, 40):
        plan, _, state = tick(state, touch, seq * 16_667)
        assert plan.mask_indices == (4,)
        state = apply_remote_frame(state, TouchFrame(seq, seq * 16_667, touch, 64))


# -- remote frame handling ----------------------------------------------------------

def test_in_order_frame_adopted():
    state = live_state()
    state = apply_remote_frame(state, TouchFrame(9, 0, mask(53, 1), 64))
    state = apply_remote_frame(state, TouchFrame(10, 0, mask(53, 2), 64))
    assert state.remote_mask == mask(53, 2)
    assert state.remote_seq == 10
    assert state.rx_discards == 0


def test_stale_frame_discarded_but_counted():
    state = live_state()
    state = apply_remote_frame(state, TouchFrame(10, 0, mask(53, 2), 64))
    state = apply_remote_frame(state, TouchFrame(9, 0, mask(53, 1), 64))
    assert state.remote_mask == mask(53, 2)
    assert state.remote_seq == 10
    assert state.rx_discards == 1


def test_wraparound_frame_adopted():
    state = live_state()
    state = apply_remote_frame(state, TouchFrame(65_534, 0, mask(53, 1), 64))
    state = apply_remote_frame(state, TouchFrame(3, 0, mask(53, 2), 64))
    assert state.remote_mask == mask(53, 2)
    assert state.remote_seq == 3


def test_remote_age_resets_on_accept_only():
    state = live_state()
    _, _, state = tick(state, TouchMask.empty(53), 0)
    assert state.remote_age_frames == 1
    state = apply_remote_frame(state, TouchFrame(5, 0, mask(53, 1), 64))
    assert state.remote_age_frames == 0
    state = apply_remote_frame(state, TouchFrame(4, 0, mask(53, 1), 64))  # stale
    _, _, state = tick(state, TouchMask.empty(53), 0)
    assert state.remote_age_frames == 1


# -- calibration ----------------------------------------------------------------

def calibrating_state(intensity=eng.INITIAL_INTENSITY):
    state = new_session(make_layout(21, 32),
                        StimParams(intensity=intensity), phase=Phase.CALIBRATING)
    return state


def test_calibrate_raise_steps_by_five():
    state = calibrating_state(100)
    assert calibrate(state, "raise").params.intensity == 100 + CALIB_STEP


def test_calibrate_clamps_at_ceiling():
    assert calibrate(calibrating_state(255), "raise").params.intensity == 255
    assert calibrate(calibrating_state(253), "raise").params.intensity == 255


def test_calibrate_clamps_at_floor():
    assert calibrate(calibrating_state(0), "lower").params.intensity == 0


def test_confirm_goes_live():
    state = calibrate(calibrating_state(), "confirm")
    assert state.phase is Phase.LIVE


def test_calibrate_outside_phase_errors():
    with pytest.raises(PhaseError):
        calibrate(live_state(), "raise")
    with pytest.raises(PhaseError):
        set_intensity(live_state(), 10)


def test_unknown_command_rejected():
    with pytest.raises(ValueError):
        calibrate(calibrating_state(), "louder")


def test_set_intensity_clamps():
    assert set_intensity(calibrating_state(), 999).params.intensity == 255
    assert set_intensity(calibrating_state(), -3).params.intensity == 0
    assert set_intensity(calibrating_state(), 70).params.intensity == 70


# -- split halves compose into tick --------------------------------------------------

def test_emit_then_stimulate_equals_tick():
    touch = mask(53, 2, 3)
    remote = TouchFrame(1, 0, mask(53, 3, 4), 64)

    state_a = apply_remote_frame(live_state(), remote)
    plan_a, frame_a, state_a = tick(state_a, touch, 99)

    state_b = apply_remote_frame(live_state(), remote)
    frame_b, state_b = emit_frame(state_b, touch, 99)
    plan_b, state_b = advance_and_stimulate(state_b)

    assert (plan_a, frame_a, state_a) == (plan_b, frame_b, state_b)
    assert plan_a.mask_indices == (3,)
