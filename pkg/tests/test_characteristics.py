import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dopplerline import characteristics as ch
from dopplerline.core import (
    ArbitraryPulse,
    ControlPulseSpec,
    Port,
    RectPulse,
    WavePacketSpec,
    Waveform,
    default_line,
)
from dopplerline.errors import SingularInterface, ValidationError
from dopplerline.line_model import (
    Crossing,
    compose_doppler,
    doppler_ratio,
    phase_velocity,
)

W4 = 2 * math.pi * 4e9
LINE = default_line()


def rect_cp(amplitude=1.58e-3, duration=40e-9, delay=0.0, **kw):
    return ControlPulseSpec(
        shape=RectPulse(amplitude=amplitude, duration=duration, **kw), delay=delay
    )


def wp(delay=0.0, tau=15e-9):
    return WavePacketSpec(omega_in=W4, tau_wp=tau, amplitude=1e-6, delay=delay)


def test_no_pulse_is_a_pure_delay():
    res = ch.trace_point(3e-9, LINE, None)
    assert res.omega_ratio == 1.0
    assert res.exit_time - res.entry_time == pytest.approx(LINE.tau_p, rel=1e-12)
    assert res.crossings == ()


def test_both_fronts_cancel_exactly():
    # entry in the cancel band: crossing rising then falling front returns
    # the carrier exactly, for any plateau amplitude and both front models
    cp = rect_cp(amplitude=2.0e-3)
    for model in ("rigid", "simple_wave"):
        res = ch.trace_point(20e-9, LINE, cp, front_model=model)
        assert res.omega_ratio == 1.0
        assert len(res.crossings) == 2
        assert res.crossings[0].delta_i == pytest.approx(2.0e-3, rel=1e-6)
        assert res.crossings[1].delta_i == pytest.approx(-2.0e-3, rel=1e-6)


def test_rising_front_matches_interface_doppler():
    # red-band entry: the traced ratio equals the closed-form interface
    # relation with v2 = phase velocity at the plateau
    cp = rect_cp()
    res = ch.trace_point(-20e-9, LINE, cp)
    expected = doppler_ratio(-LINE.v0, LINE.v0, phase_velocity(1.58e-3, LINE))
    assert res.omega_ratio == pytest.approx(expected, rel=1e-12)
    assert len(res.crossings) == 1
    assert res.crossings[0].delta_i == pytest.approx(1.58e-3, rel=1e-6)


def test_falling_front_blueshifts_reciprocally():
    # blue-band entry: the packet starts inside the plateau and leaves
    # through the falling edge
    cp = rect_cp()
    red = ch.trace_point(-20e-9, LINE, cp)
    blue = ch.trace_point(50e-9, LINE, cp)
    assert blue.omega_ratio == pytest.approx(1.0 / red.omega_ratio, rel=1e-12)
    assert blue.crossings[0].delta_i == pytest.approx(-1.58e-3, rel=1e-6)


def test_simple_wave_model_telescopes_to_quarter_power():
    # fan crossing: omega scales as sqrt(v), so the ratio against the
    # quiet line is (1 + x)^(-1/4) for the kinetic inductance law
    amp = 2.0e-3
    x = (amp / LINE.i_star) ** 2
    res = ch.trace_point(-20e-9, LINE, rect_cp(amplitude=amp),
                         front_model="simple_wave")
    assert res.omega_ratio == pytest.approx((1 + x) ** -0.25, rel=1e-12)


def test_rigid_vs_simple_wave_gap_is_second_order():
    # the two front models differ by ~x^2/32 in ratio; at 2 mA and 4 GHz
    # that is ~1.4 MHz, which is why the solver comparison uses the
    # self-consistent model
    amp = 2.0e-3
    x = (amp / LINE.i_star) ** 2
    rigid = ch.trace_point(-20e-9, LINE, rect_cp(amplitude=amp))
    fan = ch.trace_point(-20e-9, LINE, rect_cp(amplitude=amp),
                         front_model="simple_wave")
    gap = abs(fan.omega_ratio - rigid.omega_ratio)
    assert gap == pytest.approx(x**2 / 32, rel=0.2)


def test_exit_time_includes_plateau_slowdown():
    cp = rect_cp(amplitude=1.62e-3)
    res = ch.trace_point(-20e-9, LINE, cp)
    x_c = res.crossings[0].position
    v2 = phase_velocity(1.62e-3, LINE)
    expected = LINE.tau_p * (x_c / LINE.length) \
        + (LINE.length - x_c) / v2
    assert res.exit_time - res.entry_time == pytest.approx(
        expected, abs=3 * LINE.dt_magic
    )


def test_staircase_matches_compose_doppler():
    # piecewise-constant pulse: the traced ratio telescopes over the
    # discrete fronts exactly
    rate = 4e9
    levels = [0.4e-3, 1.0e-3, 1.7e-3]
    hold = int(round(8e-9 * rate))
    samples = np.concatenate([np.full(hold, lv) for lv in levels])
    cp = ControlPulseSpec(
        shape=ArbitraryPulse(waveform=Waveform(rate, 0.0, samples)), delay=0.0
    )
    res = ch.trace_point(-30e-9, LINE, cp)
    # the ray exits while still inside the last plateau it reached
    seq = [0.0] + list(np.cumsum([c.delta_i for c in res.crossings]))
    crossings = [
        Crossing(-LINE.v0, phase_velocity(a, LINE), phase_velocity(b, LINE))
        for a, b in zip(seq[:-1], seq[1:])
    ]
    assert res.omega_ratio == pytest.approx(
        compose_doppler(1.0, crossings), rel=1e-9
    )


@pytest.mark.parametrize("amp", [0.2e-3, 0.8e-3, 2.03e-3])
def test_predict_instantaneous_tracks_traced_carrier(amp):
    # the output-port shortcut agrees with exact tracing to O(x^2), i.e.
    # within 1% of the carrier across paper-scale amplitudes
    cp = rect_cp(amplitude=amp)
    packet = wp()
    res = ch.trace_point(-20e-9, LINE, cp)
    w_pred = ch.predict_instantaneous(res.exit_time, LINE, packet, cp)
    w_traced = W4 * res.omega_ratio
    assert abs(w_pred - w_traced) / W4 < 0.01
    # and both are genuine redshifts
    assert w_pred < W4 and w_traced < W4


def test_predict_instantaneous_quiet_output_is_identity():
    packet = wp()
    assert ch.predict_instantaneous(1e-9, LINE, packet, None) == W4
    cp = rect_cp(delay=200e-9)
    assert ch.predict_instantaneous(1e-9, LINE, packet, cp) == W4


def test_classify_condition_bands():
    cp = rect_cp(duration=40e-9)
    packet = wp()
    b = ch.condition_boundaries(LINE, cp)
    assert b == pytest.approx((-40e-9, 0.0, 40e-9, 80e-9), abs=1e-15)
    cases = [
        (-60e-9, ch.Condition.NO_MEETING),
        (-20e-9, ch.Condition.RED_ONLY),
        (20e-9, ch.Condition.CANCEL),
        (60e-9, ch.Condition.BLUE_ONLY),
        (100e-9, ch.Condition.NO_MEETING),
    ]
    for delay, expected in cases:
        assert ch.classify_condition(delay, LINE, packet, cp) is expected


def test_classify_condition_instrument_axis():
    # a 31 ns line on a delay axis with 47 ns origin reproduces the
    # 16/56/78/118 ns boundaries
    line31 = default_line(tau_p=31e-9)
    cp = rect_cp(duration=40e-9)
    packet = wp()
    b = ch.condition_boundaries(line31, cp, origin=47e-9)
    assert b == pytest.approx((16e-9, 56e-9, 78e-9, 118e-9), abs=1e-15)
    assert ch.classify_condition(30e-9, line31, packet, cp, origin=47e-9) \
        is ch.Condition.RED_ONLY
    assert ch.classify_condition(66e-9, line31, packet, cp, origin=47e-9) \
        is ch.Condition.CANCEL
    assert ch.classify_condition(100e-9, line31, packet, cp, origin=47e-9) \
        is ch.Condition.BLUE_ONLY


def test_classify_condition_rejects_overlong_pulse():
    cp = rect_cp(duration=90e-9)
    with pytest.raises(ValidationError):
        ch.classify_condition(0.0, LINE, wp(), cp)


def test_singular_interface_on_co_moving_front():
    # co-propagating pulse at v0: the quiet region co-moves with the front,
    # the conserved quantity omega*(1 - v_front/v) degenerates to zero
    cp = ControlPulseSpec(
        shape=RectPulse(amplitude=1e-3, duration=40e-9), port=Port.LEFT,
        delay=0.0,
    )
    with pytest.raises(SingularInterface):
        ch.trace_point(50e-9, LINE, cp)


def test_trace_point_validation():
    with pytest.raises(ValidationError):
        ch.trace_point(0.0, LINE, rect_cp(), front_model="warp")
    with pytest.raises(ValidationError):
        ch.trace_point(0.0, LINE, rect_cp(), step=-1.0)
    with pytest.raises(ValidationError):
        ch.RayResult(entry_time=1.0, exit_time=0.5, omega_ratio=1.0,
                     crossings=())
    with pytest.raises(ValidationError):
        ch.RayResult(entry_time=0.0, exit_time=1.0, omega_ratio=-2.0,
                     crossings=())


def test_spacetime_diagram_grid_and_rays(tmp_path):
    cp = rect_cp(amplitude=1.0e-3)
    packet = wp(delay=10e-9)
    dia = ch.spacetime_diagram(LINE, packet, cp, resolution=(64, 48), n_rays=3)
    assert dia.cp_current.shape == (64, 48)
    assert dia.cp_current.max() == pytest.approx(1.0e-3, rel=1e-9)
    assert len(dia.rays) == 3
    for ray in dia.rays:
        assert ray.positions[0] == 0.0
        assert ray.positions[-1] == pytest.approx(LINE.length, rel=1e-6)
        assert np.all(np.diff(ray.positions) >= 0)
        assert 0.9 < ray.omega_ratio < 1.1
    grid_path = tmp_path / "grid.csv"
    rays_path = tmp_path / "rays.csv"
    ch.write_diagram_csv(grid_path, dia)
    ch.write_rays_csv(rays_path, dia)
    grid = np.loadtxt(grid_path, delimiter=",", skiprows=1)
    assert grid.shape == (64, 49)
    rays = np.loadtxt(rays_path, delimiter=",", skiprows=1)
    assert rays.shape == (3 * 200, 4)


@settings(max_examples=40, deadline=None)
@given(
    amp=st.floats(min_value=1e-5, max_value=2.4e-3),
    entry=st.floats(min_value=5e-9, max_value=35e-9),
)
def test_cancel_band_property(amp, entry):
    # anywhere inside the cancel band, any plateau amplitude: exact return
    res = ch.trace_point(entry, LINE, rect_cp(amplitude=amp), step=0.2e-9)
    assert res.omega_ratio == 1.0
    assert res.exit_time > res.entry_time


@settings(max_examples=30, deadline=None)
@given(amp=st.floats(min_value=1e-5, max_value=2.4e-3))
def test_red_band_property(amp):
    # red band: ratio below one and equal to the closed form
    res = ch.trace_point(-20e-9, LINE, rect_cp(amplitude=amp), step=0.2e-9)
    expected = doppler_ratio(-LINE.v0, LINE.v0, phase_velocity(amp, LINE))
    assert res.omega_ratio == pytest.approx(expected, rel=1e-10)
    assert res.omega_ratio < 1.0
