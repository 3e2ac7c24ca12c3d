import math

import numpy as np
import pytest

from dopplerline.core import (
    ArbitraryPulse,
    ControlPulseSpec,
    EdgeShape,
    Gaussian,
    RectPulse,
    Staircase,
    WavePacketSpec,
    Waveform,
    default_line,
)
from dopplerline.errors import ValidationError
from dopplerline.synth import synth_control_pulse, synth_wave_packet

RATE = 160e9
W4 = 2 * math.pi * 4e9


def test_wave_packet_shape_and_t0():
    spec = WavePacketSpec(omega_in=W4, tau_wp=15e-9, amplitude=1e-5, delay=7e-9)
    w = synth_wave_packet(spec, RATE)
    assert w.n == round(15e-9 * RATE)
    assert w.t0 == 7e-9
    assert np.max(np.abs(w.samples)) <= 1e-5 * (1 + 1e-12)


def test_wave_packet_energy():
    # mean of cos^2 is 1/2 up to an O(1/(omega tau)) envelope correction
    spec = WavePacketSpec(omega_in=W4, tau_wp=40e-9, amplitude=1e-5)
    w = synth_wave_packet(spec, RATE)
    energy = np.sum(w.samples**2) / RATE
    expect = 1e-10 * 40e-9 / 2
    assert energy == pytest.approx(expect, rel=1.0 / (W4 * 40e-9) + 1e-6)


def test_wave_packet_rate_guard():
    spec = WavePacketSpec(omega_in=W4, tau_wp=15e-9, amplitude=1e-5)
    with pytest.raises(ValidationError):
        synth_wave_packet(spec, 30e9)  # < 10 samples per period


def test_wave_packet_delay_is_pure_translation():
    a = WavePacketSpec(omega_in=W4, tau_wp=15e-9, amplitude=1e-5, delay=0.0)
    b = WavePacketSpec(omega_in=W4, tau_wp=15e-9, amplitude=1e-5, delay=13e-9)
    wa = synth_wave_packet(a, RATE)
    wb = synth_wave_packet(b, RATE)
    np.testing.assert_array_equal(wa.samples, wb.samples)
    assert wb.t0 - wa.t0 == pytest.approx(13e-9)


def test_wave_packet_staircase_levels():
    env = Staircase(levels=(0.25, 1.0))
    spec = WavePacketSpec(omega_in=W4, tau_wp=40e-9, amplitude=1e-5, envelope=env)
    w = synth_wave_packet(spec, RATE)
    first = np.max(np.abs(w.samples[: w.n // 2]))
    second = np.max(np.abs(w.samples[w.n // 2:]))
    assert first == pytest.approx(0.25e-5, rel=1e-3)
    assert second == pytest.approx(1e-5, rel=1e-3)


def test_wave_packet_amplitude_guard_with_line():
    spec = WavePacketSpec(omega_in=W4, tau_wp=15e-9, amplitude=1e-3)
    with pytest.raises(ValidationError):
        synth_wave_packet(spec, RATE, line=default_line())


def test_rect_pulse_plateau_and_edges():
    pulse = RectPulse(amplitude=1.62e-3, duration=30e-9, rise=2e-9, fall=2e-9)
    w = synth_control_pulse(ControlPulseSpec(shape=pulse), RATE)
    assert w.n == round(30e-9 * RATE)
    t = w.times()
    inside = (t > 2.5e-9) & (t < 27.5e-9)
    np.testing.assert_allclose(w.samples[inside], 1.62e-3, rtol=1e-12)
    assert w.samples[0] == pytest.approx(0.0, abs=1e-12)
    # linear edge hits half amplitude at half the rise time
    k = int(round(1e-9 * RATE))
    assert w.samples[k] == pytest.approx(0.81e-3, rel=1e-6)


def test_rect_pulse_smoothstep_edge():
    pulse = RectPulse(
        amplitude=1e-3, duration=10e-9, rise=2e-9, fall=2e-9,
        edge=EdgeShape.SMOOTHSTEP,
    )
    w = synth_control_pulse(ControlPulseSpec(shape=pulse), RATE)
    k = int(round(1e-9 * RATE))  # u = 0.5 -> 3/4 - 2/8 = 0.5
    assert w.samples[k] == pytest.approx(0.5e-3, rel=1e-6)
    # smoothstep has zero slope at the foot, linear does not
    assert w.samples[1] < 1e-3 * (1.0 / (2e-9 * RATE))


def test_rect_pulse_edge_resolution_guard():
    pulse = RectPulse(amplitude=1e-3, duration=30e-9, rise=0.2e-9, fall=0.2e-9)
    synth_control_pulse(ControlPulseSpec(shape=pulse), RATE)  # 32 samples: fine
    with pytest.raises(ValidationError):
        synth_control_pulse(ControlPulseSpec(shape=pulse), 5e9)


def test_control_pulse_critical_guard():
    pulse = RectPulse(amplitude=2.6e-3, duration=30e-9)
    with pytest.raises(ValidationError):
        synth_control_pulse(ControlPulseSpec(shape=pulse), RATE, line=default_line())


def test_arbitrary_pulse_resampled():
    src = Waveform(
        sample_rate=1e9, t0=0.0,
        samples=np.array([0.0, 1.0, 1.0, 1.0, 0.0]) * 1e-3,
    )
    spec = ControlPulseSpec(shape=ArbitraryPulse(waveform=src), delay=3e-9)
    w = synth_control_pulse(spec, 8e9)
    assert w.t0 == pytest.approx(3e-9)
    assert np.max(w.samples) == pytest.approx(1e-3, rel=1e-12)
    # linear interpolation midway up the first edge
    idx = int(round(0.5e-9 * 8e9))
    assert w.samples[idx] == pytest.approx(0.5e-3, rel=1e-9)


def test_gaussian_packet_peak_center():
    spec = WavePacketSpec(
        omega_in=W4, tau_wp=30e-9, amplitude=1e-5, envelope=Gaussian(sigma=5e-9)
    )
    w = synth_wave_packet(spec, RATE)
    env = np.abs(w.samples)
    # envelope peak lies within one carrier period of the packet center
    t_pk = w.times()[np.argmax(env)]
    assert abs(t_pk - 15e-9) < 0.25e-9
