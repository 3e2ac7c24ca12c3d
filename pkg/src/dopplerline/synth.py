"""Waveform synthesis for drive packets and bias control pulses.

Everything here produces :class:`~dopplerline.core.Waveform` objects in
current units (amperes) on a uniform time grid, ready for injection at a
solver port.  The synthesizers are deliberately dumb: shaping lives in the
envelope/pulse dataclasses, validation against a line happens here only
when a line is supplied.
"""
from __future__ import annotations

import numpy as np

from .core import (
    ArbitraryPulse,
    ControlPulseSpec,
    EdgeShape,
    LineSpec,
    RectPulse,
    Waveform,
    WavePacketSpec,
)
from .errors import ValidationError

MIN_SAMPLES_PER_PERIOD = 10.0


def synth_wave_packet(
    spec: WavePacketSpec,
    sample_rate: float,
    line: LineSpec | None = None,
) -> Waveform:
    """Sample a carrier-times-envelope packet on [0, tau_wp).

    The carrier phase is referenced to the packet start, so the produced
    waveform is translation invariant: changing ``spec.delay`` only moves
    ``t0``.  Requires at least MIN_SAMPLES_PER_PERIOD points per carrier
    period to keep later demodulation honest.
    """
    if sample_rate <= 0:
        raise ValidationError("sample_rate must be positive")
    f_carrier = spec.omega_in / (2.0 * np.pi)
    if sample_rate < MIN_SAMPLES_PER_PERIOD * f_carrier:
        raise ValidationError(
            f"sample_rate {sample_rate:.3g} under-resolves carrier "
            f"{f_carrier:.3g} Hz (need >= {MIN_SAMPLES_PER_PERIOD}x)"
        )
    if line is not None:
        spec.validate_against(line)
    n = max(int(round(spec.tau_wp * sample_rate)), 2)
    t = np.arange(n) / sample_rate
    profile = spec.envelope.profile(t, spec.tau_wp)
    samples = spec.amplitude * profile * np.cos(spec.omega_in * t)
    return Waveform(sample_rate=sample_rate, t0=spec.delay, samples=samples)


def _edge_profile(u: np.ndarray, shape: EdgeShape) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    if shape is EdgeShape.SMOOTHSTEP:
        return u * u * (3.0 - 2.0 * u)
    return u


def _synth_rect(pulse: RectPulse, sample_rate: float) -> np.ndarray:
    dt = 1.0 / sample_rate
    if pulse.rise < 2.0 * dt or pulse.fall < 2.0 * dt:
        raise ValidationError(
            "rect pulse edges need >= 2 samples at this rate; "
            f"rise={pulse.rise:.3g}s fall={pulse.fall:.3g}s dt={dt:.3g}s"
        )
    n = max(int(round(pulse.duration * sample_rate)), 2)
    t = np.arange(n) / sample_rate
    up = _edge_profile(t / pulse.rise, pulse.edge)
    down = _edge_profile((pulse.duration - t) / pulse.fall, pulse.edge)
    return pulse.amplitude * np.minimum(up, down)


def pulse_value(shape, t):
    """Analytic control-pulse current at local time ``t`` (0 = pulse start).

    Continuous-time counterpart of `synth_control_pulse`: zero outside
    [0, duration], exact edge profiles for rectangular pulses, linear
    interpolation for arbitrary ones.  Vectorized over ``t``.
    """
    t = np.asarray(t, dtype=float)
    if isinstance(shape, RectPulse):
        if shape.rise > 0:
            up = _edge_profile(t / shape.rise, shape.edge)
        else:
            up = (t >= 0).astype(float)
        if shape.fall > 0:
            down = _edge_profile((shape.duration - t) / shape.fall, shape.edge)
        else:
            down = (t <= shape.duration).astype(float)
        out = shape.amplitude * np.minimum(up, down)
        # clip() in the edge profile already zeroes the outside, except for
        # zero-length edges where the masks above do it
        return out if out.ndim else float(out)
    if isinstance(shape, ArbitraryPulse):
        src = shape.waveform
        out = np.interp(t, src.times() - src.t0, src.samples, left=0.0, right=0.0)
        return out if out.ndim else float(out)
    raise ValidationError(f"unknown pulse shape {type(shape).__name__}")


def synth_control_pulse(
    spec: ControlPulseSpec,
    sample_rate: float,
    line: LineSpec | None = None,
) -> Waveform:
    """Sample a bias control pulse at ``sample_rate``.

    Rectangular pulses get their rise/fall edges shaped here; arbitrary
    pulses are linearly resampled from their source grid.  When a line is
    supplied the peak current is checked against its critical current.
    """
    if sample_rate <= 0:
        raise ValidationError("sample_rate must be positive")
    if line is not None:
        spec.validate_against(line)
    if isinstance(spec.shape, RectPulse):
        samples = _synth_rect(spec.shape, sample_rate)
        t0 = spec.delay
    elif isinstance(spec.shape, ArbitraryPulse):
        src = spec.shape.waveform
        n = max(int(round(src.duration * sample_rate)) + 1, 2)
        t = np.arange(n) / sample_rate
        samples = np.interp(t, src.times() - src.t0, src.samples)
        t0 = spec.delay + src.t0
    else:  # pragma: no cover - spec enums are closed
        raise ValidationError(f"unknown pulse shape {type(spec.shape).__name__}")
    return Waveform(sample_rate=sample_rate, t0=t0, samples=samples)
