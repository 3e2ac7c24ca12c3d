"""Digital down-conversion of port records to complex baseband.

The chain mirrors a measurement receiver: mix the real record against a
local oscillator at ``f_lo`` using absolute time (so traces taken with
different trigger delays stay phase-comparable), decimate in polyphase
stages to a final rate of ~0.5-1 GS/s, then apply the documented channel
filter (FilterSpec).  All filters are odd-length linear-phase FIRs
applied zero-phase, so the chain has no group delay: envelope features
stay at their input times to within one output sample.

Phase convention: ``phase_unwrapped`` returns phi(t) = -unwrap(arg(I+jQ))
referenced to zero at the gate start, so a redshifted carrier (signal
below the LO) has a rising phase ramp, and the instantaneous frequency
offset from the LO is -dphi/dt / 2pi, which is what
``instantaneous_shift`` returns.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .core import Waveform
from .errors import EmptyGate, ValidationError

_WINDOWS = ("blackman", "hamming", "hann")

# per-stage decimation limit; keeps each anti-alias FIR short
_MAX_STAGE = 16
_STAGE_TAPS_PER_M = 20


@dataclass(frozen=True)
class FilterSpec:
    """Final channel filter, applied at the output rate."""

    cutoff: float = 42e6
    taps: int = 255
    window: str = "blackman"

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValidationError("filter cutoff must be positive")
        if self.taps < 31 or self.taps % 2 == 0:
            raise ValidationError("filter taps must be odd and >= 31")
        if self.window not in _WINDOWS:
            raise ValidationError(
                f"window must be one of {_WINDOWS}, got {self.window!r}"
            )

    def coefficients(self, sample_rate: float) -> np.ndarray:
        if not self.cutoff < 0.45 * sample_rate:
            raise ValidationError(
                f"cutoff {self.cutoff:.3g} Hz does not fit below the "
                f"{sample_rate:.3g} S/s Nyquist band"
            )
        return signal.firwin(self.taps, self.cutoff, window=self.window,
                             fs=sample_rate)


@dataclass(frozen=True)
class IQTrace:
    """Complex baseband record relative to the LO at ``f_lo``."""

    sample_rate: float
    t0: float
    f_lo: float
    iq: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "iq", np.asarray(self.iq, dtype=np.complex128))
        if not self.sample_rate > 0:
            raise ValidationError("sample_rate must be positive")
        if self.iq.ndim != 1 or self.iq.size == 0:
            raise ValidationError("iq must be a non-empty 1-d array")
        if not np.all(np.isfinite(self.iq)):
            raise ValidationError("iq must be finite")

    @property
    def n(self) -> int:
        return self.iq.size

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n) / self.sample_rate


def _zero_phase(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # odd-length linear-phase FIR centered on each sample: no group delay
    return signal.fftconvolve(x, taps.astype(x.dtype, copy=False), mode="same")


def down_convert(
    wave: Waveform,
    f_lo: float,
    filter_spec: FilterSpec | None = None,
    target_rate: float = 0.5e9,
) -> IQTrace:
    """Mix a real record to complex baseband and filter it.

    ``target_rate`` sets the lower bound of the output rate; the actual
    rate lands in [target_rate, 2 * target_rate) via integer decimation.
    """
    spec = filter_spec if filter_spec is not None else FilterSpec()
    if not f_lo > 0:
        raise ValidationError("f_lo must be positive")
    if wave.sample_rate < 2.5 * f_lo:
        raise ValidationError(
            f"record rate {wave.sample_rate:.3g} S/s too low to represent "
            f"a {f_lo:.3g} Hz carrier"
        )
    if not 0 < target_rate <= wave.sample_rate:
        raise ValidationError("target_rate must lie in (0, record rate]")
    # factor 2 restores the tone amplitude lost when the negative-frequency
    # image is discarded
    z = 2.0 * wave.samples * np.exp(-2j * np.pi * f_lo * wave.times())
    rate = wave.sample_rate
    while True:
        m = min(_MAX_STAGE, int(rate / target_rate))
        if m < 2:
            break
        taps = signal.firwin(
            _STAGE_TAPS_PER_M * m + 1, 0.8 / m, window="blackman"
        )
        z = _zero_phase(z, taps)[::m]
        rate /= m
    z = _zero_phase(z, spec.coefficients(rate))
    return IQTrace(sample_rate=rate, t0=wave.t0, f_lo=f_lo, iq=z)


def filter_response(
    spec: FilterSpec, sample_rate: float, freqs: np.ndarray | None = None
):
    """(f, complex H) of the channel filter at the given rate."""
    taps = spec.coefficients(sample_rate)
    if freqs is None:
        f, h = signal.freqz(taps, worN=2048, fs=sample_rate)
    else:
        f, h = signal.freqz(taps, worN=np.asarray(freqs, float), fs=sample_rate)
    return f, h


def magnitude(trace: IQTrace) -> Waveform:
    return Waveform(
        sample_rate=trace.sample_rate, t0=trace.t0, samples=np.abs(trace.iq)
    )


def _gate_bounds(mag: np.ndarray, gate_level: float) -> tuple[int, int]:
    peak = float(mag.max(initial=0.0))
    if peak <= 0.0:
        raise EmptyGate("record magnitude is identically zero")
    mask = mag >= gate_level * peak
    j = int(np.argmax(mag))
    a = j
    while a > 0 and mask[a - 1]:
        a -= 1
    b = j + 1
    while b < mag.size and mask[b]:
        b += 1
    return a, b


def phase_unwrapped(trace: IQTrace, gate_level: float = 0.2) -> Waveform:
    """-unwrap(arg(iq)) over the contiguous gate around the magnitude
    peak, zero-referenced at the gate start."""
    if not 0 < gate_level < 1:
        raise ValidationError("gate_level must lie in (0, 1)")
    a, b = _gate_bounds(np.abs(trace.iq), gate_level)
    phi = -np.unwrap(np.angle(trace.iq[a:b]))
    phi -= phi[0]
    return Waveform(
        sample_rate=trace.sample_rate,
        t0=trace.t0 + a / trace.sample_rate,
        samples=phi,
    )


def instantaneous_shift(
    trace: IQTrace, gate_level: float = 0.2, smooth: int = 5
) -> Waveform:
    """Instantaneous frequency offset from the LO over the magnitude gate.

    ``smooth`` is an odd moving-average length applied to the phase
    derivative; 1 disables it.
    """
    if smooth < 1 or smooth % 2 == 0:
        raise ValidationError("smooth must be odd and >= 1")
    phi = phase_unwrapped(trace, gate_level)
    shift = -np.gradient(phi.samples) * trace.sample_rate / (2 * np.pi)
    if smooth > 1 and shift.size >= smooth:
        kernel = np.full(smooth, 1.0 / smooth)
        shift = np.convolve(shift, kernel, mode="same")
    return Waveform(sample_rate=phi.sample_rate, t0=phi.t0, samples=shift)


def add_noise(obj, sigma: float, seed: int = 0):
    """Additive white gaussian noise; complex traces get sigma split
    evenly between quadratures.  Deterministic in ``seed``."""
    if sigma < 0:
        raise ValidationError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    if isinstance(obj, IQTrace):
        noise = rng.normal(scale=sigma / np.sqrt(2), size=(2, obj.n))
        return replace(obj, iq=obj.iq + noise[0] + 1j * noise[1])
    if isinstance(obj, Waveform):
        return replace(obj, samples=obj.samples + rng.normal(scale=sigma, size=obj.n))
    raise ValidationError(f"cannot add noise to {type(obj).__name__}")


def write_iq_csv(path, trace: IQTrace) -> None:
    with open(path, "w") as fh:
        fh.write(f"# f_lo_hz={trace.f_lo!r} sample_rate={trace.sample_rate!r} "
                 f"t0={trace.t0!r}\n")
        fh.write("time_s,i,q\n")
        for tk, zk in zip(trace.times(), trace.iq):
            fh.write(f"{tk:.12e},{zk.real:.12e},{zk.imag:.12e}\n")


def read_iq_csv(path) -> IQTrace:
    with open(path) as fh:
        meta = fh.readline()
        if not meta.startswith("#"):
            raise ValidationError(f"{path} is missing the iq metadata line")
        fields = dict(
            kv.split("=", 1) for kv in meta[1:].split() if "=" in kv
        )
        fh.readline()  # column header
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    return IQTrace(
        sample_rate=float(fields["sample_rate"]),
        t0=float(fields["t0"]),
        f_lo=float(fields["f_lo_hz"]),
        iq=body[:, 1] + 1j * body[:, 2],
    )


__all__ = [
    "FilterSpec",
    "IQTrace",
    "down_convert",
    "filter_response",
    "magnitude",
    "phase_unwrapped",
    "instantaneous_shift",
    "add_noise",
    "write_iq_csv",
    "read_iq_csv",
]
