"""Doppler frequency conversion lab for bias-driven transmission lines.

A 1-D telegrapher solver with a current-dependent inductance, matched
source/sink ports, digital down-conversion of the transmitted fields, and
characteristic-tracing oracles for the expected frequency shifts.  The
package exposes three layers:

* device + waveform specs (:mod:`dopplerline.core`, :mod:`dopplerline.synth`)
* the time-domain solver (:mod:`dopplerline.solver`)
* measurement and prediction (:mod:`dopplerline.ddc`,
  :mod:`dopplerline.analysis`, :mod:`dopplerline.characteristics`,
  :mod:`dopplerline.experiments`)
"""
from .core import (
    ControlPulseSpec,
    LineModel,
    LineSpec,
    Port,
    RectPulse,
    WavePacketSpec,
    Waveform,
    default_line,
    line_from_delay,
)
from .errors import (
    CriticalCurrentExceeded,
    DopplerlineError,
    PhysicsError,
    ValidationError,
)
from .line_model import (
    doppler_ratio,
    kinetic_inductance,
    phase_velocity,
    shift_from_current,
)

__version__ = "0.1.0"

__all__ = [
    "ControlPulseSpec",
    "CriticalCurrentExceeded",
    "DopplerlineError",
    "LineModel",
    "LineSpec",
    "PhysicsError",
    "Port",
    "RectPulse",
    "ValidationError",
    "WavePacketSpec",
    "Waveform",
    "default_line",
    "doppler_ratio",
    "kinetic_inductance",
    "line_from_delay",
    "phase_velocity",
    "shift_from_current",
    "__version__",
]
