"""Core value types: the line, waveforms, wave packets, control pulses.

Everything is SI internally (seconds, hertz are not used for carriers --
angular rad/s -- amperes, meters, henry/farad per meter). Unit suffixes are
accepted only at config ingest, see `units.py`.

Conventions used throughout the package:

* The wave packet is injected at one port (default left) and recorded at the
  opposite port after one transit.
* The control pulse is injected at the other port (default right) and
  counter-propagates.
* ``delay`` fields are injection-start times relative to the scenario clock;
  they shift a waveform's ``t0``, never pad samples.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CriticalCurrentExceeded, ValidationError
from .units import si


class LineModel(enum.Enum):
    KINETIC_INDUCTANCE = "kinetic_inductance"
    JOSEPHSON_CHAIN = "josephson_chain"


class Port(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def opposite(self) -> "Port":
        return Port.RIGHT if self is Port.LEFT else Port.LEFT


class EdgeShape(enum.Enum):
    LINEAR = "linear"
    SMOOTHSTEP = "smoothstep"


# --------------------------------------------------------------------------
# waveforms


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled real waveform with an absolute start time."""

    sample_rate: float
    t0: float
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "samples", np.asarray(self.samples, dtype=np.float64)
        )
        if not self.sample_rate > 0:
            raise ValidationError("sample_rate must be positive")
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValidationError("samples must be a non-empty 1-d array")
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("samples must be finite")

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.n / self.sample_rate

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n) / self.sample_rate

    def shifted(self, delay: float) -> "Waveform":
        return replace(self, t0=self.t0 + delay)


def write_waveform_csv(path, wave: Waveform) -> None:
    t = wave.times()
    with open(path, "w") as fh:
        fh.write("time_s,value\n")
        for tk, xk in zip(t, wave.samples):
            fh.write(f"{tk:.12e},{xk:.12e}\n")


def read_waveform_csv(path) -> Waveform:
    t, x = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("time"):
                continue
            a, b = line.split(",")
            t.append(float(a))
            x.append(float(b))
    if len(t) < 2:
        raise ValidationError(f"waveform csv {path} needs at least 2 rows")
    t = np.asarray(t)
    steps = np.diff(t)
    if steps.min() <= 0 or (np.ptp(steps) > 1e-6 * steps.mean()):
        raise ValidationError(f"waveform csv {path} is not uniformly sampled")
    return Waveform(sample_rate=1.0 / steps.mean(), t0=t[0], samples=np.asarray(x))


# --------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True)
class Rectangular:
    def profile(self, t: np.ndarray, tau: float) -> np.ndarray:
        return np.ones_like(t)


@dataclass(frozen=True)
class Staircase:
    """Equal-duration plateaus; ``levels`` are relative amplitudes in (0, 1]."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) == 0:
            raise ValidationError("staircase needs at least one level")
        if any(not (0.0 < v <= 1.0) for v in levels):
            raise ValidationError("staircase levels must lie in (0, 1]")

    def profile(self, t: np.ndarray, tau: float) -> np.ndarray:
        lv = np.asarray(self.levels) / max(self.levels)
        idx = np.minimum((t / tau * len(lv)).astype(int), len(lv) - 1)
        return lv[idx]


@dataclass(frozen=True)
class Gaussian:
    """Peak at tau/2; ``sigma`` in seconds."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("gaussian sigma must be positive")

    def profile(self, t: np.ndarray, tau: float) -> np.ndarray:
        return np.exp(-((t - tau / 2.0) ** 2) / (2.0 * self.sigma**2))


@dataclass(frozen=True)
class TableEnvelope:
    """Arbitrary tabulated envelope, linearly interpolated and peak-normalized."""

    waveform: Waveform

    def __post_init__(self):
        if self.waveform.n < 2:
            raise ValidationError("table envelope needs at least 2 points")
        peak = np.abs(self.waveform.samples).max()
        if peak <= 0:
            raise ValidationError("table envelope must have a nonzero peak")

    def profile(self, t: np.ndarray, tau: float) -> np.ndarray:
        src_t = self.waveform.times() - self.waveform.t0
        scale = tau / src_t[-1] if src_t[-1] > 0 else 1.0
        y = np.interp(t, src_t * scale, self.waveform.samples)
        return y / np.abs(y).max()


# union used in annotations; isinstance checks go through this tuple
ENVELOPE_KINDS = (Rectangular, Staircase, Gaussian, TableEnvelope)


# --------------------------------------------------------------------------
# stimulus specs


@dataclass(frozen=True)
class WavePacketSpec:
    """Probe packet: ``amplitude`` is the peak current of the injected wave."""

    omega_in: float            # carrier, rad/s
    tau_wp: float              # duration, s
    amplitude: float           # A
    envelope: object = field(default_factory=Rectangular)
    port: Port = Port.LEFT
    delay: float = 0.0

    def __post_init__(self):
        if not (self.omega_in > 0 and self.tau_wp > 0 and self.amplitude > 0):
            raise ValidationError("omega_in, tau_wp, amplitude must be positive")
        if not isinstance(self.envelope, ENVELOPE_KINDS):
            raise ValidationError(f"unknown envelope {self.envelope!r}")

    def validate_against(self, line: "LineSpec") -> None:
        if self.amplitude > 0.05 * line.i_star:
            raise ValidationError(
                "wave packet amplitude must stay a small signal "
                f"(<= 0.05*i_star = {0.05 * line.i_star:.3e} A)"
            )


@dataclass(frozen=True)
class RectPulse:
    """Flat-top control pulse. ``duration`` includes the rise and fall ramps."""

    amplitude: float
    duration: float
    rise: float = 0.2e-9
    fall: float = 0.2e-9
    edge: EdgeShape = EdgeShape.LINEAR

    def __post_init__(self):
        if not (self.amplitude > 0 and self.duration > 0):
            raise ValidationError("rect pulse amplitude/duration must be positive")
        if self.rise < 0 or self.fall < 0:
            raise ValidationError("rise/fall must be non-negative")
        if self.duration <= self.rise + self.fall:
            raise ValidationError("duration must exceed rise + fall")


@dataclass(frozen=True)
class ArbitraryPulse:
    waveform: Waveform


@dataclass(frozen=True)
class ControlPulseSpec:
    shape: object
    port: Port = Port.RIGHT
    delay: float = 0.0

    def __post_init__(self):
        if not isinstance(self.shape, (RectPulse, ArbitraryPulse)):
            raise ValidationError(f"unknown control pulse shape {self.shape!r}")

    @property
    def peak_current(self) -> float:
        if isinstance(self.shape, RectPulse):
            return abs(self.shape.amplitude)
        return float(np.abs(self.shape.waveform.samples).max())

    @property
    def duration(self) -> float:
        if isinstance(self.shape, RectPulse):
            return self.shape.duration
        return self.shape.waveform.duration

    def validate_against(self, line: "LineSpec") -> None:
        # physics abort, not a config error: the pulse would quench the line
        if self.peak_current >= line.i_crit:
            raise CriticalCurrentExceeded(
                f"control pulse peak {self.peak_current:.3e} A reaches the "
                f"critical current {line.i_crit:.3e} A"
            )


# --------------------------------------------------------------------------
# the line


@dataclass(frozen=True)
class LineSpec:
    """Distributed transmission line with current-tunable inductance."""

    l0: float                  # H/m at zero current
    c: float                   # F/m
    length: float              # m
    i_star: float              # A, nonlinearity scale
    i_crit: float              # A, hard abort threshold
    c4: float = 0.0            # quartic inductance coefficient
    model: LineModel = LineModel.KINETIC_INDUCTANCE
    n_cells: int = 6400

    def __post_init__(self):
        for name in ("l0", "c", "length", "i_star", "i_crit"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.model is LineModel.KINETIC_INDUCTANCE and not self.i_crit < self.i_star:
            raise ValidationError("i_crit must be below i_star for the kinetic model")
        if self.n_cells < 16:
            raise ValidationError("n_cells must be at least 16")

    @property
    def tau_p(self) -> float:
        """Zero-current one-way transit time."""
        return self.length * math.sqrt(self.l0 * self.c)

    @property
    def z0(self) -> float:
        return math.sqrt(self.l0 / self.c)

    @property
    def v0(self) -> float:
        return 1.0 / math.sqrt(self.l0 * self.c)

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def dt_magic(self) -> float:
        """Time step at which the zero-current scheme advects exactly."""
        return self.dx * math.sqrt(self.l0 * self.c)

    @property
    def native_rate(self) -> float:
        return 1.0 / self.dt_magic


def line_from_delay(
    tau_p: float,
    z0: float,
    length: float,
    i_star: float,
    i_crit: float,
    **kwargs,
) -> LineSpec:
    """Build a LineSpec from measurable quantities (transit time, impedance)."""
    if not (tau_p > 0 and z0 > 0 and length > 0):
        raise ValidationError("tau_p, z0, length must be positive")
    l0 = z0 * tau_p / length
    c = tau_p / (z0 * length)
    return LineSpec(l0=l0, c=c, length=length, i_star=i_star, i_crit=i_crit, **kwargs)


def default_line(**overrides) -> LineSpec:
    """The device used by the built-in scenarios: 40 ns transit, 50 ohm,
    0.24 m, I* = 6.15 mA, I_c = 2.5 mA."""
    kw = dict(
        tau_p=40e-9, z0=50.0, length=0.24, i_star=6.15e-3, i_crit=2.5e-3
    )
    passthrough = {}
    for key, val in overrides.items():
        if key in kw:
            kw[key] = val
        else:
            passthrough[key] = val
    return line_from_delay(**kw, **passthrough)


# --------------------------------------------------------------------------
# config ingestion (JSON-shaped dicts; unit suffixes allowed on leaves)


def envelope_from_config(cfg, tau_wp: float | None = None):
    if cfg is None:
        return Rectangular()
    kind = cfg.get("kind", "rectangular").lower()
    if kind == "rectangular":
        return Rectangular()
    if kind == "staircase":
        return Staircase(levels=tuple(cfg["levels"]))
    if kind == "gaussian":
        if "sigma" in cfg:
            sigma = si(cfg["sigma"], "time")
        elif tau_wp is not None:
            sigma = tau_wp / 6.0
        else:
            raise ValidationError("gaussian envelope needs sigma")
        return Gaussian(sigma=sigma)
    if kind == "table":
        if "csv" in cfg:
            return TableEnvelope(read_waveform_csv(cfg["csv"]))
        pts = cfg["points"]
        t = np.asarray([si(p[0], "time") for p in pts])
        x = np.asarray([float(p[1]) for p in pts])
        rate = 1.0 / np.diff(t).mean()
        return TableEnvelope(Waveform(sample_rate=rate, t0=t[0], samples=x))
    raise ValidationError(f"unknown envelope kind {kind!r}")


def line_from_config(cfg: dict) -> LineSpec:
    kw = {}
    if "model" in cfg:
        kw["model"] = LineModel(cfg["model"])
    if "c4" in cfg:
        kw["c4"] = float(cfg["c4"])
    if "n_cells" in cfg:
        kw["n_cells"] = int(cfg["n_cells"])
    if "l0" in cfg or "c" in cfg:
        return LineSpec(
            l0=float(cfg["l0"]),
            c=float(cfg["c"]),
            length=si(cfg.get("length", 0.24), "length"),
            i_star=si(cfg["i_star"], "current"),
            i_crit=si(cfg["i_crit"], "current"),
            **kw,
        )
    return line_from_delay(
        tau_p=si(cfg.get("tau_p", "40ns"), "time"),
        z0=si(cfg.get("z0", 50.0), "impedance"),
        length=si(cfg.get("length", 0.24), "length"),
        i_star=si(cfg.get("i_star", "6.15mA"), "current"),
        i_crit=si(cfg.get("i_crit", "2.5mA"), "current"),
        **kw,
    )


def wave_packet_from_config(cfg: dict) -> WavePacketSpec:
    tau = si(cfg.get("duration", "15ns"), "time")
    carrier = si(cfg.get("carrier", "4GHz"), "frequency")
    return WavePacketSpec(
        omega_in=2.0 * math.pi * carrier,
        tau_wp=tau,
        amplitude=si(cfg.get("amplitude", "0.01mA"), "current"),
        envelope=envelope_from_config(cfg.get("envelope"), tau_wp=tau),
        port=Port(cfg.get("port", "left")),
        delay=si(cfg.get("delay", 0.0), "time"),
    )


def control_pulse_from_config(cfg: dict | None) -> ControlPulseSpec | None:
    if cfg is None:
        return None
    kind = cfg.get("kind", "rect").lower()
    port = Port(cfg.get("port", "right"))
    delay = si(cfg.get("delay", 0.0), "time")
    if kind == "rect":
        shape = RectPulse(
            amplitude=si(cfg["amplitude"], "current"),
            duration=si(cfg.get("duration", "30ns"), "time"),
            rise=si(cfg.get("rise", "0.2ns"), "time"),
            fall=si(cfg.get("fall", cfg.get("rise", "0.2ns")), "time"),
            edge=EdgeShape(cfg.get("edge", "linear")),
        )
    elif kind == "arbitrary":
        if "csv" in cfg:
            wave = read_waveform_csv(cfg["csv"])
        else:
            pts = cfg["points"]
            t = np.asarray([si(p[0], "time") for p in pts])
            x = np.asarray([si(p[1], "current") for p in pts])
            rate = 1.0 / np.diff(t).mean()
            wave = Waveform(sample_rate=rate, t0=t[0], samples=x)
        shape = ArbitraryPulse(waveform=wave)
    else:
        raise ValidationError(f"unknown control pulse kind {kind!r}")
    return ControlPulseSpec(shape=shape, port=port, delay=delay)
