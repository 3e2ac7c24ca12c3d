"""Analytic ray oracle, independent of the time-domain solver.

A wave-packet point is traced through a *prescribed* control-pulse field:
the pulse translates rigidly at a configurable front velocity (default
v0, entering from its port), and the point moves at the local small-signal
phase velocity.  Because the prescribed field depends on x and t only
through x - v_front*t, the interface-Doppler relation integrates exactly:
along a ray,

    rigid front:  omega * (1 - v_front / v_local)  is conserved,
    simple wave:  omega / sqrt(v_local)            is conserved,

so the conversion ratio is fixed by the local bias at the entry and exit
points alone, and the traced path only determines *when* and *where* the
crossings happen.  ``front_model="simple_wave"`` replaces the rigid
translation assumption with the self-consistent picture in which each
pulse level moves at its own characteristic speed; that is what the
nonlinear line actually does to a leading edge, and the two models differ
in ratio by ~x^2/32 (x = (I/I*)^2), which matters when validating the
solver at the strongest amplitudes.

Self-steepening of the pulse itself is deliberately not modeled here; an
oracle must stay independent of the solver's code path.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import ControlPulseSpec, LineSpec, Port, WavePacketSpec
from .errors import SingularInterface, ValidationError
from .line_model import phase_velocity, shift_from_current
from .synth import pulse_value

_FRONT_MODELS = ("rigid", "simple_wave")


@dataclass(frozen=True)
class FrontCrossing:
    """One monotone bias transition encountered along a ray."""

    position: float  # m, midpoint of the transition
    time: float      # s, midpoint of the transition
    delta_i: float   # A, signed current change across it


@dataclass(frozen=True)
class RayResult:
    entry_time: float
    exit_time: float
    omega_ratio: float
    crossings: tuple[FrontCrossing, ...]

    def __post_init__(self):
        if not self.exit_time > self.entry_time:
            raise ValidationError("ray must exit after it enters")
        if not self.omega_ratio > 0:
            raise ValidationError("omega_ratio must be positive")


class Condition(enum.Enum):
    """Encounter classes of a packet-center worldline with a rectangular
    counter-propagating pulse."""

    NO_MEETING = "no_meeting"
    RED_ONLY = "red_only"
    CANCEL = "cancel"
    BLUE_ONLY = "blue_only"


def _signed_front_velocity(line: LineSpec, cp: ControlPulseSpec,
                           v_front: float | None) -> float:
    speed = abs(v_front) if v_front is not None else line.v0
    if not speed > 0:
        raise ValidationError("v_front must be non-zero")
    return -speed if cp.port is Port.RIGHT else speed


def cp_current(line: LineSpec, cp: ControlPulseSpec, x, t,
               v_front: float | None = None):
    """Prescribed control-pulse current at (x, t) under rigid translation
    from its injection port."""
    v = _signed_front_velocity(line, cp, v_front)
    if v < 0:
        tau = (line.length - np.asarray(x)) / (-v)
    else:
        tau = np.asarray(x) / v
    return pulse_value(cp.shape, np.asarray(t) - cp.delay - tau)


def _collect_crossings(ts, xs, cur, i_eps):
    """Group samples into monotone bias transitions."""
    di = np.diff(cur)
    sign = np.sign(np.where(np.abs(di) > i_eps, di, 0.0))
    crossings = []
    k = 0
    while k < sign.size:
        if sign[k] == 0:
            k += 1
            continue
        j = k
        while j + 1 < sign.size and sign[j + 1] == sign[k]:
            j += 1
        mid = (k + j + 1) // 2
        crossings.append(FrontCrossing(
            position=float(xs[mid]),
            time=float(ts[mid]),
            delta_i=float(cur[j + 1] - cur[k]),
        ))
        k = j + 1
    return tuple(crossings)


def _check_not_singular(v_local: float, v_sig: float) -> None:
    if abs(v_local - v_sig) <= 1e-12 * abs(v_sig):
        raise SingularInterface("packet point co-moving with the front")


def _integrate(entry_time, line, cp, v_front, v_sig, h):
    """Fixed-step RK2 march of dx/dt = phase_velocity(I_cp(x, t)) from the
    left port to x = length; returns (times, positions, currents) with the
    final sample interpolated onto the exact exit position."""
    n_max = int(np.ceil(4.0 * line.tau_p / h)) + 2
    ts = np.empty(n_max)
    xs = np.empty(n_max)
    cur = np.empty(n_max)
    t, x = float(entry_time), 0.0
    k = 0
    while True:
        i_here = cp_current(line, cp, x, t, v_front)
        ts[k], xs[k], cur[k] = t, x, i_here
        if x >= line.length:
            break
        if k + 1 >= n_max:
            raise ValidationError("ray failed to exit in 4 transit times")
        v1 = phase_velocity(i_here, line)
        _check_not_singular(v1, v_sig)
        i_mid = cp_current(line, cp, x + 0.5 * h * v1, t + 0.5 * h, v_front)
        v2 = phase_velocity(i_mid, line)
        _check_not_singular(v2, v_sig)
        x += h * v2
        t += h
        k += 1
    ts, xs, cur = ts[: k + 1], xs[: k + 1], cur[: k + 1]

    # interpolate the overshoot back to the exact exit position
    if k > 0 and xs[-1] > line.length:
        w = (line.length - xs[-2]) / (xs[-1] - xs[-2])
        ts[-1] = ts[-2] + w * (ts[-1] - ts[-2])
        xs[-1] = line.length
        cur[-1] = cp_current(line, cp, line.length, ts[-1], v_front)
    return ts, xs, cur


def trace_point(
    entry_time: float,
    line: LineSpec,
    cp: ControlPulseSpec | None,
    v_front: float | None = None,
    front_model: str = "rigid",
    step: float | None = None,
) -> RayResult:
    """Trace one packet point entering the left port at ``entry_time``.

    Integrates dx/dt = phase_velocity(I_cp(x, t)) with fixed-step RK2
    (step defaults to the companion solver's magic step) and applies the
    conserved-quantity form of the interface Doppler relation.
    """
    if front_model not in _FRONT_MODELS:
        raise ValidationError(f"front_model must be one of {_FRONT_MODELS}")
    if cp is None:
        return RayResult(entry_time, entry_time + line.tau_p, 1.0, ())
    v_sig = _signed_front_velocity(line, cp, v_front)
    h = float(step) if step is not None else line.dt_magic
    if not 0 < h <= line.tau_p:
        raise ValidationError("step must lie in (0, tau_p]")
    ts, xs, cur = _integrate(entry_time, line, cp, v_front, v_sig, h)

    v_entry = phase_velocity(cur[0], line)
    v_exit = phase_velocity(cur[-1], line)
    if front_model == "rigid":
        ratio = (1.0 - v_sig / v_entry) / (1.0 - v_sig / v_exit)
    else:
        ratio = float(np.sqrt(v_exit / v_entry))
    i_eps = 1e-9 * max(cp.peak_current, 1e-12)
    return RayResult(
        entry_time=float(entry_time),
        exit_time=float(ts[-1]),
        omega_ratio=ratio,
        crossings=_collect_crossings(ts, xs, cur, i_eps),
    )


def predict_instantaneous(
    exit_time: float,
    line: LineSpec,
    wp: WavePacketSpec,
    cp: ControlPulseSpec | None,
    v_front: float | None = None,
) -> float:
    """Leading-order instantaneous carrier at the output port, rad/s.

    The shift of the point leaving at ``exit_time`` is read off the
    control-pulse current present at the output port at that moment; exact
    tracing and this shortcut agree to O((I/I*)^4).
    """
    if cp is None:
        return wp.omega_in
    i_out = cp_current(line, cp, line.length, exit_time, v_front)
    return wp.omega_in + shift_from_current(wp.omega_in, float(i_out), line)


def condition_boundaries(
    line: LineSpec, cp: ControlPulseSpec, origin: float = 0.0
) -> tuple[float, float, float, float]:
    """Delay-axis boundaries (NoMeeting | Red | Cancel | Blue | NoMeeting)
    for a packet-center worldline at v0 against a rectangular pulse.

    ``origin`` offsets the axis (instrument delay conventions); boundaries
    are origin + cp.delay + (-tau_p, tau_cp - tau_p, tau_p, tau_cp + tau_p).
    """
    tau_cp = cp.duration
    if tau_cp > 2.0 * line.tau_p:
        raise ValidationError(
            "pulse longer than the round trip: the center ray can sit inside "
            "the plateau for its whole transit and the four-way classification "
            "is not defined"
        )
    base = origin + cp.delay
    return (
        base - line.tau_p,
        base + tau_cp - line.tau_p,
        base + line.tau_p,
        base + tau_cp + line.tau_p,
    )


def classify_condition(
    delay: float,
    line: LineSpec,
    wp: WavePacketSpec,
    cp: ControlPulseSpec,
    origin: float = 0.0,
) -> Condition:
    """Classify the encounter for a packet whose center enters the input
    port at ``delay`` on the axis defined by ``origin``.

    The classification uses the packet-center worldline at v0 (the packet
    envelope straddles each boundary over +-tau_wp/2, so boundaries mark
    where the *center* ray changes regime).
    """
    del wp  # geometry is center-ray based; envelope width only blurs edges
    b0, b1, b2, b3 = condition_boundaries(line, cp, origin)
    if delay < b0 or delay > b3:
        return Condition.NO_MEETING
    if delay < b1:
        return Condition.RED_ONLY
    if delay <= b2:
        return Condition.CANCEL
    return Condition.BLUE_ONLY


@dataclass(frozen=True)
class DiagramRay:
    entry_time: float
    times: np.ndarray
    positions: np.ndarray
    omega_ratio: float


@dataclass(frozen=True)
class SpacetimeDiagram:
    times: np.ndarray       # (nt,)
    positions: np.ndarray   # (nx,)
    cp_current: np.ndarray  # (nt, nx)
    rays: tuple[DiagramRay, ...]


def spacetime_diagram(
    line: LineSpec,
    wp: WavePacketSpec,
    cp: ControlPulseSpec | None,
    resolution: tuple[int, int] = (200, 200),
    n_rays: int = 3,
    v_front: float | None = None,
    front_model: str = "rigid",
) -> SpacetimeDiagram:
    """Grid of the prescribed pulse field plus traced packet worldlines.

    Rays sample the packet support [delay, delay + tau_wp] uniformly.
    """
    nt, nx = resolution
    if nt < 2 or nx < 2:
        raise ValidationError("resolution must be at least 2 x 2")
    if n_rays < 1:
        raise ValidationError("n_rays must be >= 1")
    entries = (
        np.array([wp.delay + 0.5 * wp.tau_wp])
        if n_rays == 1
        else wp.delay + np.linspace(0.0, wp.tau_wp, n_rays)
    )
    h = line.dt_magic * max(1.0, line.n_cells / 1024.0)
    rays = []
    t_hi = 0.0
    for s in entries:
        res = trace_point(s, line, cp, v_front=v_front,
                          front_model=front_model, step=h)
        # downsample the exact traced path for rendering
        n_seg = 200
        tt = np.linspace(res.entry_time, res.exit_time, n_seg)
        if cp is not None:
            v_sig = _signed_front_velocity(line, cp, v_front)
            ts_p, xs_p, _ = _integrate(s, line, cp, v_front, v_sig, h)
            xx = np.interp(tt, ts_p, xs_p)
        else:
            xx = line.v0 * (tt - s)
        xx[0], xx[-1] = 0.0, line.length
        rays.append(DiagramRay(
            entry_time=float(s), times=tt, positions=xx,
            omega_ratio=res.omega_ratio,
        ))
        t_hi = max(t_hi, res.exit_time)
    if cp is not None:
        t_hi = max(t_hi, cp.delay + cp.duration + line.tau_p)
    t_lo = min(0.0, float(entries.min()))
    times = np.linspace(t_lo, t_hi, nt)
    positions = np.linspace(0.0, line.length, nx)
    if cp is not None:
        grid = cp_current(line, cp, positions[None, :], times[:, None], v_front)
    else:
        grid = np.zeros((nt, nx))
    return SpacetimeDiagram(
        times=times, positions=positions, cp_current=grid, rays=tuple(rays)
    )


def write_diagram_csv(path, diagram: SpacetimeDiagram) -> None:
    """Pulse-field grid as CSV (first column t, header row x)."""
    header = "t_s," + ",".join(f"{x:.9g}" for x in diagram.positions)
    body = np.column_stack([diagram.times, diagram.cp_current])
    np.savetxt(path, body, delimiter=",", header=header, comments="", fmt="%.9g")


def write_rays_csv(path, diagram: SpacetimeDiagram) -> None:
    with open(path, "w") as fh:
        fh.write("entry_time_s,time_s,position_m,omega_ratio\n")
        for ray in diagram.rays:
            for tk, xk in zip(ray.times, ray.positions):
                fh.write(
                    f"{ray.entry_time:.9e},{tk:.9e},{xk:.9e},"
                    f"{ray.omega_ratio:.9e}\n"
                )


__all__ = [
    "FrontCrossing",
    "RayResult",
    "Condition",
    "cp_current",
    "trace_point",
    "predict_instantaneous",
    "condition_boundaries",
    "classify_condition",
    "DiagramRay",
    "SpacetimeDiagram",
    "spacetime_diagram",
    "write_diagram_csv",
    "write_rays_csv",
]
