"""Constitutive laws of the biased line and the front-conversion formulas.

All functions are scalar-or-array (numpy broadcasting); currents in amperes,
angular frequencies in rad/s, velocities in m/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import LineModel, LineSpec
from .errors import CriticalCurrentExceeded, SingularInterface, ValidationError


def _check_below_critical(i, line: LineSpec) -> None:
    if np.any(np.abs(i) >= line.i_crit):
        peak = float(np.max(np.abs(i)))
        raise CriticalCurrentExceeded(
            f"|i| = {peak:.4e} A reaches i_crit = {line.i_crit:.4e} A"
        )


def kinetic_inductance(i, line: LineSpec):
    """Per-unit-length inductance at bias current ``i``.

    Kinetic-inductance model: l0*(1 + (i/i_star)^2 + c4*(i/i_star)^4).
    Josephson-chain model: l0/sqrt(1 - (i/i_crit)^2) (matches the quarter-power
    velocity law below).
    """
    i = np.asarray(i, dtype=float)
    _check_below_critical(i, line)
    if line.model is LineModel.KINETIC_INDUCTANCE:
        x = (i / line.i_star) ** 2
        out = line.l0 * (1.0 + x + line.c4 * x * x)
    else:
        y = (i / line.i_crit) ** 2
        out = line.l0 / np.sqrt(1.0 - y)
    return out if out.ndim else float(out)


def phase_velocity(i, line: LineSpec):
    """Exact small-signal phase velocity at bias ``i``: 1/sqrt(L(i)*c)."""
    out = 1.0 / np.sqrt(np.asarray(kinetic_inductance(i, line)) * line.c)
    return out if out.ndim else float(out)


def phase_velocity_approx(i, line: LineSpec):
    """Leading-order expansion v0*(1 - i^2/(2 i_star^2)).

    Kept separate from `phase_velocity` on purpose: the conversion formulas
    are checked against both. The quartic coefficient does not enter at this
    order. Only meaningful for the kinetic-inductance model.
    """
    i = np.asarray(i, dtype=float)
    _check_below_critical(i, line)
    out = line.v0 * (1.0 - i**2 / (2.0 * line.i_star**2))
    return out if out.ndim else float(out)


def characteristic_impedance(i, line: LineSpec):
    """sqrt(L(i)/c); grows with bias, causing weak internal reflections."""
    out = np.sqrt(np.asarray(kinetic_inductance(i, line)) / line.c)
    return out if out.ndim else float(out)


def doppler_ratio(v: float, v1: float, v2: float) -> float:
    """Frequency ratio omega_2/omega_1 across a front moving at velocity ``v``.

    ``v1``/``v2`` are the wave phase velocities ahead of/behind the crossing
    (both positive, the wave's own propagation direction); ``v`` is signed,
    negative for a front moving against the wave.
    """
    if not (v1 > 0 and v2 > 0):
        raise ValidationError("phase velocities must be positive")
    if v == v2:
        raise SingularInterface(
            "front co-moving with the transmitted wave (v == v2)"
        )
    return (1.0 - v / v1) / (1.0 - v / v2)


@dataclass(frozen=True)
class Crossing:
    """One front crossing for `compose_doppler`."""

    v: float
    v1: float
    v2: float


def compose_doppler(omega_in: float, crossings: Iterable) -> float:
    """Apply a sequence of front crossings to a carrier.

    Each element is a Crossing or (v, v1, v2) tuple. A rising crossing
    followed by its exact mirror cancels identically (the ratios are
    reciprocal), which is the cancellation condition of the delay sweep.
    """
    omega = float(omega_in)
    for cr in crossings:
        if isinstance(cr, Crossing):
            v, v1, v2 = cr.v, cr.v1, cr.v2
        else:
            v, v1, v2 = cr
        omega *= doppler_ratio(v, v1, v2)
    return omega


def shift_from_current(omega_in: float, i_cp: float, line: LineSpec) -> float:
    """Leading-order conversion law: global angular shift for a packet that
    crossed a front of plateau current ``i_cp``.

    Negative for a rising-front (redshift) encounter; the falling-front
    blueshift is its mirror. Includes the quartic correction when the line
    has c4 != 0: delta_omega = -(omega/4) * (x + c4*x^2), x = (i_cp/i_star)^2.
    """
    _check_below_critical(np.asarray(i_cp, dtype=float), line)
    x = (np.asarray(i_cp, dtype=float) / line.i_star) ** 2
    out = -(omega_in / 4.0) * (x + line.c4 * x * x)
    return out if out.ndim else float(out)


def exact_front_shift(
    omega_in: float, i_cp: float, line: LineSpec, sense: str = "rising"
) -> float:
    """Conversion across a sharp counter-propagating front translating at v0.

    This is the two-formula composition (interface Doppler with exact
    velocities) without the small-signal expansion; `shift_from_current` is
    its leading order. ``sense`` picks which side of the pulse is crossed.
    """
    v0 = line.v0
    v2 = phase_velocity(i_cp, line)
    if sense == "rising":
        ratio = doppler_ratio(-v0, v0, v2)
    elif sense == "falling":
        ratio = doppler_ratio(-v0, v2, v0)
    else:
        raise ValidationError(f"unknown front sense {sense!r}")
    return omega_in * (ratio - 1.0)


def sweep_shift_points(
    omega_in: float, currents: Sequence[float], line: LineSpec
) -> np.ndarray:
    """Vectorized `shift_from_current` over an amplitude sweep."""
    return np.asarray(
        [shift_from_current(omega_in, i, line) for i in currents], dtype=float
    )


def launch_drive_current(i_line, line: LineSpec):
    """Incident-drive current needed to put ``i_line`` on the line.

    A matched port launching into the nonlinear line produces a simple
    wave, so the level reaching the line satisfies
    2*z0*i_drive = z0*i + integral_0^i Z(u) du rather than the static
    divider.  The correction is ~(i/i_star)^2/6, about 0.6 % at 2 mA.
    Vectorized and odd in ``i_line``; inverts to identity as i -> 0.
    """
    i_arr = np.asarray(i_line, dtype=float)
    _check_below_critical(i_arr, line)
    z0 = math.sqrt(line.l0 / line.c)
    peak = float(np.max(np.abs(i_arr), initial=0.0))
    if peak == 0.0:
        return i_arr if i_arr.ndim else 0.0
    grid = np.linspace(0.0, peak, 2049)
    z_int = np.concatenate(
        [[0.0], np.cumsum(np.diff(grid) * 0.5 * (
            characteristic_impedance(grid[1:], line)
            + characteristic_impedance(grid[:-1], line)
        ))]
    )
    drive_grid = (z0 * grid + z_int) / (2.0 * z0)
    out = np.sign(i_arr) * np.interp(np.abs(i_arr), grid, drive_grid)
    return out if out.ndim else float(out)
