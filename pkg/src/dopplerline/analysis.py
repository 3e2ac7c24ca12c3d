"""Estimators on down-converted records.

Magnitude maps over a demodulation-frequency scan, parabola-vertex carrier
estimates, global shifts, the amplitude-sweep fit that recovers the scaling
current, envelope comparison, delay-sweep merging and multi-packet
averaging.  Everything here is a pure function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Waveform
from .ddc import FilterSpec, down_convert
from .errors import (
    AlignmentFailed,
    FitDiverged,
    InsufficientSupport,
    SignError,
    ValidationError,
)

_DEF_WINDOW = 0.7


def _check_axis(name, axis):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 1:
        raise ValidationError(f"{name} must be a 1-d sequence")
    if axis.size > 1 and not np.all(np.diff(axis) > 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return axis


@dataclass(frozen=True)
class MagnitudeMap:
    """|IQ| versus demodulation frequency and time.

    ``values[i, j]`` is the magnitude at ``f_d_axis[i]``, ``t_axis[j]``.
    The same container holds merged delay sweeps, with ``t_axis`` carrying
    the packet-to-pulse delays instead of record time.
    """

    f_d_axis: np.ndarray
    t_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f_d_axis", _check_axis("f_d_axis", self.f_d_axis))
        object.__setattr__(self, "t_axis", _check_axis("t_axis", self.t_axis))
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.f_d_axis.size, self.t_axis.size):
            raise ValidationError(
                "values must have shape (len(f_d_axis), len(t_axis))"
            )
        if not np.all(np.isfinite(values)) or values.min() < 0:
            raise ValidationError("values must be finite and non-negative")
        object.__setattr__(self, "values", values)

    def cut_at(self, t_cut: float) -> np.ndarray:
        """Fixed-time column nearest to ``t_cut``."""
        j = int(np.argmin(np.abs(self.t_axis - t_cut)))
        return self.values[:, j]


@dataclass(frozen=True)
class ShiftFit:
    """Amplitude-sweep fit result for dw = a*i^2 + b*i^4."""

    i_star_hat: float
    c4_hat: float
    residual_rms: float  # rad/s
    covariance: tuple[float, float] = (0.0, 0.0)  # var(i_star_hat), var(c4_hat)

    def __post_init__(self):
        if not self.i_star_hat > 0:
            raise ValidationError("i_star_hat must be positive")


def magnitude_map(
    run_output: Waveform,
    f_d_list,
    filt: FilterSpec | None = None,
    target_rate: float = 0.5e9,
) -> MagnitudeMap:
    """Down-convert one record at each frequency in ``f_d_list`` and stack
    the magnitudes."""
    f_d = _check_axis("f_d_list", f_d_list)
    rows = []
    t_axis = None
    for f in f_d:
        trace = down_convert(run_output, float(f), filter_spec=filt,
                             target_rate=target_rate)
        if t_axis is None:
            t_axis = trace.times()
        rows.append(np.abs(trace.iq))
    return MagnitudeMap(f_d_axis=f_d, t_axis=t_axis, values=np.vstack(rows))


def fit_parabola_peak(
    mag_map: MagnitudeMap, t_cut: float, window: float = _DEF_WINDOW
) -> float:
    """Vertex frequency of a quadratic fit to the top of a fixed-time cut.

    Points with magnitude >= ``window`` * max of the cut enter the fit; the
    vertex must land inside that band.
    """
    if not 0 < window <= 1:
        raise ValidationError("window must lie in (0, 1]")
    cut = mag_map.cut_at(t_cut)
    peak = cut.max()
    if peak <= 0:
        raise InsufficientSupport("cut is identically zero")
    sel = cut >= window * peak
    if sel.sum() < 5:
        raise InsufficientSupport(
            f"only {int(sel.sum())} points above {window:.2f} of max (need 5)"
        )
    f = mag_map.f_d_axis[sel]
    m = cut[sel]
    # center and scale the abscissa for conditioning
    f0, fs = f.mean(), max(np.ptp(f), 1.0)
    u = (f - f0) / fs
    coef = np.polynomial.polynomial.polyfit(u, m, 2)
    if coef[2] >= 0:
        raise FitDiverged("cut is not concave around its maximum")
    vertex = f0 + fs * (-coef[1] / (2.0 * coef[2]))
    if not f.min() <= vertex <= f.max():
        raise FitDiverged("vertex fell outside the fitted band")
    return float(vertex)


def global_shift(f_out: float, f_in: float) -> float:
    """Global frequency shift, output minus input."""
    return f_out - f_in


def fit_amplitude_sweep(points, omega_in: float) -> ShiftFit:
    """Least squares of dw = a*i^2 + b*i^4 over (i_cp, dw) pairs.

    ``a`` maps to the scaling current through a = -omega_in/(4*i_star^2)
    and ``b`` to the quartic coefficient through b = -omega_in*c4/(4*i_star^4).
    Parameter variances come from the linear-fit covariance propagated
    through those mappings.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("points must be a sequence of (i_cp, dw) pairs")
    if pts.shape[0] < 6:
        raise ValidationError("need at least 6 sweep points")
    i_cp, dw = pts[:, 0], pts[:, 1]
    if np.any(i_cp <= 0):
        raise ValidationError("i_cp values must be positive")
    if i_cp.max() < 4.0 * i_cp.min():
        raise ValidationError("sweep must span at least a factor 4 in i_cp")
    if not omega_in > 0:
        raise ValidationError("omega_in must be positive")

    s2, s4 = i_cp.max() ** 2, i_cp.max() ** 4
    design = np.column_stack([i_cp**2 / s2, i_cp**4 / s4])
    sol, *_ = np.linalg.lstsq(design, dw, rcond=None)
    a, b = sol[0] / s2, sol[1] / s4
    if a >= 0:
        raise SignError("no redshift trend: fitted quadratic term is >= 0")
    i_star_hat = float(np.sqrt(-omega_in / (4.0 * a)))
    c4_hat = float(-4.0 * b * i_star_hat**4 / omega_in)

    resid = dw - design @ sol
    dof = max(pts.shape[0] - 2, 1)
    sigma2 = float(resid @ resid) / dof
    gram_inv = np.linalg.inv(design.T @ design)
    cov_scaled = sigma2 * gram_inv
    # back to unscaled (a, b), then delta method to (i_star, c4)
    scale = np.diag([1.0 / s2, 1.0 / s4])
    cov_ab = scale @ cov_scaled @ scale
    di_da = -i_star_hat / (2.0 * a)
    dc_db = -4.0 * i_star_hat**4 / omega_in
    dc_da = -16.0 * b * i_star_hat**3 / omega_in * di_da
    jac = np.array([[di_da, 0.0], [dc_da, dc_db]])
    cov_out = jac @ cov_ab @ jac.T
    return ShiftFit(
        i_star_hat=i_star_hat,
        c4_hat=c4_hat,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        covariance=(float(cov_out[0, 0]), float(cov_out[1, 1])),
    )


def _parabolic_peak_offset(c: np.ndarray, k: int) -> float:
    if 0 < k < c.size - 1:
        denom = c[k - 1] - 2.0 * c[k] + c[k + 1]
        if denom < 0:
            return 0.5 * (c[k - 1] - c[k + 1]) / denom
    return 0.0


def envelope_compare(ref: Waveform, shifted: Waveform):
    """Align two envelope magnitudes and report their relative difference.

    ``shifted`` is resampled onto the reference grid, aligned by
    cross-correlation (with sub-sample refinement), and differenced
    pointwise as (shifted - ref)/peak(ref).  The returned max is taken
    over samples where ref >= 10 % of its peak; the returned Waveform
    carries the full pointwise difference on the reference grid.
    """
    r = np.abs(ref.samples)
    peak = r.max()
    if peak <= 0:
        raise AlignmentFailed("reference envelope is identically zero")
    s_src = np.abs(shifted.samples)
    if s_src.max() <= 0:
        raise AlignmentFailed("shifted envelope is identically zero")
    t_ref = ref.times()
    s = np.interp(t_ref, shifted.times(), s_src, left=0.0, right=0.0)
    if s.max() <= 0:
        raise AlignmentFailed("envelope supports do not overlap")

    c = np.correlate(s, r, mode="full")
    k = int(np.argmax(c))
    lag = (k - (r.size - 1)) + _parabolic_peak_offset(c, k)
    dt = t_ref[1] - t_ref[0] if t_ref.size > 1 else 0.0
    aligned = np.interp(t_ref, t_ref - lag * dt, s, left=0.0, right=0.0)

    mask = r >= 0.1 * peak
    if aligned[mask].max() <= 0:
        raise AlignmentFailed("no overlap after alignment")
    diff = (aligned - r) / peak
    max_rel = float(np.abs(diff[mask]).max())
    return Waveform(ref.sample_rate, ref.t0, diff), max_rel


def merge_delay_sweep(per_delay_cuts, f_d_axis) -> MagnitudeMap:
    """Stack fixed-time cuts from a delay sweep into one map over
    (f_d, delay), ordered by delay regardless of input order."""
    f_d = _check_axis("f_d_axis", f_d_axis)
    items = list(per_delay_cuts)
    if not items:
        raise ValidationError("per_delay_cuts is empty")
    delays = np.array([float(d) for d, _ in items])
    cuts = []
    for d, cut in items:
        cut = np.asarray(cut, dtype=float)
        if cut.shape != (f_d.size,):
            raise ValidationError(
                f"cut at delay {d!r} does not match the f_d axis"
            )
        cuts.append(cut)
    order = np.argsort(delays)
    return MagnitudeMap(
        f_d_axis=f_d,
        t_axis=delays[order],
        values=np.column_stack([cuts[j] for j in order]),
    )


def average_instantaneous(per_packet) -> float:
    """Arithmetic mean of per-packet instantaneous shifts at one delay."""
    vals = np.asarray(list(per_packet), dtype=float)
    if vals.size == 0:
        raise ValidationError("need at least one packet")
    return float(vals.mean())


def write_magnitude_csv(path, mag_map: MagnitudeMap,
                        t_label: str = "t_s") -> None:
    """CSV with a header row of f_d values and one row per time sample."""
    header = t_label + "," + ",".join(f"{f:.9g}" for f in mag_map.f_d_axis)
    body = np.column_stack([mag_map.t_axis, mag_map.values.T])
    np.savetxt(path, body, delimiter=",", header=header, comments="",
               fmt="%.9g")


def read_magnitude_csv(path) -> MagnitudeMap:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    f_d = np.array([float(tok) for tok in header[1:]])
    body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return MagnitudeMap(f_d_axis=f_d, t_axis=body[:, 0], values=body[:, 1:].T)


def format_shift_fit(fit: ShiftFit) -> str:
    """Flat key/value text block."""
    lines = [
        f"i_star_hat_a = {fit.i_star_hat:.9e}",
        f"c4_hat = {fit.c4_hat:.9e}",
        f"residual_rms_rad_s = {fit.residual_rms:.9e}",
        f"var_i_star_hat = {fit.covariance[0]:.9e}",
        f"var_c4_hat = {fit.covariance[1]:.9e}",
    ]
    return "\n".join(lines) + "\n"


__all__ = [
    "MagnitudeMap",
    "ShiftFit",
    "magnitude_map",
    "fit_parabola_peak",
    "global_shift",
    "fit_amplitude_sweep",
    "envelope_compare",
    "merge_delay_sweep",
    "average_instantaneous",
    "write_magnitude_csv",
    "read_magnitude_csv",
    "format_shift_fit",
]
