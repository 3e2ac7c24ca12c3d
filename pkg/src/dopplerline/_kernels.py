"""Hot leapfrog loops, numba-compiled when available.

The numpy fallback is the executable reference: both backends implement
the same update order (currents at half steps, then voltages, then the
matched Thevenin port nodes) and must agree to rounding error.  Status
codes: 0 ok, 1 critical current reached, 2 non-finite field.
"""
from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised indirectly via backend tests
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco

OK = 0
CRITICAL = 1
NONFINITE = 2

MODEL_KINETIC = 0
MODEL_JOSEPHSON = 1


@njit(cache=True, fastmath=True)
def _run_numba(v, cur, vs_l, vs_r, n_steps, z0, coef_v, dt_over_dx,
               l0, inv_i2, c4, i_crit2, model,
               out_l, out_r, snap_stride, snap_v, snap_i):
    n_nodes = v.shape[0]
    n_br = cur.shape[0]
    status = OK
    step_at = -1
    n_snap = 0
    peak2 = 0.0
    if snap_stride > 0:
        for k in range(n_nodes):
            snap_v[0, k] = v[k]
        for k in range(n_br):
            snap_i[0, k] = cur[k]
        n_snap = 1
    out_l[0] = (v[0] - 0.5 * vs_l[0]) / z0
    out_r[0] = (v[n_nodes - 1] - 0.5 * vs_r[0]) / z0
    for n in range(n_steps):
        m = 0.0
        if model == MODEL_KINETIC:
            for k in range(n_br):
                ik = cur[k]
                x = ik * ik * inv_i2
                lk = l0 * (1.0 + x + c4 * x * x)
                ik = ik + dt_over_dx * (v[k] - v[k + 1]) / lk
                cur[k] = ik
                a = ik * ik
                if a > m:
                    m = a
        else:
            for k in range(n_br):
                ik = cur[k]
                arg = 1.0 - ik * ik / i_crit2
                if arg <= 0.0:
                    status = CRITICAL
                    break
                lk = l0 / np.sqrt(arg)
                ik = ik + dt_over_dx * (v[k] - v[k + 1]) / lk
                cur[k] = ik
                a = ik * ik
                if a > m:
                    m = a
            if status != OK:
                step_at = n + 1
                break
        if m > peak2:
            peak2 = m
        if not np.isfinite(m):
            status = NONFINITE
            step_at = n + 1
            break
        if m >= i_crit2:
            status = CRITICAL
            step_at = n + 1
            break
        for k in range(1, n_nodes - 1):
            v[k] = v[k] + coef_v * (cur[k - 1] - cur[k])
        v[0] = 0.5 * (vs_l[n] + vs_l[n + 1]) - z0 * cur[0]
        v[n_nodes - 1] = 0.5 * (vs_r[n] + vs_r[n + 1]) + z0 * cur[n_br - 1]
        out_l[n + 1] = (v[0] - 0.5 * vs_l[n + 1]) / z0
        out_r[n + 1] = (v[n_nodes - 1] - 0.5 * vs_r[n + 1]) / z0
        if snap_stride > 0 and (n + 1) % snap_stride == 0:
            for k in range(n_nodes):
                snap_v[n_snap, k] = v[k]
            for k in range(n_br):
                snap_i[n_snap, k] = cur[k]
            n_snap += 1
    return status, step_at, n_snap, np.sqrt(peak2)


def _run_numpy(v, cur, vs_l, vs_r, n_steps, z0, coef_v, dt_over_dx,
               l0, inv_i2, c4, i_crit2, model,
               out_l, out_r, snap_stride, snap_v, snap_i):
    status = OK
    step_at = -1
    n_snap = 0
    peak2 = 0.0
    if snap_stride > 0:
        snap_v[0] = v
        snap_i[0] = cur
        n_snap = 1
    out_l[0] = (v[0] - 0.5 * vs_l[0]) / z0
    out_r[0] = (v[-1] - 0.5 * vs_r[0]) / z0
    for n in range(n_steps):
        if model == MODEL_KINETIC:
            x = cur * cur * inv_i2
            lk = l0 * (1.0 + x + c4 * x * x)
        else:
            arg = 1.0 - cur * cur / i_crit2
            if np.any(arg <= 0.0):
                return CRITICAL, n + 1, n_snap, float(np.sqrt(peak2))
            lk = l0 / np.sqrt(arg)
        cur += dt_over_dx * (v[:-1] - v[1:]) / lk
        m = float(np.max(cur * cur))
        peak2 = max(peak2, m)
        if not np.isfinite(m):
            return NONFINITE, n + 1, n_snap, float(np.sqrt(peak2))
        if m >= i_crit2:
            return CRITICAL, n + 1, n_snap, float(np.sqrt(peak2))
        v[1:-1] += coef_v * (cur[:-1] - cur[1:])
        v[0] = 0.5 * (vs_l[n] + vs_l[n + 1]) - z0 * cur[0]
        v[-1] = 0.5 * (vs_r[n] + vs_r[n + 1]) + z0 * cur[-1]
        out_l[n + 1] = (v[0] - 0.5 * vs_l[n + 1]) / z0
        out_r[n + 1] = (v[-1] - 0.5 * vs_r[n + 1]) / z0
        if snap_stride > 0 and (n + 1) % snap_stride == 0:
            snap_v[n_snap] = v
            snap_i[n_snap] = cur
            n_snap += 1
    return status, step_at, n_snap, float(np.sqrt(peak2))


def run_loop(backend: str, *args):
    if backend == "numba":
        return _run_numba(*args)
    return _run_numpy(*args)
