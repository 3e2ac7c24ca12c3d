import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dopplerline.core import LineModel, default_line
from dopplerline.errors import (
    CriticalCurrentExceeded,
    SingularInterface,
    ValidationError,
)
from dopplerline.line_model import (
    Crossing,
    characteristic_impedance,
    compose_doppler,
    doppler_ratio,
    exact_front_shift,
    kinetic_inductance,
    phase_velocity,
    phase_velocity_approx,
    shift_from_current,
    sweep_shift_points,
)

LINE = default_line()

# frozen oracles, hand-computed once from the quadratic inductance law:
#   L(1.62mA) = 8.33333e-6 * (1 + (1.62/6.15)^2)        = 8.91156e-6 H/m
#   Z(1.62mA) = 50 * sqrt(1 + (1.62/6.15)^2)            = 51.7056 ohm
#   df(4GHz, 1.62mA) = -(4e9/4) * (1.62/6.15)^2         = -69.3872 MHz
#   df(4GHz, 2.03mA) = -(4e9/4) * (2.03/6.15)^2         = -108.954 MHz
L_AT_162 = 8.91156e-6
Z_AT_162 = 51.7056
DF_AT_162 = -69.3872e6
DF_AT_203 = -108.954e6


def test_kinetic_inductance_frozen():
    assert kinetic_inductance(1.62e-3, LINE) == pytest.approx(L_AT_162, rel=1e-5)


def test_kinetic_inductance_quartic_term():
    line = default_line(c4=0.1)
    x = (1.62e-3 / 6.15e-3) ** 2
    expect = LINE.l0 * (1 + x + 0.1 * x * x)
    assert kinetic_inductance(1.62e-3, line) == pytest.approx(expect, rel=1e-12)


def test_kinetic_inductance_rejects_critical():
    with pytest.raises(CriticalCurrentExceeded):
        kinetic_inductance(2.5e-3, LINE)
    with pytest.raises(CriticalCurrentExceeded):
        kinetic_inductance(-2.6e-3, LINE)


def test_characteristic_impedance_frozen():
    assert characteristic_impedance(1.62e-3, LINE) == pytest.approx(Z_AT_162, rel=1e-5)
    # device-sheet rounded value
    assert abs(characteristic_impedance(1.62e-3, LINE) - 51.72) < 0.05


def test_josephson_chain_velocity():
    line = default_line(model=LineModel.JOSEPHSON_CHAIN)
    # v = v0 * (1 - (i/i_crit)^2)^(1/4) at i = 1.0 mA, i_crit = 2.5 mA
    expect = LINE.v0 * (1 - 0.16) ** 0.25
    assert phase_velocity(1.0e-3, line) == pytest.approx(expect, rel=1e-12)


def test_doppler_ratio_frozen():
    # counter-propagating front at -v0 into a region at 0.9 v0:
    # (1 - (-1)/1) / (1 - (-1)/0.9) = 2 / (1 + 1/0.9) = 18/19
    assert doppler_ratio(-1.0, 1.0, 0.9) == pytest.approx(18.0 / 19.0, rel=1e-12)


def test_doppler_ratio_singular_and_invalid():
    with pytest.raises(SingularInterface):
        doppler_ratio(0.9, 1.0, 0.9)
    with pytest.raises(ValidationError):
        doppler_ratio(0.5, -1.0, 0.9)


def test_shift_from_current_frozen():
    w4 = 2 * math.pi * 4e9
    assert shift_from_current(w4, 1.62e-3, LINE) / (2 * math.pi) == pytest.approx(
        DF_AT_162, rel=1e-5
    )
    assert shift_from_current(w4, 2.03e-3, LINE) / (2 * math.pi) == pytest.approx(
        DF_AT_203, rel=1e-5
    )


def test_shift_quartic_correction():
    line = default_line(c4=0.2)
    w = 2 * math.pi * 4e9
    x = (2.0e-3 / 6.15e-3) ** 2
    expect = -(w / 4.0) * (x + 0.2 * x * x)
    assert shift_from_current(w, 2.0e-3, line) == pytest.approx(expect, rel=1e-12)


def test_exact_front_shift_signs():
    w = 2 * math.pi * 4e9
    red = exact_front_shift(w, 1.62e-3, LINE, sense="rising")
    blue = exact_front_shift(w, 1.62e-3, LINE, sense="falling")
    assert red < 0 < blue
    # rising: ratio = 2 / (1 + sqrt(1 + x)); frozen at 1.62 mA
    x = (1.62e-3 / 6.15e-3) ** 2
    expect = w * (2.0 / (1.0 + math.sqrt(1.0 + x)) - 1.0)
    assert red == pytest.approx(expect, rel=1e-10)


def test_sweep_shift_points_vectorized():
    w = 2 * math.pi * 4e9
    amps = np.array([0.5e-3, 1.0e-3, 1.62e-3])
    out = sweep_shift_points(w, amps, LINE)
    assert out.shape == amps.shape
    assert out[2] / (2 * math.pi) == pytest.approx(DF_AT_162, rel=1e-5)


def test_compose_doppler_piecewise():
    w = 2 * math.pi * 4e9
    out = compose_doppler(w, [Crossing(-1.0, 1.0, 0.9), Crossing(-1.0, 0.9, 1.0)])
    assert out == pytest.approx(w, rel=1e-12)
    # tuple spelling is equivalent
    out2 = compose_doppler(w, [(-1.0, 1.0, 0.9), (-1.0, 0.9, 1.0)])
    assert out2 == pytest.approx(out, rel=1e-12)


# ---- property tests ----

currents = st.floats(min_value=-2.4e-3, max_value=2.4e-3)
small_currents = st.floats(min_value=1e-6, max_value=0.615e-3)
speeds = st.floats(min_value=0.5, max_value=1.5)


@given(v=st.floats(min_value=-0.45, max_value=0.45), a=speeds, b=speeds)
def test_doppler_reciprocity(v, a, b):
    # crossing back restores the frequency exactly
    r1 = doppler_ratio(v, a, b)
    r2 = doppler_ratio(v, b, a)
    assert r1 * r2 == pytest.approx(1.0, rel=1e-12)


@given(i=currents)
def test_velocity_even_and_bounded(i):
    v = phase_velocity(i, LINE)
    assert 0 < v <= LINE.v0
    assert v == pytest.approx(phase_velocity(-i, LINE), rel=1e-12)


@given(i1=st.floats(min_value=0.0, max_value=2.3e-3), di=st.floats(min_value=1e-5, max_value=1e-4))
def test_velocity_monotone_decreasing(i1, di):
    assert phase_velocity(i1 + di, LINE) < phase_velocity(i1, LINE)


@given(i=currents, w=st.floats(min_value=1e9, max_value=1e11))
def test_shift_parity_and_linearity(i, w):
    s = shift_from_current(w, i, LINE)
    assert s <= 0
    assert s == pytest.approx(shift_from_current(w, -i, LINE), rel=1e-12)
    assert shift_from_current(2 * w, i, LINE) == pytest.approx(2 * s, rel=1e-12)


@given(i=small_currents)
@settings(max_examples=200)
def test_exact_front_shift_matches_quadratic_small_signal(i):
    # composing the velocity law with the interface ratio reproduces the
    # quadratic amplitude law to 1% for |i| <= 0.1 i_star
    w = 2 * math.pi * 4e9
    exact = exact_front_shift(w, i, LINE, sense="rising")
    quad = shift_from_current(w, i, LINE)
    assert exact == pytest.approx(quad, rel=1e-2)


@given(i=small_currents)
def test_velocity_approx_small_signal(i):
    exact = phase_velocity(i, LINE)
    approx = phase_velocity_approx(i, LINE)
    assert abs(exact - approx) / LINE.v0 < 1e-4
