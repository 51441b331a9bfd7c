import numpy as np
import pytest
from hypothesis import given, strategies as st

from charfol.bumps import (MAX_STEP_SLOPE, flat_top_bump, hammer_ramp, psi, ramp, smooth_step,
                           smooth_step_deriv, window)

unit = st.floats(-2.0, 3.0, allow_nan=False)


def test_psi_vanishes_off_positive_axis():
    x = np.array([-1.0, -1e-3, 0.0, 1.0])
    out = psi(x)
    assert np.all(out[:3] == 0.0)
    assert out[3] == pytest.approx(np.exp(-0.6))


@pytest.mark.parametrize("x, expected", [(-0.5, 0.0), (0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (7.0, 1.0)])
def test_smooth_step_values(x, expected):
    assert float(smooth_step(x)) == pytest.approx(expected, abs=1e-15)


def test_smooth_step_max_slope():
    x = np.linspace(0, 1, 200_001)
    assert smooth_step_deriv(x).max() == pytest.approx(MAX_STEP_SLOPE, abs=1e-4)


def test_derivative_matches_difference_quotient():
    x = np.linspace(0.01, 0.99, 97)
    h = 1e-6
    fd = (smooth_step(x + h) - smooth_step(x - h)) / (2 * h)
    assert np.max(np.abs(fd - smooth_step_deriv(x))) < 1e-7


@given(unit, unit)
def test_smooth_step_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert smooth_step(lo) <= smooth_step(hi)


@given(st.floats(0.0, 1.0))
def test_smooth_step_symmetry(x):
    assert float(smooth_step(x) + smooth_step(1 - x)) == pytest.approx(1.0, abs=1e-14)


def test_ramp_scales_derivative():
    v, d = ramp(np.array([0.5]), 0.0, 2.0)
    assert v[0] == pytest.approx(smooth_step(0.25))
    assert d[0] == pytest.approx(smooth_step_deriv(0.25) / 2)


def test_hammer_ramp_shape():
    t = np.linspace(-1, 2, 3001)
    v, _ = hammer_ramp(t, 0.0, 1.0, 0.1)
    assert np.all(v[(t <= -0.1) | (t >= 1.1)] == 0)
    assert np.all(v[(t >= 0.1) & (t <= 0.9)] == 1)
    assert np.all(v[(t > -0.1 + 1e-9) & (t < 1.1 - 1e-9)] > 0)


def test_flat_top_bump_shape():
    t = np.linspace(-0.2, 0.2, 4001)
    v, d = flat_top_bump(t, 0.1)
    assert np.all(v[np.abs(t) >= 0.1] == 0)
    assert np.all(v[np.abs(t) <= 0.05] == 1)
    assert np.all(v[np.abs(t) < 0.1 - 1e-9] > 0)
    assert np.all(d[t > 0] <= 0) and np.all(d[t < 0] >= 0)


@given(st.floats(-1.0, 1.0))
def test_window_support(t):
    v, _ = window(t, -0.3, 0.4)
    if -0.3 < t < 0.4:
        assert v > 0
    else:
        assert v == 0
    assert v <= 1.0
