import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charfol.convexity import check_convexity, periodicity_obstruction, verify_witness
from charfol.leaves import return_map
from charfol.profiles import custom_profile, make_profile

TWO_PI = 2 * math.pi


def sine_profile():
    return custom_profile(lambda y: -np.sin(TWO_PI * np.asarray(y, float)),
                          lambda y: -TWO_PI * np.cos(TWO_PI * np.asarray(y, float)), "-sin")


@pytest.mark.parametrize("eps, delta, seed", [(0.1, 0.025, 0), (0.05, 0.0125, 1), (0.02, 0.005, 2)])
def test_c_eps_is_convex(eps, delta, seed):
    rep = check_convexity(make_profile("C_eps", eps, delta, seed))
    assert rep.verdict == "convex"
    assert rep.orbits["C1"].derivative == pytest.approx(math.exp(-1), abs=1e-7)
    assert not rep.orbits["C2"].degenerate


def test_f_infty_not_convex():
    rep = check_convexity(make_profile("f_infty"))
    assert rep.verdict == "non_convex"
    assert rep.orbits["C1"].derivative == pytest.approx(1.0, abs=1e-9)
    assert rep.obstruction["orbit"] == "C1" and rep.obstruction["holds"]


def test_zero_profile_not_convex():
    zero = custom_profile(lambda y: 0 * np.asarray(y, float), lambda y: 0 * np.asarray(y, float))
    rep = check_convexity(zero)
    assert rep.verdict == "non_convex"
    assert rep.obstruction["orbit_y"] == 0.0


def test_obstruction_trial_means_vanish():
    obs = periodicity_obstruction(make_profile("f_infty"), 0.0)
    assert all(abs(v) < 1e-12 for v in obs["trial_mean_E"].values())


def test_report_serialises():
    d = check_convexity(make_profile("C_eps", 0.1, 0.025, 0)).to_dict()
    assert d["verdict"] == "convex" and set(d["orbits"]) == {"C1", "C2"}


@given(st.floats(0.01, 0.24), st.integers(0, 50))
def test_fixed_orbit_derivative(eps, seed):
    prof = make_profile("C_tilde_eps", eps, eps / 4, seed)
    r = return_map(prof, 0.0)
    assert r.derivative == pytest.approx(math.exp(float(prof.df(0.0))), abs=1e-7)


def test_sine_witness_holds():
    res = verify_witness(sine_profile(), lambda x, y: -np.cos(TWO_PI * y))
    assert res.holds
    assert res.min_margin == pytest.approx(TWO_PI, abs=1e-6)


def test_sine_constant_witness_fails():
    res = verify_witness(sine_profile(), lambda x, y: np.ones_like(x))
    assert not res.holds
    assert res.min_margin == pytest.approx(-TWO_PI, abs=1e-9)
    assert res.argmin[1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("u", [
    lambda x, y: np.ones_like(x),
    lambda x, y: 1 + 0.5 * np.sin(TWO_PI * x),
    lambda x, y: 2 + np.cos(TWO_PI * x) + 0.3 * np.cos(TWO_PI * y),
])
def test_f_infty_every_witness_fails(u):
    prof = make_profile("f_infty")
    assert not verify_witness(prof, u).holds
    # on the degenerate orbit E reduces to -u_x, whose minimum is never positive
    x = np.linspace(-0.5, 0.5, 512, endpoint=False)
    h = 1e-6
    E = -(u(x + h, 0 * x) - u(x - h, 0 * x)) / (2 * h)
    assert E.min() <= 1e-9


@given(st.floats(0.1, 10.0))
def test_witness_scaling(k):
    prof = sine_profile()
    u = lambda x, y: -np.cos(TWO_PI * y)
    a = verify_witness(prof, u, grid=64)
    b = verify_witness(prof, lambda x, y: k * u(x, y), grid=64)
    assert a.holds == b.holds
    assert b.min_margin == pytest.approx(k * a.min_margin, rel=1e-6)
