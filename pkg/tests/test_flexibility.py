import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charfol.flexibility import (CutoffError, InductionError, LeafTransport, Partition, StageIsotopy,
                                 build_cutoff, build_partition, canonical_pair, flight_time, phi_tau,
                                 run_induction, slope_check, stage_displacement, stage_psi, support_check)
from charfol.profiles import make_profile

EPS = 0.04


@pytest.fixture(scope="module")
def stage():
    f0, f1 = canonical_pair(EPS, 0)
    return StageIsotopy(f0, f1, EPS)


@pytest.fixture(scope="module")
def near_linear_pair():
    # same class and scale, slightly different blends: the explicit core branch is reachable
    f0 = make_profile("C_eps", EPS, EPS / 4, params={"k": 0.6})
    f1 = make_profile("C_eps", EPS, EPS / 4, params={"k": 0.62})
    return f0, f1


# partition and cutoff -----------------------------------------------------------


def test_partition_lengths_at_004():
    p = build_partition(0.04)
    v = p.verify()
    assert v["disjoint"] and p.overlap() == 0.0
    assert max(p.gap_lengths()) < 0.2
    assert max(p.complement_lengths(0) + p.complement_lengths(1)) < 0.6


@given(st.floats(1e-4, 0.2499))
def test_partition_invariants(eps):
    v = build_partition(eps).verify()
    assert v["disjoint"] and v["gap_ok"] and v["complement_ok"]
    # 10% slack on every length constraint
    r = math.sqrt(eps)
    assert v["max_gap"] <= 0.9 * r + 1e-12
    assert max(v["max_complement_T0"], v["max_complement_T1"]) <= 2.7 * r + 1e-12


def test_partition_rejects_eps():
    with pytest.raises(ValueError):
        build_partition(0.3)


def test_cutoff_examples():
    cut = build_cutoff(EPS)
    x = np.linspace(0, 1, 4001, endpoint=False)
    assert np.all(cut.lam(x, 0.0) == 0.0)
    assert np.all(cut.lam(x, 1.0) == 1.0)
    for a, b in cut.partition.T1:
        xs = np.linspace(a, b, 17)
        assert np.all(cut.lam(xs, 0.75) == 1.0)
    for a, b in cut.partition.T0:
        xs = np.linspace(a, b, 17)
        assert np.all(cut.lam(xs, 0.3) == 0.0)
    assert cut.verification["max_dlam_dx"] < 2 / math.sqrt(EPS)
    assert cut.sup_dlam_dx < 2 / math.sqrt(EPS)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_cutoff_range_and_derivative(x, tau):
    cut = build_cutoff(EPS, verify_grid=(16, 4))
    lam = float(cut.lam(x, tau))
    assert 0.0 <= lam <= 1.0
    h = 1e-7
    fd = (cut.lam(x + h, tau) - cut.lam(x - h, tau)) / (2 * h)
    assert abs(fd - cut.dlam_dx(x, tau)) < 1e-4


def test_cutoff_steep_ramp_rejected():
    p = Partition(EPS, [(0.0, 0.24), (0.5, 0.74)], [(0.25, 0.49), (0.75, 0.99)], 0.01, 0.5)
    with pytest.raises(CutoffError):
        build_cutoff(EPS, p)


# transport and phi ---------------------------------------------------------------------


def test_flight_time_linear_core():
    f0, _ = canonical_pair(EPS, 0)
    d = EPS / 4
    y = np.array([d / 2, d / 8, -d / 3])
    t_core = flight_time(f0.f, np.array([d, d, -d]), EPS)
    assert np.allclose(flight_time(f0.f, y, EPS) - t_core, np.log(d / np.abs(y)), rtol=1e-10)


def test_phi_identity_at_tau0(stage):
    x = np.linspace(0, 1, 7)
    y = np.linspace(-0.5, 0.49, 7)
    assert np.array_equal(stage.phi(0.0, x, y), y)


def test_phi_fixes_closed_orbits(stage):
    x = np.linspace(0, 1, 11)
    for tau in (0.25, 0.5, 1.0):
        assert np.all(stage.phi(tau, x, np.zeros_like(x)) == 0.0)
        assert np.all(stage.phi(tau, x, np.full_like(x, -0.5)) == -0.5)


def test_phi_tau_wrapper(stage):
    q = (np.array([0.1, 0.7]), np.array([0.01, -0.02]))
    out = phi_tau(stage.f0, stage.f1, stage.cutoff, 0.6, q)
    assert np.allclose(out[1], stage.phi(0.6, *q))
    assert np.array_equal(out[0], q[0])


def test_phi_linear_closed_form(near_linear_pair):
    f0, f1 = near_linear_pair
    iso = StageIsotopy(f0, f1, EPS)
    tr = iso.transport
    y = np.geomspace(1e-8, 0.9 * tr.delta_c, 200)
    y = y[tr.closed_form_valid(y)]
    assert len(y) > 10
    x = np.linspace(0, 1, len(y))
    c0, c1 = (math.exp(c) for c in tr.constants(1.0))
    lam = iso.cutoff.lam(x, 0.7)
    expected = (1 + (c1 - c0) / c0 * lam) * y
    assert np.allclose(iso.phi(0.7, x, y), expected, rtol=1e-12, atol=0)


@pytest.mark.parametrize("variant", ["C_eps_near", "C_tilde"])
def test_transport_agrees_with_closed_form(variant, near_linear_pair):
    if variant == "C_tilde":
        f0, f1 = canonical_pair(EPS, 0, "C_tilde")
    else:
        f0, f1 = near_linear_pair
    tr = LeafTransport(f0, f1, EPS)
    y = np.concatenate([np.geomspace(1e-6, tr.delta_c, 60, endpoint=False)])
    y = np.concatenate([y, -y])
    y = y[tr.closed_form_valid(y)]
    assert len(y) > 10
    assert np.allclose(tr.transport(y), tr.closed_form(y), rtol=1e-7, atol=0)


def test_m_continuous_across_branches(stage):
    tr = stage.transport
    y = np.geomspace(1e-6, 0.99 * EPS, 400)
    m = tr.m(y)
    assert np.all(np.diff(m) > 0)
    assert np.allclose(m[::40], tr.transport(y[::40]), rtol=1e-7)


def test_mismatched_classes():
    f0 = make_profile("C_eps", EPS, EPS / 4)
    g = make_profile("C_tilde_eps", EPS, EPS / 4)
    with pytest.raises(ValueError, match="mismatched"):
        LeafTransport(f0, g, EPS)
    with pytest.raises(ValueError):
        phi_tau(f0, g, build_cutoff(EPS), 0.5, (0.0, 0.01))


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_fibers_monotone(stage, x, tau):
    y = np.linspace(-0.5, 0.5, 301, endpoint=False)
    y = np.concatenate([y, EPS * np.linspace(-0.999, 0.999, 301)])
    y.sort()
    out = stage.phi(tau, np.full_like(y, x), y)
    assert np.all(np.diff(out) > 0)


# checks ------------------------------------------------------------------------------


@pytest.mark.parametrize("eps", [0.04, 0.01])
def test_slope_check_canonical(eps):
    f0, f1 = canonical_pair(eps, 0)
    rep = slope_check(StageIsotopy(f0, f1, eps), grid=(128, 128))
    assert rep.passed
    assert rep.max_slope < 3 * math.sqrt(eps)
    assert rep.majorant_violations == 0


def test_slope_check_identical_profiles():
    f0 = make_profile("C_eps", 0.01, 0.0025, 0)
    rep = slope_check(StageIsotopy(f0, f0, 0.01), grid=(64, 64))
    y = 0.01 * np.linspace(-1, 1, 20001)
    assert rep.passed
    assert rep.max_slope <= np.max(np.abs(f0.f(y))) + 1e-15
    assert rep.max_slope < 0.01


def test_support_identical_profiles():
    f0 = make_profile("C_eps", EPS, EPS / 4, 0)
    rep = support_check(f0, f0, EPS, StageIsotopy(f0, f0, EPS), n=64)
    assert rep.ok and rep.max_inside == 0.0 and rep.max_outside == 0.0


def test_support_canonical(stage):
    rep = support_check(stage.f0, stage.f1, EPS, stage, n=128)
    assert rep.ok
    assert rep.max_outside < 1e-12
    assert rep.max_inside > 1e-3


def test_stage_displacement_bound(stage):
    d = stage_displacement(stage, grid=(64, 64, 5))
    assert 0 < d <= 100 * math.sqrt(EPS)


def test_stage_psi(stage):
    rep, stages = stage_psi(stage, n_x=64, n_y=17)
    assert rep.is_psi
    assert rep.displacement_bound < 2 * 50 * math.sqrt(EPS)
    for st_, (lo, hi) in zip(stages, [(0.0, 0.5), (0.5, 1.0)]):
        assert tuple(st_.time_interval) == (lo, hi)
        for box in st_.support_sets:
            assert box.hi[2] == pytest.approx(3 * math.sqrt(EPS))


# induction ----------------------------------------------------------------------------


def test_run_induction_single_stage():
    res = run_induction(N=1, grid=(64, 64, 5), psi=False)
    (rec,) = res.records
    assert res.passed
    assert rec.eps_i < 0.25 / 4
    assert rec.clauses["slope_A"] and rec.clauses["slope_B"]
    assert rec.clauses["support_A"] and rec.clauses["support_B"]
    assert max(rec.displacement["A"], rec.displacement["B"]) <= 100 * math.sqrt(rec.eps_i)
    assert rec.sup_to_f_infty < rec.eps_i
    d = res.to_dict()
    assert d["params"]["c"] == pytest.approx(200 * math.sqrt(0.25))


def test_run_induction_strict_abort():
    with pytest.raises(InductionError) as info:
        run_induction(N=1, c=1e-6, grid=(32, 32, 3), psi=False)
    assert info.value.stage == 1 and info.value.clause == "c0_distance"


@pytest.mark.parametrize("kwargs", [{"N": 9}, {"N": 0}, {"C": 0.5}, {"C": -1.0}, {"c": -1.0}])
def test_run_induction_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        run_induction(**kwargs)
