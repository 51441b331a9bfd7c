import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from charfol.chart import ContactChart, Field, OneForm, contact_volume
from charfol.flows import (_pulled_back, CATALOGUE, Box, IsotopyStage, alpha_darboux, build_hammer, canonical_hammer,
                           catalogue, conformal_factor_check, flow_hammer, hamiltonian_field,
                           hammer_samples, psi_check, verify_hammer)

coord = st.floats(-1.0, 1.0)


def test_reeb_field():
    X = hamiltonian_field(CATALOGUE["one"], np.array([0.3, -0.2, 0.7]))
    assert np.array_equal(X, [0.0, 0.0, 1.0])


@given(coord, coord, coord)
def test_field_of_x(x, y, z):
    # H_y + x H_z = 0, -H_x = -1, H - x H_x = 0
    X = hamiltonian_field(CATALOGUE["x"], np.array([x, y, z]))
    assert np.array_equal(X, [0.0, -1.0, 0.0])


@pytest.mark.parametrize("name", sorted(CATALOGUE))
@given(x=coord, y=coord, z=coord)
def test_alpha_of_field_is_h(name, x, y, z):
    H = CATALOGUE[name]
    p = np.array([x, y, z])
    assert abs(alpha_darboux(p, hamiltonian_field(H, p)) - H(x, y, z)) <= 1e-12


@pytest.mark.parametrize("name", sorted(CATALOGUE))
@settings(max_examples=15)
@given(x=st.floats(-0.5, 0.5), y=st.floats(-0.5, 0.5), z=st.floats(-0.5, 0.5))
def test_flow_step_keeps_contact_sign(name, x, y, z):
    H = CATALOGUE[name]
    coeffs = [Field(lambda *c, i=i: _pulled_back(H, np.array(c), 0.05, 1e-4)[i]) for i in range(3)]
    chart = ContactChart(OneForm(coeffs), ((-1.0, 1.0),) * 3)
    v = contact_volume(chart, (np.array([x]), np.array([y]), np.array([z])))
    assert v[0] < 0


def test_reeb_conformal_residual_zero():
    p = np.array([[0.1], [0.2], [0.3]])
    assert conformal_factor_check(CATALOGUE["one"], p)[0] == 0.0


def test_xyz_conformal_residual():
    p = np.array([[0.1], [0.2], [0.3]])
    assert conformal_factor_check(CATALOGUE["xyz"], p)[0] < 1e-6


def test_hammer_conformal_residual_in_q1():
    spec = canonical_hammer()
    p = np.array([[0.0], [spec.y1 + 0.5 * spec.delta], [0.0]])
    assert conformal_factor_check(spec.hamiltonian, p)[0] < 1e-6


def test_hammer_pushes_q1_to_positive_x():
    spec = canonical_hammer()
    d = spec.delta
    y = spec.y1 + np.linspace(-0.9, 0.9, 7) * d
    z = np.linspace(-0.9, 0.9, 7) * d
    Y, Z = np.meshgrid(y, z)
    X = hamiltonian_field(spec.hamiltonian, (np.zeros_like(Y), Y, Z))
    assert np.all(X[0] > 0)


def test_catalogue_lookup():
    assert "hammer" in catalogue()
    assert catalogue("xyz") is CATALOGUE["xyz"]
    with pytest.raises(ValueError):
        catalogue("nope")


def test_canonical_hammer_geometry():
    spec = canonical_hammer()
    assert spec.delta <= 0.025
    assert spec.delta == pytest.approx(0.02)
    d = spec.delta
    assert spec.to_dict()["support"] == [[-d, d], [-d, 0.5 + d], [-d, d]]


def test_hammer_support_vanishes_outside():
    spec = canonical_hammer()
    d = spec.delta
    H = spec.hamiltonian
    pts = [(1.01 * d, 0.2, 0.0), (0.0, -1.01 * d, 0.0), (0.0, 0.5 + 1.01 * d, 0.0), (0.0, 0.2, 1.01 * d)]
    for p in pts:
        assert H(*p) == 0.0


def test_degenerate_eps_caps_delta():
    spec = build_hammer((0, 0, 0), (0, 0.5, 0), 100.0)
    assert spec.delta < 0.25


@pytest.mark.parametrize("p, q, eps", [((0, 0.5, 0), (0, 0.0, 0), 0.1), ((0, 0.2, 0), (0, 0.2, 0), 0.1),
                                       ((0.1, 0, 0), (0, 0.5, 0), 0.1), ((0, 0, 0), (0, 0.5, 0.1), 0.1),
                                       ((0, 0, 0), (0, 0.5, 0), -1.0)])
def test_build_hammer_rejects(p, q, eps):
    with pytest.raises(ValueError):
        build_hammer(p, q, eps)


def test_verify_canonical_hammer():
    rep = verify_hammer(canonical_hammer(), sample_grid=20)
    assert rep.passed, rep.to_dict()


def test_verify_hammer_zero_time():
    rep = verify_hammer(canonical_hammer(), sample_grid=10, T=0.0)
    assert rep.passed and rep.times == []


def test_outside_samples_stay_on_surface():
    spec = canonical_hammer()
    pts = hammer_samples(spec, 12)["outside"]
    traj = flow_hammer(spec, pts, [0.25, 1.0])
    assert np.all(traj[:, 0, :] == 0.0)


def test_flow_at_zero_is_identity():
    spec = canonical_hammer()
    pts = hammer_samples(spec, 5)["B_p"]
    assert np.array_equal(flow_hammer(spec, pts, [0.0])[0], pts)


# PSI ---------------------------------------------------------------------------------


def _two_stages():
    a = Box([0.0, -0.1], [0.2, 0.1], label="A")
    b = Box([0.5, -0.1], [0.7, 0.1], label="B")
    return [IsotopyStage((0.0, 0.5), [a, b]), IsotopyStage((0.5, 1.0), [a, b])]


def test_psi_identity():
    pts = np.random.default_rng(0).uniform(-1, 1, size=(50, 2))
    rep = psi_check(_two_stages(), pts, lambda tau, p: p, eps=0.5)
    assert rep.is_psi and rep.displacement_bound == 0.0


def test_psi_local_rotation_passes():
    # each point spins inside its own box
    def flow(tau, p):
        c = np.where(p[:, :1] < 0.35, 0.1, 0.6)
        r = np.hypot(p[:, 0] - c[:, 0], p[:, 1])
        s = np.clip(1 - r / 0.05, 0, 1) * 0.5 * np.sin(np.pi * tau)
        dx, dy = p[:, 0] - c[:, 0], p[:, 1]
        return np.column_stack([c[:, 0] + np.cos(s) * dx - np.sin(s) * dy, np.sin(s) * dx + np.cos(s) * dy])

    pts = np.array([[0.1, 0.02], [0.62, -0.01], [0.9, 0.9]])
    rep = psi_check(_two_stages(), pts, flow, eps=0.5)
    assert rep.is_psi and rep.max_visits == 1


def test_psi_trajectory_across_two_sets_fails():
    def flow(tau, p):
        return p + np.array([0.6 * min(tau, 0.5) * 2, 0.0])

    pts = np.array([[0.05, 0.0]])
    rep = psi_check(_two_stages(), pts, flow, eps=0.5)
    assert not rep.is_psi
    assert rep.witness is not None


def test_psi_requires_two_stages():
    with pytest.raises(ValueError):
        psi_check(_two_stages()[:1], np.zeros((1, 2)), lambda t, p: p, eps=1.0)


def test_box_periodic_overlap():
    a = Box([0.9, 0.0], [1.1, 1.0], periods=(1.0, None))
    b = Box([0.05, 0.0], [0.2, 1.0], periods=(1.0, None))
    c = Box([0.15, 0.0], [0.3, 1.0], periods=(1.0, None))
    assert a.overlaps(b) and not a.overlaps(c)
    assert a.contains(np.array([[0.02, 0.5]]))[0]
