import numpy as np
import pytest
from hypothesis import given, strategies as st

from charfol.chart import (DomainError, ContactChart, OneForm, characteristic_field, clifford_torus,
                           contact_check, contact_volume, coordinate, critset_chart, darboux_chart,
                           dz_chart, field_from_beta, graph_surface, model_chart, plane_surface,
                           pullback, standard_sphere_form, torus_chart)
from charfol.profiles import make_profile

coord = st.floats(-1.0, 1.0)


def zero(x):
    return np.zeros_like(np.asarray(x, float))


@pytest.mark.parametrize("chart, expected", [
    (critset_chart(zero, zero), -1.0),
    (dz_chart(), 0.0),
    (darboux_chart(), -1.0),
])
def test_contact_volume_examples(chart, expected):
    p = (np.array([0.3, -0.7]), np.array([0.1, 0.9]), np.array([-0.2, 0.5]))
    assert np.allclose(contact_volume(chart, p), expected, atol=1e-12)


def test_contact_volume_outside_domain():
    with pytest.raises(DomainError):
        contact_volume(darboux_chart(), (2.0, 0.0, 0.0))


def test_contact_check_darboux():
    rep = contact_check(darboux_chart(), 32, 1e-9)
    assert rep.is_contact
    assert rep.min_abs_volume == pytest.approx(1.0)


def test_contact_check_dz_every_node_violates():
    rep = contact_check(dz_chart(), 8, 1e-9)
    assert not rep.is_contact
    assert len(rep.violating_points) == 8**3


def test_contact_check_half_slope():
    chart = critset_chart(lambda x: x / 2, lambda x: np.full_like(np.asarray(x, float), 0.5))
    rep = contact_check(chart, 32, 1e-9)
    assert rep.is_contact
    assert rep.min_abs_volume == pytest.approx(0.5, abs=1e-12)


def test_contact_check_rejects_tiny_grid():
    with pytest.raises(ValueError):
        contact_check(darboux_chart(), 1)


@given(coord, coord, coord, st.floats(0.1, 5.0))
def test_volume_scales_quadratically(x, y, z, k):
    c = darboux_chart()
    assert float(contact_volume(c.scaled(k), (x, y, z))) == pytest.approx(k * k * float(contact_volume(c, (x, y, z))))


@given(coord, coord, coord)
def test_volume_matches_finite_difference_oracle(x, y, z):
    # wedge product from difference quotients of the coefficients
    chart = critset_chart(np.sin, np.cos)
    h = 1e-6
    p = np.array([x, y, z]) * 0.9

    def coeffs(q):
        return np.array([float(c) for c in chart.alpha(tuple(q))])

    d = np.array([(coeffs(p + h * e) - coeffs(p - h * e)) / (2 * h) for e in np.eye(3)])  # d[i, j] = d_i a_j
    a = coeffs(p)
    V = a[0] * (d[1, 2] - d[2, 1]) + a[1] * (d[2, 0] - d[0, 2]) + a[2] * (d[0, 1] - d[1, 0])
    assert float(contact_volume(chart, tuple(p))) == pytest.approx(V, abs=1e-8)


def test_pullback_graph_surface():
    prof = make_profile("C_eps", 0.1, 0.025, 0)
    beta = pullback(torus_chart((-1.0, 1.0)), graph_surface(prof))
    y = np.linspace(-0.49, 0.49, 41)
    bu, bv = beta(np.full_like(y, 0.2), y)
    assert np.allclose(bu, -prof.f(y), atol=1e-15)
    assert np.allclose(bv, 1.0)


def test_pullback_clifford_torus():
    beta = pullback(standard_sphere_form(), clifford_torus())
    t = np.linspace(0, 2 * np.pi, 13)
    bu, bv = beta(t, t[::-1])
    assert np.allclose(bu, 0.25, atol=1e-15) and np.allclose(bv, 0.25, atol=1e-15)


def test_pullback_plane_in_model():
    beta = pullback(model_chart(+1), plane_surface())
    u = np.linspace(-1, 1, 5)
    bu, bv = beta(u, u[::-1])
    assert np.allclose(bu, u[::-1]) and np.allclose(bv, 0.0)


def test_pullback_leaving_domain_raises():
    beta = pullback(darboux_chart(((-0.5, 0.5),) * 3), plane_surface())
    with pytest.raises(DomainError):
        beta(np.array([0.9]), np.array([0.0]))


def test_characteristic_field_dy():
    X = field_from_beta(lambda u, v: 0.0, lambda u, v: 1.0)
    assert np.allclose(X(np.array([0.3]), np.array([-0.2])).ravel(), [1.0, 0.0])


def test_characteristic_field_graph():
    prof = make_profile("C_eps", 0.1, 0.025, 0)
    X = characteristic_field(pullback(torus_chart(), graph_surface(prof)))
    y = np.linspace(-0.4, 0.4, 9)
    out = X(np.zeros_like(y), y)
    assert np.allclose(out[0], 1.0) and np.allclose(out[1], prof.f(y))


def test_characteristic_field_y_dx():
    # solving i_X (du^dv) = v du by hand gives X = (0, -v)
    X = field_from_beta(lambda u, v: v, lambda u, v: 0.0)
    u, v = np.array([0.4, -0.3]), np.array([0.5, -0.25])
    out = X(u, v)
    assert np.allclose(out[0], 0.0) and np.allclose(out[1], -v)


def test_analytic_jacobian_matches_fd():
    prof = make_profile("C_eps", 0.1, 0.025, 0)
    X = characteristic_field(pullback(torus_chart(), graph_surface(prof)))
    u, v = np.array([0.1]), np.array([0.06])
    J = X.jacobian(u, v)
    h = 1e-6
    fd = (X(u, v + h) - X(u, v - h)) / (2 * h)
    assert np.allclose(J[:, 1], fd, atol=1e-6)


def test_bad_analytic_gradient_rejected():
    x = coordinate(0)
    bad = type(x)(lambda *c: np.asarray(c[0]) ** 2, lambda *c: [np.ones_like(np.asarray(c[0]))] * 3)
    with pytest.raises(ValueError):
        ContactChart(OneForm([0.0, bad, 1.0]), ((-1, 1),) * 3)
