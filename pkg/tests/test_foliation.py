import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import cKDTree

from charfol.chart import DomainError, FoliationField, field_from_beta
from charfol.foliation import (DegenerateSingularity, NonOrientable, build_critset_form,
                               classify, find_critical_set, propagate_orientation, two_leaves)
from charfol.leaves import CONVERGED
from charfol.profiles import make_profile


def linear_field(A):
    A = np.asarray(A, float)

    def X(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.array([A[0, 0] * u + A[0, 1] * v, A[1, 0] * u + A[1, 1] * v])

    def DX(u, v):
        shape = np.broadcast(u, v).shape
        return np.broadcast_to(A.reshape(2, 2, *([1] * len(shape))), (2, 2) + shape)

    return FoliationField(X, DX)


def quad_field():
    def X(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.array([u, u**2])
    return FoliationField(X)


def hausdorff(a, b):
    return max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max())


def oracle_zero_set(X, n):
    """Grid nodes of an n x n mesh where |X| is minimal along each column."""
    xs = np.linspace(-1, 1, n)
    U, V = np.meshgrid(xs, xs, indexing="ij")
    m = np.hypot(*X(U, V))
    j = np.argmin(m, axis=1)
    keep = m[np.arange(n), j] < 2.0 / n
    return np.column_stack([xs[keep], xs[j[keep]]])


# critical sets ----------------------------------------------------------------


def test_critset_single_point():
    X = field_from_beta(lambda u, v: v, lambda u, v: u)
    cs = find_critical_set(X, grid=(64, 64))
    assert len(cs.points) == 1 and not cs.curves and not cs.unresolved
    assert np.allclose(cs.points[0].location, 0.0, atol=1e-10)
    assert cs.points[0].kind == "saddle"


def test_critset_empty():
    X = field_from_beta(lambda u, v: 0.0, lambda u, v: 1.0)
    cs = find_critical_set(X, grid=(64, 64))
    assert cs.n_zeros == 0 and not cs.unresolved


def test_critset_curve_against_dense_oracle():
    X = field_from_beta(lambda u, v: v, lambda u, v: 0.0)
    n = 256
    cs = find_critical_set(X, grid=(n, n))
    assert len(cs.curves) == 1 and not cs.points
    samples = cs.curves[0].samples
    assert hausdorff(samples, oracle_zero_set(X, 4 * n)) < 2 * (2.0 / (n - 1))
    assert np.allclose(cs.curves[0].eigenvalues, -1.0)


def test_critset_to_dict_roundtrip_keys():
    X = field_from_beta(lambda u, v: v, lambda u, v: u)
    d = find_critical_set(X, grid=32).to_dict()
    assert set(d) == {"points", "curves", "unresolved", "grid", "tol"}


# classification -----------------------------------------------------------------


@pytest.mark.parametrize("A, kind", [
    ([[1, 0], [0, 1]], "source"),
    ([[1, 0], [0, -1]], "saddle"),
    ([[-1, 0], [0, -2]], "sink"),
    ([[1, 0], [0, 0]], "rank_one"),
])
def test_classify_linear(A, kind):
    cp = classify(linear_field(A), (0.0, 0.0))
    assert cp.kind == kind


def test_classify_source_eigenvalues():
    cp = classify(linear_field([[1, 0], [0, 1]]), (0.0, 0.0))
    assert np.allclose(np.sort(np.real(cp.eigenvalues)), [1.0, 1.0])


def test_classify_rank_one_eigenvalues():
    cp = classify(quad_field(), (0.0, 0.0))
    assert cp.kind == "rank_one" and cp.rank == 1
    assert np.allclose(np.sort(np.abs(cp.eigenvalues)), [0.0, 1.0], atol=1e-8)


def test_classify_rank_zero_raises():
    with pytest.raises(DegenerateSingularity):
        classify(linear_field([[0, 0], [0, 0]]), (0.0, 0.0))


def test_classify_centre_raises():
    with pytest.raises(DegenerateSingularity):
        classify(linear_field([[0, 1], [-1, 0]]), (0.0, 0.0))


def test_classify_non_zero_raises():
    with pytest.raises(ValueError):
        classify(linear_field([[1, 0], [0, 1]]), (0.5, 0.0))


@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_classify_diagonal_signs(a, b):
    assert classify(linear_field([[a, 0], [0, -b]]), (0, 0)).kind == "saddle"
    assert classify(linear_field([[-a, 0], [0, -b]]), (0, 0)).kind == "sink"


# leaves ---------------------------------------------------------------------------


def test_two_leaves_rank_one():
    g1, g2 = two_leaves(quad_field(), (0.0, 0.0))
    sides = sorted(int(np.sign(np.median(g.uv[:, 0]))) for g in (g1, g2))
    assert sides == [-1, 1]
    for g in (g1, g2):
        assert np.hypot(*g.end) < 1e-6
        d = g.uv[-1] - g.uv[-2]
        assert abs(d[1] / d[0]) < 0.05


def test_two_leaves_sink():
    g1, g2 = two_leaves(linear_field([[-1, 0], [0, -1]]), (0.0, 0.0))
    for g in (g1, g2):
        assert g.terminal_flag == CONVERGED and g.t[-1] > 0
        assert np.hypot(*g.end) < 1e-6


def test_two_leaves_saddle():
    g1, g2 = two_leaves(linear_field([[1, 0], [0, -1]]), (0.0, 0.0))
    assert g1.t[-1] > 0 > g2.t[-1]
    assert abs(g1.uv[0, 0]) < 1e-6  # stable branch is the v-axis
    assert abs(g2.uv[0, 1]) < 1e-6


# orientation ------------------------------------------------------------------------


def test_orientation_constant():
    L = field_from_beta(lambda u, v: 0.0, lambda u, v: 1.0)
    omap = propagate_orientation(L, (0.0, 0.0), (1.0, 0.0), grid=32)
    assert np.all(omap.sigma == 1)


def test_orientation_annulus_matches_global_field():
    eps = 0.1
    prof = make_profile("C_eps", eps, eps / 4, 0)
    rng = np.random.default_rng(5)
    flips = rng.choice([-1.0, 1.0], size=(64, 64))

    def L(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        s = flips if u.shape == flips.shape else 1.0
        return s * np.array([np.ones_like(u), prof.f(v)])

    dom = ((-0.5, 0.5), (0.0, eps))
    omap, s = propagate_orientation(L, (0.0, eps / 2), (1.0, 0.0), probe=(0.3, 0.9 * eps), grid=64,
                                    domain=dom, periodic=(True, False))
    assert np.array_equal(omap.sigma, flips.astype(int))
    assert s == omap.sign_at(0.3, 0.9 * eps)


def test_orientation_half_angle_field_is_non_orientable():
    def L(u, v):
        th = np.arctan2(v, u)
        r = np.hypot(u, v)
        live = r > 0.3
        return np.array([np.cos(th / 2) * live, np.sin(th / 2) * live])

    with pytest.raises(NonOrientable):
        propagate_orientation(L, (0.6, 0.0), (1.0, 0.0), grid=128, domain=((-1, 1), (-1, 1)),
                              periodic=(False, False))


# critset model -----------------------------------------------------------------------


def test_critset_form_point():
    form = build_critset_form([0.0])
    cs = find_critical_set(form.field, grid=(256, 256))
    assert len(cs.points) == 1 and not cs.curves
    assert np.hypot(*cs.points[0].location) < 1e-8


def test_critset_form_empty():
    form = build_critset_form([])
    x = np.linspace(-1, 1, 10001)
    assert np.all(form.g(x) > 0)
    assert find_critical_set(form.field, grid=(128, 128)).n_zeros == 0


def test_critset_form_point_and_interval():
    F = [0.0, [0.3, 0.4]]
    form = build_critset_form(F)
    n = 512
    cs = find_critical_set(form.field, grid=(n, n))
    found = np.array([p.location for p in cs.points] + [s for c in cs.curves for s in c.samples])
    # 4x resolution oracle of the zero set of g on the x axis
    xs = np.linspace(-1, 1, 4 * n)
    oracle = xs[form.zero_set_mask(xs) | (np.abs(form.g(xs)) < 1e-12)]
    oracle = np.concatenate([oracle, [0.0]])
    target = np.column_stack([oracle, np.zeros_like(oracle)])
    assert hausdorff(found, target) < 2 * (2.0 / n)


def test_critset_form_volume_bound():
    form = build_critset_form([0.0, [0.3, 0.4]])
    x = np.linspace(-1, 1, 20001)
    assert np.max(np.abs(form.dg(x))) <= 0.5


@pytest.mark.parametrize("F", [[1.5], [[0.5, 1.2]], [-1.0]])
def test_critset_form_outside_interval(F):
    with pytest.raises(DomainError):
        build_critset_form(F)
