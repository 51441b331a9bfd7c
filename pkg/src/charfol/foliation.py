"""Singularities of planar characteristic foliations.

Covers locating the critical set on a grid, classifying isolated zeros,
extracting the two leaves that converge to a critical point, propagating
an orientation of a line field, and building a model contact form whose
critical set on {z = 0} is a prescribed closed subset of an interval.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from .bumps import smooth_step, smooth_step_deriv
from .chart import DomainError, FoliationField, critset_chart, grid_axes
from .leaves import CONVERGED, LeafTrace, integrate_leaf
from .ode import dopri5

RANK_TOL = 1e-6


class DegenerateSingularity(ValueError):
    """A zero of X whose linearisation is not allowed for a contact form."""


class NonOrientable(RuntimeError):
    """Orientation propagation met an inconsistent cycle."""


class NoConvergingLeaf(RuntimeError):
    pass


def _rank(J, rel=RANK_TOL):
    s = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(s > rel * (s[0] + 1.0))), s


@dataclass
class CriticalPoint:
    location: np.ndarray
    jacobian: np.ndarray
    rank: int
    eigenvalues: np.ndarray
    kind: str  # sink | source | saddle | rank_one
    divergence: float
    residual: float = 0.0

    def to_dict(self):
        ev = self.eigenvalues
        return {
            "location": [float(x) for x in self.location],
            "jacobian": np.asarray(self.jacobian, float).tolist(),
            "rank": self.rank,
            "eigenvalues": [[float(np.real(e)), float(np.imag(e))] for e in ev],
            "kind": self.kind,
            "divergence": self.divergence,
            "residual": self.residual,
        }


@dataclass
class CriticalCurve:
    """Ordered samples of a curve of rank-one zeros with the transverse data."""

    samples: np.ndarray
    eigenvalues: np.ndarray  # nonzero eigenvalue of DX at each sample
    eigenvectors: np.ndarray  # matching eigenvector, unit length
    kernels: np.ndarray

    def to_dict(self):
        return {
            "samples": self.samples.tolist(),
            "transverse_eigenvalue": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.tolist(),
            "kernels": self.kernels.tolist(),
        }


@dataclass
class CriticalSet:
    points: list
    curves: list
    unresolved: list
    grid: tuple
    tol: float
    extra: dict = field(default_factory=dict)

    @property
    def n_zeros(self):
        return len(self.points) + sum(len(c.samples) for c in self.curves)

    def to_dict(self):
        return {
            "points": [p.to_dict() for p in self.points],
            "curves": [c.to_dict() for c in self.curves],
            "unresolved": [list(map(float, u)) for u in self.unresolved],
            "grid": list(self.grid),
            "tol": self.tol,
        }


def _linear_data(J):
    ev, vec = np.linalg.eig(J)
    rank, s = _rank(J)
    return rank, ev, vec, s


def classify(field, p, tol=1e-8):
    """Classify a zero ``p`` of ``field`` from its linearisation."""
    p = np.asarray(p, dtype=float)
    x = field(p[0], p[1])
    res = float(np.hypot(*x))
    if res > tol:
        raise ValueError(f"|X(p)| = {res:.3g} exceeds tol {tol:g}; p is not a zero")
    J = np.asarray(field.jacobian(p[0], p[1]), dtype=float).reshape(2, 2)
    rank, ev, _, s = _linear_data(J)
    div = float(np.trace(J))
    if rank == 0:
        raise DegenerateSingularity(f"DX vanishes at {p.tolist()} (rank 0)")
    scale = RANK_TOL * (s[0] + 1.0)
    if rank == 1:
        kind = "rank_one"
    else:
        re = np.real(ev)
        if np.all(np.abs(re) <= scale):
            raise DegenerateSingularity(f"centre-type zero at {p.tolist()}: div X = 0")
        if np.all(re > scale):
            kind = "source"
        elif np.all(re < -scale):
            kind = "sink"
        elif re.min() < -scale and re.max() > scale:
            kind = "saddle"
        else:
            raise DegenerateSingularity(f"zero at {p.tolist()} has an eigenvalue with zero real part")
    return CriticalPoint(p, J, rank, ev, kind, div, res)


# ---------------------------------------------------------------- finding


def _newton(field, starts, tol, max_iter=60, max_move=None):
    p = starts.copy()
    ok = np.zeros(len(p), dtype=bool)
    for _ in range(max_iter):
        u, v = field.wrap(p[:, 0], p[:, 1])
        X = np.asarray(field(u, v)).T  # (m, 2)
        ok = np.hypot(X[:, 0], X[:, 1]) < tol
        if ok.all():
            break
        J = np.moveaxis(np.asarray(field.jacobian(u, v)), (0, 1), (-2, -1))  # (m, 2, 2)
        U, S, Vt = np.linalg.svd(J)
        cut = RANK_TOL * (S[:, :1] + 1.0)
        Sinv = np.where(S > cut, 1.0 / np.where(S > cut, S, 1.0), 0.0)
        step = np.einsum("mji,mj,mkj,mk->mi", Vt, Sinv, U, X)
        if max_move is not None:
            n = np.hypot(step[:, 0], step[:, 1])
            step *= np.minimum(1.0, max_move / np.maximum(n, 1e-300))[:, None]
        p = np.where(ok[:, None], p, p - step)
    u, v = field.wrap(p[:, 0], p[:, 1])
    X = np.asarray(field(u, v)).T
    ok = np.hypot(X[:, 0], X[:, 1]) < tol
    return np.column_stack([u, v]), ok


def _union_find(n, pairs):
    if len(pairs) == 0:
        return np.arange(n)
    pairs = np.asarray(pairs)
    m = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return connected_components(m, directed=False)[1]


def _tree(points, field):
    lo = np.array([b[0] for b in field.domain])
    box = []
    for (a, b), per in zip(field.domain, field.periodic):
        box.append(b - a if per else 1e6 * max(1.0, b - a))
    q = points - lo
    for k, per in enumerate(field.periodic):
        if per:
            q[:, k] = np.mod(q[:, k], box[k])
    return cKDTree(q, boxsize=box)


def find_critical_set(field, grid=(256, 256), tol=1e-10, scan_tol=1e-12, chain_steps=3,
                      chain_angle_deg=10.0):
    """Locate the zeros of ``field`` on its domain.

    A grid cell is flagged when both components of X straddle zero (within
    ``scan_tol``) across its corners; flagged cells seed a pseudo-inverse
    Newton iteration. Rank-one zeros close to each other with nearly parallel
    kernels are chained into :class:`CriticalCurve` objects; every other zero
    is classified. Cells whose Newton run fails are reported as unresolved.
    """
    if np.isscalar(grid):
        grid = (int(grid), int(grid))
    nu, nv = grid
    ua = grid_axes(field.domain[:1], field.periodic[:1], nu)[0]
    va = grid_axes(field.domain[1:], field.periodic[1:], nv)[0]
    U, V = np.meshgrid(ua, va, indexing="ij")
    X = np.asarray(field(U, V))

    def corners(a):
        if field.periodic[0]:
            a = np.concatenate([a, a[:1]], axis=0)
        if field.periodic[1]:
            a = np.concatenate([a, a[:, :1]], axis=1)
        return np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])

    flagged = np.ones(corners(X[0]).shape[1:], dtype=bool)
    for k in range(2):
        c = corners(X[k])
        flagged &= (c.min(axis=0) <= scan_tol) & (c.max(axis=0) >= -scan_tol)
    du = (ua[1] - ua[0]) if len(ua) > 1 else 1.0
    dv = (va[1] - va[0]) if len(va) > 1 else 1.0
    idx = np.argwhere(flagged)
    result = CriticalSet([], [], [], (nu, nv), tol)
    if len(idx) == 0:
        return result
    starts = np.column_stack([ua[idx[:, 0]] + 0.5 * du, va[idx[:, 1]] + 0.5 * dv])
    cell = max(du, dv)
    roots, ok = _newton(field, starts, tol, max_move=cell)
    # a root must stay near the cell that produced it
    dist = np.abs(roots - field_wrap_stack(field, starts))
    for k, (lo, hi) in enumerate(field.domain):
        if field.periodic[k]:
            dist[:, k] = np.minimum(dist[:, k], (hi - lo) - dist[:, k])
    ok &= (dist[:, 0] <= 2 * du) & (dist[:, 1] <= 2 * dv)
    result.unresolved = [tuple(s) for s in starts[~ok]]
    roots = roots[ok]
    if len(roots) == 0:
        return result

    # merge duplicates coming from neighbouring cells
    tree = _tree(roots, field)
    labels = _union_find(len(roots), sorted(tree.query_pairs(0.25 * min(du, dv))))
    reps = []
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        xs = np.asarray(field(roots[members, 0], roots[members, 1]))
        reps.append(roots[members[np.argmin(np.hypot(xs[0], xs[1]))]])
    roots = np.array(reps)

    J = np.moveaxis(np.asarray(field.jacobian(roots[:, 0], roots[:, 1])), (0, 1), (-2, -1))
    S = np.linalg.svd(J, compute_uv=False)
    rank = np.sum(S > RANK_TOL * (S[:, :1] + 1.0), axis=1)
    _, _, Vt = np.linalg.svd(J)
    kernels = Vt[:, 1, :]

    one = np.flatnonzero(rank == 1)
    chained = np.zeros(len(roots), dtype=bool)
    if len(one) > 1:
        sub = _tree(roots[one], field)
        reach = chain_steps * max(du, dv) * 1.0001
        cos_min = np.cos(np.deg2rad(chain_angle_deg))
        pairs = [(a, b) for a, b in sub.query_pairs(reach)
                 if abs(kernels[one[a]] @ kernels[one[b]]) >= cos_min]
        lab = _union_find(len(one), pairs)
        for l in np.unique(lab):
            members = one[lab == l]
            if len(members) < 2:
                continue
            chained[members] = True
            result.curves.append(_make_curve(roots[members], J[members], kernels[members]))
    for i in np.flatnonzero(~chained):
        try:
            result.points.append(classify(field, roots[i], tol=max(tol, 1e-8)))
        except DegenerateSingularity as exc:
            result.unresolved.append(tuple(roots[i]))
            result.extra.setdefault("degenerate", []).append(str(exc))
    result.points.sort(key=lambda p: (round(p.location[0], 12), round(p.location[1], 12)))
    result.curves.sort(key=lambda c: tuple(c.samples[0]))
    return result


def field_wrap_stack(field, pts):
    u, v = field.wrap(pts[:, 0], pts[:, 1])
    return np.column_stack([u, v])


def _make_curve(pts, J, ker):
    centred = pts - pts.mean(axis=0)
    axis = np.linalg.svd(centred, full_matrices=False)[2][0] if len(pts) > 1 else np.array([1.0, 0.0])
    order = np.argsort(centred @ axis)
    pts, J, ker = pts[order], J[order], ker[order]
    lam = np.trace(J, axis1=1, axis2=2)  # the only nonzero eigenvalue when rank is 1
    vec = []
    for Ji, k in zip(J, ker):
        w, V = np.linalg.eig(Ji)
        j = int(np.argmax(np.abs(w)))
        e = np.real(V[:, j])
        vec.append(e / np.linalg.norm(e))
    return CriticalCurve(pts, lam, np.array(vec), ker)


# ---------------------------------------------------------------- leaves


def _bracket(sides, etas, sg, count, msg):
    exact = np.flatnonzero(sg == 0)
    if len(exact):
        e = etas[exact[np.argmin(np.abs(etas[exact]))]]
        return e, e
    flips = np.flatnonzero(sg[:-1] * sg[1:] < 0)
    if len(flips) == 0:
        raise NoConvergingLeaf(msg)
    j = flips[np.argmin(np.abs(etas[flips]))]
    return _multisect(sides, etas[j], etas[j + 1], sg[j], count)


def _multisect(sides, lo, hi, s_lo, count, halvings=64):
    """Shrink a sign-change bracket by shooting ``count`` seeds per round.

    Each round is worth log2(count + 1) bisection steps; the loop stops once
    ``halvings`` steps' worth of refinement is done or the bracket is at
    floating-point resolution.
    """
    done = 0.0
    while done < halvings:
        etas = np.linspace(lo, hi, count + 2)[1:-1]
        if not (etas[0] > lo and etas[-1] < hi):
            break
        sg = sides(etas)
        other = np.flatnonzero((sg != s_lo) & (sg != 0))
        if len(other) == 0:
            lo = etas[-1]
        else:
            k = other[0]
            hi = etas[k]
            lo = etas[k - 1] if k > 0 else lo
        done += np.log2(count + 1)
    return lo, hi


def _eigen_frame(cp):
    """Unit eigenvector V of the nonzero eigenvalue, kernel K and eigenvalue."""
    w, vecs = np.linalg.eig(cp.jacobian)
    j = int(np.argmax(np.abs(w)))
    lam = float(np.real(w[j]))
    Vv = np.real(vecs[:, j])
    Vv /= np.linalg.norm(Vv)
    K = np.linalg.svd(cp.jacobian)[2][1]
    return lam, Vv, K


def _shoot_rank_one(field, cp, side, a, shoot_count, xi_stop, rtol):
    lam, Vv, K = _eigen_frame(cp)
    M = np.column_stack([Vv, K])
    Minv = np.linalg.inv(M)
    p = cp.location
    direction = -1.0 if lam > 0 else 1.0
    t_end = direction * (40.0 + 4.0 * np.log(a / xi_stop)) / abs(lam)

    def coords(y):
        return (y - p) @ Minv.T

    def stop_fn(t, y):
        c = coords(y)
        return (np.abs(c[:, 1]) > np.abs(c[:, 0])) | (np.abs(c[:, 0]) < xi_stop) \
            | ~field.inside(y[:, 0], y[:, 1])

    def sides(etas):
        starts = p + side * a * Vv + np.outer(etas, K)

        def rhs(t, y):
            u, v = field.wrap(y[:, 0], y[:, 1])
            return np.asarray(field(u, v)).T

        sol = dopri5(rhs, (0.0, t_end), starts, rtol=rtol, atol=1e-14, stop=stop_fn, max_steps=100_000)
        return np.sign(coords(sol.y[-1])[:, 1])

    etas = np.linspace(-a, a, shoot_count)
    sg = sides(etas)
    lo, hi = _bracket(sides, etas, sg, shoot_count,
                      f"no sign change among {shoot_count} seeds on side {side:+d}")
    seed = p + side * a * Vv + 0.5 * (lo + hi) * K
    return seed, t_end


def two_leaves(field, cp, a=0.2, shoot_count=16, tol=1e-6, rtol=1e-10):
    """Two leaves converging to the critical point ``cp``.

    For a rank-one point the leaves arrive tangent to the eigendirection of
    the nonzero eigenvalue, one from each side; they are found by shooting
    across the kernel direction. For a sink or source the leaves come in along
    the slow eigendirection. For a saddle the first trace is a stable branch
    (converging forwards) and the second an unstable branch (backwards).
    Each returned trace ends within ``tol`` of the point.
    """
    if not isinstance(cp, CriticalPoint):
        cp = classify(field, cp)
    p = cp.location
    traces = []
    if cp.kind == "rank_one":
        for side in (+1, -1):
            seed, t_end = _shoot_rank_one(field, cp, side, a, shoot_count, 1e-9, rtol)
            tr = integrate_leaf(field, seed, (0.0, t_end), rtol=rtol, atol=1e-14,
                                critical_tol=0.0, target=p, target_tol=1e-3 * tol)
            traces.append(tr)
    elif cp.kind in ("sink", "source"):
        w, vecs = np.linalg.eig(cp.jacobian)
        j = int(np.argmin(np.abs(np.real(w))))
        e = np.real(vecs[:, j])
        e /= np.linalg.norm(e)
        rate = float(np.min(np.abs(np.real(w))))
        r = min(a, 0.25 * _domain_size(field))
        direction = 1.0 if cp.kind == "sink" else -1.0
        t_end = direction * (10.0 + 3.0 * np.log(r / (1e-3 * tol))) / rate
        for side in (+1, -1):
            tr = integrate_leaf(field, p + side * r * e, (0.0, t_end), rtol=rtol, atol=1e-14,
                                critical_tol=0.0, target=p, target_tol=1e-3 * tol)
            traces.append(tr)
    elif cp.kind == "saddle":
        w, vecs = np.linalg.eig(cp.jacobian)
        order = np.argsort(np.real(w))
        es = np.real(vecs[:, order[0]])
        eu = np.real(vecs[:, order[1]])
        es /= np.linalg.norm(es)
        eu /= np.linalg.norm(eu)
        r = min(a, 0.25 * _domain_size(field))
        for direction, along, across, rate in ((1.0, es, eu, -np.real(w[order[0]])),
                                               (-1.0, eu, es, np.real(w[order[1]]))):
            seed = _shoot_saddle(field, p, along, across, r, direction, rate, rtol)
            t_end = direction * (10.0 + 3.0 * np.log(r / (1e-3 * tol))) / rate
            traces.append(integrate_leaf(field, seed, (0.0, t_end), rtol=rtol, atol=1e-14,
                                         critical_tol=0.0, target=p, target_tol=1e-3 * tol))
    else:
        raise ValueError(f"unknown critical point kind {cp.kind!r}")
    for tr in traces:
        d = float(np.hypot(*(tr.end - p)))
        if d > tol or tr.terminal_flag != CONVERGED:
            raise NoConvergingLeaf(f"leaf ended at distance {d:.3g} ({tr.terminal_flag})")
    return traces[0], traces[1]


def _domain_size(field):
    return min(hi - lo for lo, hi in field.domain)


def _shoot_saddle(field, p, along, across, r, direction, rate, rtol):
    M = np.column_stack([along, across])
    Minv = np.linalg.inv(M)
    t_end = direction * 60.0 / rate

    def coords(y):
        return (y - p) @ Minv.T

    def stop_fn(t, y):
        c = coords(y)
        return (np.abs(c[:, 1]) > r) | (np.abs(c[:, 0]) < 1e-9) | ~field.inside(y[:, 0], y[:, 1])

    def sides(etas):
        def rhs(t, y):
            u, v = field.wrap(y[:, 0], y[:, 1])
            return np.asarray(field(u, v)).T

        starts = p + r * along + np.outer(etas, across)
        sol = dopri5(rhs, (0.0, t_end), starts, rtol=rtol, atol=1e-14, stop=stop_fn, max_steps=100_000)
        return np.sign(coords(sol.y[-1])[:, 1])

    etas = np.linspace(-0.5 * r, 0.5 * r, 17)
    sg = sides(etas)
    lo, hi = _bracket(sides, etas, sg, 16, "saddle separatrix not bracketed")
    return p + r * along + 0.5 * (lo + hi) * across


# ---------------------------------------------------------------- orientation


@dataclass
class OrientationMap:
    axes: tuple
    sigma: np.ndarray  # +1 / -1 on the component of the seed, 0 elsewhere

    def sign_at(self, u, v):
        i = int(np.argmin(np.abs(self.axes[0] - u)))
        j = int(np.argmin(np.abs(self.axes[1] - v)))
        return int(self.sigma[i, j])


def propagate_orientation(line_field, seed, seed_direction, probe=None, grid=(128, 128),
                          domain=None, periodic=None, zero_tol=1e-9):
    """Consistently orient a line field by flood fill from ``seed``.

    ``line_field(u, v)`` returns a (sign-ambiguous) direction field of shape
    ``(2, ...)``. Nodes where it vanishes are skipped. Raises
    :class:`NonOrientable` when a cycle forces both signs on a node. With a
    ``probe`` point, returns ``(map, sign_at_probe)``.
    """
    if domain is None:
        domain = line_field.domain
    if periodic is None:
        periodic = getattr(line_field, "periodic", (False, False))
    nu, nv = (grid, grid) if np.isscalar(grid) else grid
    ua = grid_axes(domain[:1], periodic[:1], nu)[0]
    va = grid_axes(domain[1:], periodic[1:], nv)[0]
    U, V = np.meshgrid(ua, va, indexing="ij")
    L = np.asarray(line_field(U, V), dtype=float)
    norm = np.hypot(L[0], L[1])
    live = norm > zero_tol
    L = L / np.where(live, norm, 1.0)
    sigma = np.zeros((nu, nv), dtype=int)
    i0 = int(np.argmin(np.abs(ua - seed[0])))
    j0 = int(np.argmin(np.abs(va - seed[1])))
    if not live[i0, j0]:
        raise ValueError("seed sits on a zero of the line field")
    d0 = L[:, i0, j0] @ np.asarray(seed_direction, float)
    if d0 == 0:
        raise ValueError("seed direction is orthogonal to the line field")
    sigma[i0, j0] = 1 if d0 > 0 else -1
    queue = deque([(i0, j0)])
    while queue:
        i, j = queue.popleft()
        a = sigma[i, j] * L[:, i, j]
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = i + di, j + dj
            if periodic[0]:
                ni %= nu
            if periodic[1]:
                nj %= nv
            if not (0 <= ni < nu and 0 <= nj < nv) or not live[ni, nj]:
                continue
            d = a @ L[:, ni, nj]
            if abs(d) < 0.5:
                raise ValueError("grid too coarse: neighbouring directions differ by more than 60 degrees")
            s = 1 if d > 0 else -1
            if sigma[ni, nj] == 0:
                sigma[ni, nj] = s
                queue.append((ni, nj))
            elif sigma[ni, nj] != s:
                raise NonOrientable(f"inconsistent orientation at node ({ni}, {nj})")
    omap = OrientationMap((ua, va), sigma)
    if probe is None:
        return omap
    s = omap.sign_at(*probe)
    if s == 0:
        raise ValueError("probe is not in the component of the seed")
    return omap, s


# ---------------------------------------------------------------- critset model


@dataclass
class CritsetForm:
    """alpha = y dx + g(x) dy + dz whose foliation on {z = 0} is (g(x), -y)."""

    points: list
    intervals: list
    interval: tuple
    width: float
    scale: float
    g: object
    dg: object

    @property
    def chart(self):
        lo, hi = self.interval
        return critset_chart(self.g, self.dg, box=((lo, hi), (-1.0, 1.0), (-1.0, 1.0)), label="g_F")

    @property
    def field(self):
        g, dg = self.g, self.dg

        def X(u, v):
            u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
            return np.array([g(u), -v])

        def DX(u, v):
            u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
            z = np.zeros_like(u)
            return np.array([[dg(u), z], [z, -np.ones_like(u)]])

        return FoliationField(X, DX, (tuple(self.interval), (-1.0, 1.0)), (False, False), name="critset")

    def zero_set_mask(self, x):
        x = np.asarray(x, float)
        m = np.zeros(x.shape, dtype=bool)
        for p in self.points:
            m |= x == p
        for l, r in self.intervals:
            m |= (x >= l) & (x <= r)
        return m

    def to_dict(self):
        return {"points": self.points, "intervals": [list(i) for i in self.intervals],
                "interval": list(self.interval), "width": self.width, "scale": self.scale}


def _parse_closed_set(F, interval):
    lo, hi = interval
    points, intervals = [], []
    for item in F:
        if np.ndim(item) == 0:
            x = float(item)
            if not lo < x < hi:
                raise DomainError(f"point {x} is not inside ({lo}, {hi})")
            points.append(x)
        else:
            l, r = map(float, item)
            if not (lo < l <= r < hi):
                raise DomainError(f"interval [{l}, {r}] is not inside ({lo}, {hi})")
            if l == r:
                points.append(l)
            else:
                intervals.append((l, r))
    return sorted(points), sorted(intervals)


def build_critset_form(F, interval=(-1.0, 1.0), width=0.05):
    """Contact form on (a, b) x R^2 whose characteristic foliation on {z = 0}
    vanishes exactly on F x {0}.

    ``F`` is a finite union of points and closed intervals. The profile is
    g = c * prod tanh((x - p)/w) * prod D_k(x), with D_k vanishing exactly on
    the k-th interval, scaled so that sup |g'| <= 1/2; then the contact
    volume g' - 1 stays below -1/2.
    """
    points, intervals = _parse_closed_set(F, interval)
    w = float(width)

    def G(x):
        x = np.asarray(x, float)
        val = np.ones_like(x)
        der = np.zeros_like(x)
        for p in points:
            t = np.tanh((x - p) / w)
            dt = (1.0 - t**2) / w
            der = der * t + val * dt
            val = val * t
        for l, r in intervals:
            d = smooth_step((l - x) / w) + smooth_step((x - r) / w)
            dd = -smooth_step_deriv((l - x) / w) / w + smooth_step_deriv((x - r) / w) / w
            der = der * d + val * dd
            val = val * d
        return val, der

    if not points and not intervals:
        c = 0.5
    else:
        marks = points + [x for iv in intervals for x in iv]
        lo_s, hi_s = min(marks) - 8 * w, max(marks) + 8 * w
        xs = np.linspace(lo_s, hi_s, 200_001)
        dG = np.abs(G(xs)[1])
        k = int(np.argmax(dG))
        h = xs[1] - xs[0]
        opt = minimize_scalar(lambda x: -abs(float(G(np.array(x))[1])),
                              bounds=(xs[max(k - 1, 0)] - h, xs[min(k + 1, len(xs) - 1)] + h),
                              method="bounded", options={"xatol": 1e-12})
        sup = max(float(dG.max()), -float(opt.fun))
        # the tanh tails extend beyond the sampled window but only decay there
        c = 0.5 / sup * (1.0 - 1e-9)

    def g(x):
        return c * G(x)[0]

    def dg(x):
        return c * G(x)[1]

    return CritsetForm(points, intervals, tuple(map(float, interval)), w, c, g, dg)
