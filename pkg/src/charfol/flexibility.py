"""Interpolating between graph surfaces S_f0 and S_f1 near the orbit y = 0.

The leaves of y' = f_i(y) through (theta, +-eps) are parametrised by
(theta + t, y_i(t)). Writing m(y) for the point reached by the f1-leaf at
the time the f0-leaf needs to get from +-eps to y, the plane map

    phi^tau(x, y) = (x, (1 - lam(x, tau)) y + lam(x, tau) m(y))

carries the f0-foliation to a family ending at the f1-foliation, and the
surface isotopy lifts it by the slope of the image leaves. This module
builds the partition and cutoff, the transport m, the slope and support
checks, and the finite inductive sequence of stages.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bumps import MAX_STEP_SLOPE, smooth_step, smooth_step_deriv
from .flows import Box, IsotopyStage, psi_check
from .ode import dopri5
from .profiles import f_infty, make_profile

GAP_FACTOR = 0.9
TAUS = np.linspace(0.0, 1.0, 9)


# ------------------------------------------------------------------ partition


@dataclass
class Partition:
    """Disjoint closed arc families T0, T1 in S^1 = [0, 1)."""

    eps: float
    T0: list
    T1: list
    gap: float
    period: float

    def complement_lengths(self, which):
        arcs = sorted(self.T0 if which == 0 else self.T1)
        ends = [b for _, b in arcs]
        starts = [a for a, _ in arcs][1:] + [arcs[0][0] + 1.0]
        return [s - e for e, s in zip(ends, starts)]

    def gap_lengths(self):
        arcs = sorted(self.T0 + self.T1)
        ends = [b for _, b in arcs]
        starts = [a for a, _ in arcs][1:] + [arcs[0][0] + 1.0]
        return [s - e for e, s in zip(ends, starts)]

    def overlap(self):
        total = 0.0
        for a0, b0 in self.T0:
            for a1, b1 in self.T1:
                total += max(0.0, min(b0, b1) - max(a0, a1))
        return total

    def verify(self):
        r = math.sqrt(self.eps)
        return {
            "disjoint": self.overlap() == 0.0,
            "max_complement_T0": max(self.complement_lengths(0)),
            "max_complement_T1": max(self.complement_lengths(1)),
            "max_gap": max(self.gap_lengths()),
            "complement_ok": max(self.complement_lengths(0) + self.complement_lengths(1)) < 3 * r,
            "gap_ok": max(self.gap_lengths()) < r,
        }

    def to_dict(self):
        return {"eps": self.eps, "T0": [list(a) for a in self.T0], "T1": [list(a) for a in self.T1],
                "gap": self.gap, "period": self.period}


def build_partition(eps):
    """Equispaced arcs T0, gap, T1, gap repeated n times around the circle.

    Gaps have length 0.9 sqrt(eps) and the period is at most 3.6 sqrt(eps),
    so each complement of T_i has length at most 2.7 sqrt(eps).
    """
    if not 0 < eps < 0.25:
        raise ValueError("need 0 < eps < 1/4")
    r = math.sqrt(eps)
    gap = GAP_FACTOR * r
    n = math.ceil(1.0 / (4 * GAP_FACTOR * r))
    period = 1.0 / n
    arc = period / 2 - gap
    T0, T1 = [], []
    for k in range(n):
        s = k * period
        T0.append((s, s + arc))
        T1.append((s + arc + gap, s + 2 * arc + gap))
    return Partition(float(eps), T0, T1, gap, period)


# ------------------------------------------------------------------ cutoff


@dataclass
class CutoffFamily:
    """lam(x, tau) = a(tau) chi(x) + b(tau) (1 - chi(x)).

    chi is 0 on T0 and 1 on T1; a = s(2 tau) and b = s(2 tau - 1) for the
    smooth step s, so lam vanishes on T0 for tau <= 1/2 and equals 1 on T1
    for tau >= 1/2.
    """

    eps: float
    partition: Partition
    verification: dict = field(default_factory=dict)

    def chi(self, x):
        """(chi, d chi / dx) at x (any real x, read modulo 1)."""
        p = self.partition
        u = np.mod(np.asarray(x, dtype=float), p.period)
        arc = p.period / 2 - p.gap
        rise = (u - arc) / p.gap
        fall = (u - (2 * arc + p.gap)) / p.gap
        val = np.where(u < arc, 0.0, np.where(u <= arc + p.gap, smooth_step(rise),
                       np.where(u <= 2 * arc + p.gap, 1.0, 1.0 - smooth_step(fall))))
        der = np.where(u < arc, 0.0, np.where(u <= arc + p.gap, smooth_step_deriv(rise) / p.gap,
                       np.where(u <= 2 * arc + p.gap, 0.0, -smooth_step_deriv(fall) / p.gap)))
        return val, der

    @staticmethod
    def ab(tau):
        tau = np.asarray(tau, dtype=float)
        return smooth_step(2 * tau), smooth_step(2 * tau - 1)

    def lam(self, x, tau):
        c, _ = self.chi(x)
        a, b = self.ab(tau)
        return a * c + b * (1 - c)

    def dlam_dx(self, x, tau):
        _, dc = self.chi(x)
        a, b = self.ab(tau)
        return (a - b) * dc

    @property
    def sup_dlam_dx(self):
        """Analytic bound sup |d lam / dx| <= sup |s'| / gap."""
        return MAX_STEP_SLOPE / self.partition.gap

    def verify(self, nx=2048, nt=64):
        p = self.partition
        x = np.linspace(0.0, 1.0, nx, endpoint=False)
        tau = np.linspace(0.0, 1.0, nt)
        X, TAU = np.meshgrid(x, tau, indexing="ij")
        lam = self.lam(X, TAU)
        dlam = np.abs(self.dlam_dx(X, TAU))
        inT0 = np.zeros_like(x, dtype=bool)
        inT1 = np.zeros_like(x, dtype=bool)
        for a, b in p.T0:
            inT0 |= (x >= a) & (x <= b)
        for a, b in p.T1:
            inT1 |= (x >= a) & (x <= b)
        first, second = tau <= 0.5, tau >= 0.5
        bound = 2.0 / math.sqrt(self.eps)
        out = {
            "lam_tau0_zero": bool(np.all(lam[:, 0] == 0.0)),
            "lam_tau1_one": bool(np.all(lam[:, -1] == 1.0)),
            "lam_in_unit_interval": bool(np.all((lam >= 0) & (lam <= 1))),
            "zero_on_T0_first_half": bool(np.all(lam[np.ix_(inT0, first)] == 0.0)),
            "one_on_T1_second_half": bool(np.all(lam[np.ix_(inT1, second)] == 1.0)),
            "max_dlam_dx": float(dlam.max()),
            "dlam_bound": bound,
            "dlam_ok": bool(dlam.max() < bound and self.sup_dlam_dx < bound),
            "grid": [nx, nt],
        }
        out["ok"] = all(v for k, v in out.items() if isinstance(v, bool))
        return out

    def to_dict(self):
        return {"eps": self.eps, "partition": self.partition.to_dict(),
                "sup_dlam_dx": self.sup_dlam_dx, "verification": self.verification}


class CutoffError(ValueError):
    pass


def build_cutoff(eps, partition=None, verify_grid=(2048, 64)):
    partition = partition or build_partition(eps)
    cut = CutoffFamily(float(eps), partition)
    cut.verification = cut.verify(*verify_grid)
    if not cut.verification["ok"]:
        raise CutoffError(f"cutoff verification failed: {cut.verification}")
    return cut


# ------------------------------------------------------------------ transport

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_CHUNK = 2048


def _core_kind(prof):
    if prof.variant == "C_eps":
        return "linear"
    if prof.variant in ("C_tilde_eps", "f_infty"):
        return "cubic"
    raise ValueError(f"profile variant {prof.variant!r} has no certified core")


def _core_radius(prof):
    return 0.25 if prof.variant == "f_infty" else prof.delta


def _outer_radius(prof):
    return 0.0 if prof.variant == "f_infty" else prof.eps


def _gl_log(f, sgn, wa, wb, panels):
    """Integral of s / f(s) dw over [wa, wb] (arrays), s = sgn e^w."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + 0.5 * h[:, None] * (_GL_X[None] + 1)).ravel()
    weights = (0.5 * h[:, None] * _GL_W[None]).ravel()
    span = (wb - wa)[..., None]
    s = sgn[..., None] * np.exp(wa[..., None] + span * nodes)
    return np.sum(weights * s / f(s), axis=-1) * span[..., 0]


def flight_time(f, y, eps, breaks=(), panels=32):
    """Time for the leaf of y' = f(y) to get from sign(y) * eps to y.

    The integral of s / f(s) in w = log|s| is evaluated by composite
    Gauss-Legendre quadrature, split at the radii in ``breaks`` so that each
    piece sees one regime of f. Vectorised over 0 < |y| <= eps.
    """
    y = np.asarray(y, dtype=float)
    if y.size > _CHUNK:
        flat = y.ravel()
        parts = [flight_time(f, flat[i:i + _CHUNK], eps, breaks, panels) for i in range(0, flat.size, _CHUNK)]
        return np.concatenate(parts).reshape(y.shape)
    sgn = np.sign(y)
    w_end = np.log(np.abs(y))
    cuts = [math.log(eps)] + sorted((math.log(b) for b in breaks if 0 < b < eps), reverse=True)
    total = np.zeros_like(y)
    for k, wa in enumerate(cuts):
        floor = cuts[k + 1] if k + 1 < len(cuts) else -np.inf
        wb = np.maximum(w_end, floor)
        active = wb < wa
        if active.any():
            total[active] += _gl_log(f, sgn[active], np.full(active.sum(), wa), wb[active], panels)
    return total


class LeafTransport:
    """m(y): position of the f1-leaf at the time the f0-leaf reaches y.

    Both leaves start on the section {y = +-eps}. With T_i the flight
    times, m = T1^{-1}(T0(y)). Once the f1-leaf is inside the common core
    |y| < delta_c the inverse is explicit (linear core -y or cubic core
    -y^3); before that it is obtained by integrating y' = f1(y) in log|y|.
    Because |f1| < |f0| the f1-leaf is slower, so the explicit branch only
    covers |y| small enough that T0(y) >= T1(delta_c).
    """

    def __init__(self, f0, f1, eps, rtol=1e-12, atol=1e-14):
        k0, k1 = _core_kind(f0), _core_kind(f1)
        if k0 != k1:
            raise ValueError(f"mismatched classes: {f0.variant} vs {f1.variant}")
        for prof in (f0, f1):
            if _outer_radius(prof) > eps + 1e-15:
                raise ValueError(f"profile with eps={prof.eps} is not in the class for eps={eps}")
        self.f0, self.f1, self.eps = f0, f1, float(eps)
        self.kind = k0
        self.delta_c = min(_core_radius(f0), _core_radius(f1), self.eps)
        self.rtol, self.atol = rtol, atol
        self._breaks = tuple({self.delta_c, *(r for p in (f0, f1) for r in (_core_radius(p), _outer_radius(p)))})
        d = self.delta_c
        self.core_times = {}
        for sgn in (1.0, -1.0):
            self.core_times[sgn] = tuple(float(self.time(p.f, np.array([sgn * d]))[0]) for p in (f0, f1))

    # flight times and core inverses

    def _core_time(self, y):
        """Time from +-delta_c to y inside the core."""
        d, a = self.delta_c, np.abs(y)
        if self.kind == "linear":
            return np.log(d / a)
        return 0.5 * (1.0 / a**2 - 1.0 / d**2)

    def _core_inverse(self, sgn, t):
        """Core position reached after time t >= 0 from sgn * delta_c."""
        d = self.delta_c
        if self.kind == "linear":
            return sgn * d * np.exp(-t)
        return sgn / np.sqrt(1.0 / d**2 + 2 * t)

    def time(self, f, y):
        return flight_time(f, y, self.eps, self._breaks)

    def T0(self, y):
        """Flight time of the f0-leaf, exact inside the core."""
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        core = np.abs(y) < self.delta_c
        out[~core] = self.time(self.f0.f, y[~core])
        for sgn in (1.0, -1.0):
            sel = core & (np.sign(y) == sgn)
            out[sel] = self.core_times[sgn][0] + self._core_time(y[sel])
        return out

    def constants(self, sgn=1.0):
        """(c0, c1) of the explicit core forms; for the linear core these are logs."""
        t0, t1 = self.core_times[sgn]
        d = self.delta_c
        if self.kind == "linear":
            return math.log(d) + t0, math.log(d) + t1
        return 1.0 / d**2 - 2 * t0, 1.0 / d**2 - 2 * t1

    def closed_form_valid(self, y):
        y = np.asarray(y, dtype=float)
        ok = (np.abs(y) < self.delta_c) & (y != 0)
        t1 = np.where(y > 0, self.core_times[1.0][1], self.core_times[-1.0][1])
        return ok & (self.T0(y) >= t1)

    def closed_form(self, y):
        """Explicit core map: (c1/c0) y, or y / sqrt((c1 - c0) y^2 + 1)."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for sgn in (1.0, -1.0):
            sel = np.sign(y) == sgn
            c0, c1 = self.constants(sgn)
            if self.kind == "linear":
                out[sel] = np.exp(c1 - c0) * y[sel]
            else:
                out[sel] = y[sel] / np.sqrt((c1 - c0) * y[sel] ** 2 + 1.0)
        return out

    # push-forward along f1

    def _push(self, t, sgn):
        """Integrate the f1-leaf from sgn * eps for times t (in log|y|)."""
        f1 = self.f1.f
        w0 = np.full((len(t), 1), math.log(self.eps))
        tt = t[:, None]

        core_r = math.log(_core_radius(self.f1))
        sg = sgn[:, None]

        def rhs(s, W):
            # f1(y) / y, using the explicit core so tiny |y| never underflows
            inner = W < core_r
            yv = sg * np.exp(np.where(inner, core_r, W))
            outer = f1(yv) / yv
            core = -1.0 if self.kind == "linear" else -np.exp(2 * W)
            return tt * np.where(inner, core, outer)

        sol = dopri5(rhs, (0.0, 1.0), w0, rtol=self.rtol, atol=self.atol)
        return sgn * np.exp(sol.y[-1][:, 0])

    def transport(self, y):
        """Purely numerical m: quadrature for T0 and integration for T1^{-1}."""
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        t = flight_time(self.f0.f, flat, self.eps, self._breaks)
        return self._push(t, np.sign(flat)).reshape(y.shape)

    def m(self, y):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = flat.copy()
        band = (flat != 0) & (np.abs(flat) < self.eps)
        idx = np.flatnonzero(band)
        if len(idx):
            yv = flat[idx]
            sgn = np.sign(yv)
            t = self.T0(yv)
            t1 = np.where(sgn > 0, self.core_times[1.0][1], self.core_times[-1.0][1])
            late = t >= t1
            res = np.empty_like(yv)
            res[late] = self._core_inverse(sgn[late], t[late] - t1[late])
            if (~late).any():
                res[~late] = self._push(t[~late], sgn[~late])
            out[idx] = res
        return out.reshape(y.shape)


# ------------------------------------------------------------------ stage isotopy


class StageIsotopy:
    """phi^tau on the torus and its lift E(tau, x, y) = (x, y_tau, slope)."""

    def __init__(self, f0, f1, eps, cutoff=None):
        self.f0, self.f1, self.eps = f0, f1, float(eps)
        self.cutoff = cutoff or build_cutoff(eps)
        self.transport = LeafTransport(f0, f1, eps)
        self.identical = f0 is f1 or (f0.variant != "custom" and f0.to_dict() == f1.to_dict())
        self._cache = (None, None)

    def m(self, y):
        y = np.asarray(y, dtype=float)
        if self.identical:
            return y
        key = (y.shape, y.tobytes())
        if self._cache[0] != key:
            uniq, inv = np.unique(y, return_inverse=True)
            self._cache = (key, self.transport.m(uniq)[inv].reshape(y.shape))
        return self._cache[1]

    def phi(self, tau, x, y):
        lam = self.cutoff.lam(x, tau)
        # written as an increment so that fixed points stay fixed exactly
        return y + lam * (self.m(y) - y)

    def slope(self, tau, x, y):
        m = self.m(y)
        lam = self.cutoff.lam(x, tau)
        f0y = self.f0.f(y)
        return f0y + lam * (self.f1.f(m) - f0y) + (m - y) * self.cutoff.dlam_dx(x, tau)

    def majorant(self, y):
        m = self.m(y)
        return np.maximum(np.abs(self.f0.f(y)), np.abs(self.f1.f(m))) + np.abs(m - y) * self.cutoff.sup_dlam_dx

    def surface(self, tau, pts):
        """Image of the surface points (x, y, f0(y)) labelled by (x, y); shape (n, 3)."""
        pts = np.asarray(pts, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack([np.mod(x, 1.0), self.phi(tau, x, y), self.slope(tau, x, y)])

    def support_stages(self, eta=None):
        """Declared support boxes for tau in [0, 1/2] and [1/2, 1]."""
        r = math.sqrt(self.eps)
        eta = 0.1 * self.eps if eta is None else eta
        part = self.cutoff.partition
        stages = []
        for which, interval in ((0, (0.0, 0.5)), (1, (0.5, 1.0))):
            arcs = sorted(part.T0 if which == 0 else part.T1)
            boxes = []
            for k, (_, end) in enumerate(arcs):
                nxt = arcs[(k + 1) % len(arcs)][0] + (1.0 if k + 1 == len(arcs) else 0.0)
                boxes.append(Box([end, -self.eps - eta, -3 * r], [nxt, self.eps + eta, 3 * r],
                                 (1.0, None, None), f"U{which}[{k}]"))
            stages.append(IsotopyStage(interval, boxes))
        return stages


def phi_tau(f0, f1, cutoff, tau, q, eps=None):
    """phi^tau(q) for q = (x, y) (arrays broadcast)."""
    eps = cutoff.eps if eps is None else eps
    iso = StageIsotopy(f0, f1, eps, cutoff)
    x, y = np.broadcast_arrays(np.asarray(q[0], float), np.asarray(q[1], float))
    return np.array([x, iso.phi(tau, x, y)])


@dataclass
class SlopeReport:
    max_slope: float
    bound: float
    majorant_violations: int
    max_majorant_excess: float
    passed: bool

    def to_dict(self):
        return {"max_slope": self.max_slope, "bound": self.bound,
                "majorant_violations": self.majorant_violations,
                "max_majorant_excess": self.max_majorant_excess, "pass": self.passed}


def slope_check(stage, grid=(256, 256), taus=TAUS):
    """Sweep tau, theta and leaf time t; compare slopes with 3 sqrt(eps) and
    with the per-point majorant max(|f0|, |f1|) + |y1 - y0| sup|lam_x|.

    Leaf times are t_k = T0(y_k) for y_k on a grid of (0, eps], both signs,
    so the sampled points are (theta + t_k, y_k).
    """
    n_theta, n_t = grid
    eps = stage.eps
    yk = eps * np.linspace(1.0, 1.0 / n_t, n_t)
    yk = np.concatenate([yk, -yk])
    tk = flight_time(stage.f0.f, yk, eps)
    theta = np.linspace(0.0, 1.0, n_theta, endpoint=False)
    TH, T = np.meshgrid(theta, tk, indexing="ij")
    Y = np.broadcast_to(yk, TH.shape)
    X = np.mod(TH + T, 1.0)
    stage.m(Y)
    maj = stage.majorant(Y)
    worst, excess, viol = 0.0, -np.inf, 0
    for tau in taus:
        s = np.abs(stage.slope(tau, X, Y))
        worst = max(worst, float(s.max()))
        diff = s - maj
        excess = max(excess, float(diff.max()))
        viol += int(np.sum(diff > 1e-14))
    bound = 3 * math.sqrt(eps)
    return SlopeReport(worst, bound, viol, excess, bool(worst < bound and viol == 0))


@dataclass
class SupportReport:
    ok: bool
    max_outside: float
    max_inside: float
    witness: list = None

    def to_dict(self):
        return {"ok": self.ok, "max_outside_displacement": self.max_outside,
                "max_inside_displacement": self.max_inside, "witness": self.witness}


def support_check(f0, f1, eps, stage, n=256, taus=TAUS, tol=1e-12):
    """Displacement vanishes outside Sigma_eps(f0, f1) thickened in r by 3 sqrt(eps).

    Probes off the band |y| < eps must not move; probes that do move must
    land in {|y| < eps, min(f0, f1) - 3 sqrt(eps) < r < max(f0, f1) + 3 sqrt(eps)}.
    """
    r = math.sqrt(eps)
    x = np.linspace(0.0, 1.0, n, endpoint=False)
    y = np.concatenate([np.linspace(-0.5, 0.5, n, endpoint=False), eps * np.linspace(-1, 1, n)])
    X, Y = np.meshgrid(x, y, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    base = stage.surface(0.0, pts)
    base[:, 2] = f0.f(pts[:, 1])
    outside = np.abs(pts[:, 1]) >= eps
    lo = np.minimum(f0.f(pts[:, 1]), f1.f(pts[:, 1])) - 3 * r
    hi = np.maximum(f0.f(pts[:, 1]), f1.f(pts[:, 1])) + 3 * r
    max_out = max_in = 0.0
    witness = None
    ok = True
    for tau in taus:
        img = stage.surface(tau, pts)
        d = np.abs(img - base)
        d[:, 0] = np.minimum(d[:, 0], 1.0 - d[:, 0])
        disp = np.sqrt(np.sum(d**2, axis=1))
        if outside.any():
            max_out = max(max_out, float(disp[outside].max()))
        max_in = max(max_in, float(disp[~outside].max()))
        moved = disp > tol
        bad = moved & (outside | (np.abs(img[:, 1]) >= eps) | (img[:, 2] <= lo) | (img[:, 2] >= hi))
        if bad.any():
            ok = False
            witness = pts[np.argmax(bad)].tolist()
    ok = ok and max_out < tol
    return SupportReport(bool(ok), max_out, max_in, witness)


def stage_displacement(stage, grid=(256, 256, 9)):
    """sup |E(tau, q) - E(0, q)| over x in S^1, |y| < eps and tau on a grid."""
    nx, ny, nt = grid
    x = np.linspace(0.0, 1.0, nx, endpoint=False)
    y = stage.eps * np.linspace(-1, 1, ny + 2)[1:-1]
    X, Y = np.meshgrid(x, y, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    base = np.column_stack([pts[:, 0], pts[:, 1], stage.f0.f(pts[:, 1])])
    worst = 0.0
    for tau in np.linspace(0.0, 1.0, nt):
        img = stage.surface(tau, pts)
        d = np.abs(img - base)
        d[:, 0] = np.minimum(d[:, 0], 1.0 - d[:, 0])
        worst = max(worst, float(np.sqrt(np.sum(d**2, axis=1)).max()))
    return worst


def stage_psi(stage, n_x=128, n_y=33, eta=None):
    """Run the PSI audit of ``stage`` with the 50 sqrt(eps) declaration."""
    stages = stage.support_stages(eta)
    x = np.linspace(0.0, 1.0, n_x, endpoint=False)
    y = 1.2 * stage.eps * np.linspace(-1, 1, n_y)
    X, Y = np.meshgrid(x, y, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])

    def flow(tau, _pts):
        return stage.surface(tau, pts)

    declared = 50 * math.sqrt(stage.eps)
    rep = psi_check(stages, np.column_stack([pts, stage.f0.f(pts[:, 1])]), flow, declared,
                    periods=(1.0, None, None))
    return rep, stages


def canonical_pair(eps, seed=0, variant="C_eps"):
    """(f0, f1) with f0 in the class at eps (delta = eps/4) and f1 one level deeper."""
    if variant == "C_eps":
        f0 = make_profile("C_eps", eps, eps / 4, seed)
        f1 = make_profile("C_eps", eps / 4, eps / 16, seed + 1)
    else:
        f0 = make_profile("C_tilde_eps", eps, eps / 4, seed)
        f1 = make_profile("f_infty")
    return f0, f1


# ------------------------------------------------------------------ induction


@dataclass
class StageRecord:
    index: int
    eps_i: float
    delta_i: float
    f_i: object
    g_i: object
    displacement: dict
    c0_distance: float
    bound: float
    sup_to_f_infty: float
    support_box: dict
    clauses: dict

    @property
    def passed(self):
        return all(self.clauses.values())

    def to_dict(self):
        return {"index": self.index, "eps_i": self.eps_i, "delta_i": self.delta_i,
                "f_i": self.f_i.to_dict(), "g_i": self.g_i.to_dict(),
                "displacement": self.displacement, "c0_distance": self.c0_distance,
                "c0_bound": self.bound, "sup_f_i_minus_f_infty": self.sup_to_f_infty,
                "support_box": self.support_box, "clauses": self.clauses, "passed": self.passed}


class InductionError(RuntimeError):
    def __init__(self, stage, clause, record=None):
        super().__init__(f"stage {stage}: clause {clause} failed")
        self.stage, self.clause, self.record = stage, clause, record


def _sandwich(outer, middle, inner_f, lo, hi, n=4001, margin=0.05):
    """|outer| >= |middle| >= |inner| on (lo, hi), strictly on its inner part.

    The blends are flat to all orders at the ends of the window, so in
    floating point the strict inequality is only observable away from them.
    """
    y = np.linspace(lo, hi, n + 2)[1:-1]
    y = np.concatenate([y, -y])
    a, b, c = np.abs(outer(y)), np.abs(middle(y)), np.abs(inner_f(y))
    weak = bool(np.all(a >= b) and np.all(b >= c))
    w = margin * (hi - lo)
    mid = (np.abs(y) > lo + w) & (np.abs(y) < hi - w)
    return weak and bool(np.all(a[mid] > b[mid]) and np.all(b[mid] > c[mid]))


def _dominates(f, g, eps, n=8001, margin=0.05):
    """|f| > |g| on 0 < |y| < eps; strict away from the flat end at eps."""
    y = eps * np.linspace(-1, 1, n + 2)[1:-1]
    y = y[y != 0]
    a, b = np.abs(f(y)), np.abs(g(y))
    mid = np.abs(y) < (1 - margin) * eps
    return bool(np.all(a >= b) and np.all(a[mid] > b[mid]))


def run_induction(N=4, C=0.25, c=None, seed=0, grid=(256, 256, 9), psi=True, strict=True):
    """Finite prefix of the inductive sequence of stages.

    eps_i = 0.9 C / 4^i and delta_i = eps_i / 4, so the core of f_{i-1}
    reaches exactly eps_i. Stage i composes two sub-stages: A moves S_g to
    S_f_infty with g in the cubic-core class at eps_i, and B moves S_f_{i-1}
    to S_f_i (linear cores, scale eps_{i-1}). Each sub-stage displacement
    is measured on ``grid`` and compared with 100 sqrt(eps_i); their sum is
    compared with c / 2^i.
    """
    if not 1 <= N <= 8:
        raise ValueError("N must be between 1 and 8")
    if C <= 0 or 0.9 * C >= 0.25:
        raise ValueError("need 0 < 0.9 C < 1/4")
    c = 200 * math.sqrt(C) if c is None else c
    if c <= 0:
        raise ValueError("c must be positive")
    eps = [0.9 * C / 4**i for i in range(N + 1)]
    f_prev = make_profile("C_eps", eps[0], eps[0] / 4, seed)
    finf = make_profile("f_infty")
    records = []
    prev_box = None
    for i in range(1, N + 1):
        e, d, e_prev = eps[i], eps[i] / 4, eps[i - 1]
        g = make_profile("C_tilde_eps", e, d, seed + 100 + i)
        f_i = make_profile("C_eps", e, d, seed + i)
        stage_a = StageIsotopy(g, finf, e)
        stage_b = StageIsotopy(f_prev, f_i, e_prev)
        disp_a = stage_displacement(stage_a, grid)
        disp_b = stage_displacement(stage_b, grid)
        per_bound = 100 * math.sqrt(e)
        slope_a, slope_b = slope_check(stage_a), slope_check(stage_b)
        sup_a = support_check(g, finf, e, stage_a)
        sup_b = support_check(f_prev, f_i, e_prev, stage_b)
        r_prev = math.sqrt(e_prev)
        box = {"x": [0.0, 1.0], "y": [-e_prev, e_prev], "r": [-3 * r_prev, 3 * r_prev]}
        nested = prev_box is None or (box["y"][1] <= prev_box["y"][1] and box["r"][1] <= prev_box["r"][1])
        sup_dist = f_i.sup_distance(finf)
        clauses = {
            "eps_schedule": e < C / 4**i,
            "f_i_class": f_i.variant == "C_eps" and f_i.eps == e,
            "sandwich_f": _sandwich(f_prev.f, f_i.f, finf.f, d, e),
            "sandwich_g": _sandwich(f_prev.f, g.f, finf.f, d, e),
            "dominates_f_infty": _dominates(f_i.f, finf.f, e),
            "slope_A": slope_a.passed,
            "slope_B": slope_b.passed,
            "support_A": sup_a.ok,
            "support_B": sup_b.ok,
            "displacement_A": disp_a <= per_bound,
            "displacement_B": disp_b <= per_bound,
            "c0_distance": disp_a + disp_b < c / 2**i,
            "cauchy": sup_dist < e,
            "boxes_nested": nested,
        }
        if psi:
            rep_a, _ = stage_psi(stage_a)
            rep_b, _ = stage_psi(stage_b)
            clauses["psi_A"] = rep_a.is_psi
            clauses["psi_B"] = rep_b.is_psi
        rec = StageRecord(i, e, d, f_i, g,
                          {"A": disp_a, "B": disp_b, "per_substage_bound": per_bound,
                           "slope_A": slope_a.to_dict(), "slope_B": slope_b.to_dict(),
                           "support_A": sup_a.to_dict(), "support_B": sup_b.to_dict()},
                          disp_a + disp_b, c / 2**i, sup_dist, box, clauses)
        records.append(rec)
        if strict and not rec.passed:
            failed = [k for k, v in clauses.items() if not v]
            raise InductionError(i, failed[0], rec)
        f_prev = f_i
        prev_box = box
    return InductionResult(records, {"N": N, "C": C, "c": c, "seed": seed, "grid": list(grid)})


@dataclass
class InductionResult:
    records: list
    params: dict

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    def to_dict(self):
        return {"params": self.params, "passed": self.passed,
                "stages": [r.to_dict() for r in self.records]}
