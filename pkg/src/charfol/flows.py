"""Contact Hamiltonian dynamics in the Darboux model (R^3, ker(dz - x dy)).

The contact vector field of H is

    X_H = (H_y + x H_z, -H_x, H - x H_x),

so alpha(X_H) = H and L_{X_H} alpha = H_z alpha. This module builds such
fields, checks the conformal identity numerically, constructs and verifies
contact hammers, and audits piecewise-supported isotopies.
"""

from dataclasses import dataclass, field

import numpy as np

from .bumps import MAX_STEP_SLOPE, flat_top_bump, hammer_ramp
from .ode import StepSizeError, dopri5_multi


@dataclass
class Hamiltonian:
    """H with its gradient; both take arrays x, y, z and broadcast."""

    name: str
    H: object
    grad: object  # (x, y, z) -> (H_x, H_y, H_z)

    def __call__(self, x, y, z):
        return self.H(x, y, z)


def _catalogue():
    def b(f):
        return lambda x, y, z: f(*np.broadcast_arrays(*(np.asarray(a, float) for a in (x, y, z))))

    one = Hamiltonian("one", b(lambda x, y, z: np.ones_like(x)),
                      b(lambda x, y, z: (np.zeros_like(x),) * 3))
    lin = Hamiltonian("x", b(lambda x, y, z: x.copy()),
                      b(lambda x, y, z: (np.ones_like(x), np.zeros_like(x), np.zeros_like(x))))
    xyz = Hamiltonian("xyz", b(lambda x, y, z: x * y * z), b(lambda x, y, z: (y * z, x * z, x * y)))
    quad = Hamiltonian("quadratic", b(lambda x, y, z: 0.5 * (x**2 + y**2) + z),
                       b(lambda x, y, z: (x, y, np.ones_like(z))))
    wave = Hamiltonian("wave", b(lambda x, y, z: np.sin(y) * np.cos(z) + 0.3 * x * z**2),
                       b(lambda x, y, z: (0.3 * z**2, np.cos(y) * np.cos(z),
                                          -np.sin(y) * np.sin(z) + 0.6 * x * z)))
    return {h.name: h for h in (one, lin, xyz, quad, wave)}


CATALOGUE = _catalogue()


def catalogue(name=None, **kwargs):
    """Return a catalogue Hamiltonian by name; ``hammer`` builds the canonical hammer."""
    if name is None:
        return sorted(list(CATALOGUE) + ["hammer"])
    if name == "hammer":
        return build_hammer(**kwargs).hamiltonian if kwargs else canonical_hammer().hamiltonian
    try:
        return CATALOGUE[name]
    except KeyError:
        raise ValueError(f"unknown Hamiltonian {name!r}") from None


def hamiltonian_field(H, p):
    """X_H at p (arrays broadcast); returns an array of shape (3, ...)."""
    x, y, z = (np.asarray(c, dtype=float) for c in p)
    h = H.H(x, y, z)
    hx, hy, hz = H.grad(x, y, z)
    return np.array(np.broadcast_arrays(hy + x * hz, -hx, h - x * hx))


def alpha_darboux(p, v):
    """(dz - x dy)(v) at p."""
    return v[2] - p[0] * v[1]


def _rk4_flow(H, p, t, substeps=4):
    p = np.asarray(p, dtype=float)
    h = t / substeps
    for _ in range(substeps):
        k1 = hamiltonian_field(H, p)
        k2 = hamiltonian_field(H, p + 0.5 * h * k1)
        k3 = hamiltonian_field(H, p + 0.5 * h * k2)
        k4 = hamiltonian_field(H, p + h * k3)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def _pulled_back(H, p, t, h):
    """Coefficients of (phi_t^* alpha)_p, with D phi_t from a five-point stencil."""
    q = _rk4_flow(H, p, t)
    coeff = []
    for j in range(3):
        e = np.zeros((3,) + np.shape(p)[1:])
        e[j] = h
        dphi = (8 * (_rk4_flow(H, p + e, t) - _rk4_flow(H, p - e, t))
                - (_rk4_flow(H, p + 2 * e, t) - _rk4_flow(H, p - 2 * e, t))) / (12 * h)
        coeff.append(alpha_darboux(q, dphi))
    return np.array(coeff)


def conformal_factor_check(H, p, t_small=1e-4, h=1e-5):
    """|L_{X_H} alpha - H_z alpha| at p via a finite-difference Lie derivative.

    The Lie derivative is the fourth-order central difference in t of the
    pulled-back form phi_t^* alpha. Vectorised over p of shape (3, n).
    """
    p = np.asarray(p, dtype=float)
    a1 = _pulled_back(H, p, t_small, h) - _pulled_back(H, p, -t_small, h)
    a2 = _pulled_back(H, p, 2 * t_small, h) - _pulled_back(H, p, -2 * t_small, h)
    lie = (8 * a1 - a2) / (12 * t_small)
    hz = H.grad(*p)[2]
    alpha = np.array(np.broadcast_arrays(np.zeros_like(p[0]), -p[0], np.ones_like(p[0])))
    return np.sqrt(np.sum((lie - hz * alpha) ** 2, axis=0))


# ------------------------------------------------------------------ hammer


@dataclass
class HammerSpec:
    """H = f_delta(y) g_delta(x) g_delta(z - z0) with p = (0, y1, z0), q = (0, y2, z0).

    Along the flow f_delta(y) g_delta(x) is conserved, so points of Q1 leave
    {x = 0}, ride the plateau of f_delta towards y2 and cross to x < 0 near q.
    ``amplitude`` scales f_delta so that this ride takes longer than the
    design horizon.
    """

    y1: float
    y2: float
    delta: float
    eps: float
    z0: float = 0.0
    amplitude: float = 1.0

    def f_delta(self, y):
        f, df = hammer_ramp(y, self.y1, self.y2, self.delta)
        return self.amplitude * f, self.amplitude * df

    def g_delta(self, t):
        return flat_top_bump(t, self.delta)

    @property
    def hamiltonian(self):
        def H(x, y, z):
            return self.f_delta(y)[0] * self.g_delta(x)[0] * self.g_delta(np.asarray(z) - self.z0)[0]

        def grad(x, y, z):
            f, df = self.f_delta(y)
            gx, dgx = self.g_delta(x)
            gz, dgz = self.g_delta(np.asarray(z) - self.z0)
            return np.broadcast_arrays(f * dgx * gz, df * gx * gz, f * gx * dgz)

        return Hamiltonian("hammer", H, grad)

    @property
    def p(self):
        return np.array([0.0, self.y1, self.z0])

    @property
    def q(self):
        return np.array([0.0, self.y2, self.z0])

    def in_ball(self, pts, centre):
        """Open sup-norm cube of half-width delta about ``centre``."""
        d = np.abs(np.asarray(pts, dtype=float) - np.asarray(centre)[:, None])
        return np.all(d < self.delta, axis=0)

    def to_dict(self):
        return {"y1": self.y1, "y2": self.y2, "delta": self.delta, "eps": self.eps, "z0": self.z0,
                "amplitude": self.amplitude,
                "support": [[-self.delta, self.delta], [self.y1 - self.delta, self.y2 + self.delta],
                            [self.z0 - self.delta, self.z0 + self.delta]]}


def build_hammer(p, q, eps, T=1.0, safety=0.8):
    """Hammer between p and q on the leaf {x = 0, z = z0} of {x = 0}.

    delta = safety * min(eps/4, (y2 - y1)/2). The amplitude of f_delta is
    chosen so that |dy/dt| <= amplitude * sup|g'| keeps every trajectory on
    the plateau y1 + delta < y < y2 - delta for at least 2T; before that no
    point can change the sign of x.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p[0] != 0 or q[0] != 0:
        raise ValueError("p and q must lie on the surface {x = 0}")
    if p[2] != q[2]:
        raise ValueError("p and q must share the z coordinate (same leaf)")
    if not p[1] < q[1]:
        raise ValueError("need y1 < y2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if T <= 0:
        raise ValueError("T must be positive")
    delta = safety * min(eps / 4.0, (q[1] - p[1]) / 2.0)
    plateau = q[1] - p[1] - 2 * delta
    g_slope = MAX_STEP_SLOPE / (0.5 * delta)
    amplitude = min(1.0, plateau / (2.0 * T * g_slope)) if plateau > 0 else 1.0
    return HammerSpec(float(p[1]), float(q[1]), float(delta), float(eps), float(p[2]), float(amplitude))


def canonical_hammer():
    return build_hammer((0.0, 0.0, 0.0), (0.0, 0.5, 0.0), 0.1)


@dataclass
class HammerReport:
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    cond_iv: bool
    witnesses: dict
    n_samples: dict
    times: list
    failed: bool = False
    message: str = ""

    @property
    def passed(self):
        return self.cond_i and self.cond_ii and self.cond_iii and self.cond_iv and not self.failed

    def to_dict(self):
        return {"cond_i": self.cond_i, "cond_ii": self.cond_ii, "cond_iii": self.cond_iii,
                "cond_iv": self.cond_iv, "passed": self.passed, "witnesses": self.witnesses,
                "n_samples": self.n_samples, "times": self.times, "failed": self.failed,
                "message": self.message}


def hammer_samples(spec, n=50):
    """Sample points on {x = 0}: an n x n grid inside each ball and an n x n
    grid over a window around the support."""
    d = spec.delta
    c = (np.arange(n) + 0.5) / n
    out = {}
    for name, centre in (("B_p", spec.p), ("B_q", spec.q)):
        Y, Z = np.meshgrid(centre[1] - d + 2 * d * c, centre[2] - d + 2 * d * c, indexing="ij")
        out[name] = np.array([np.zeros(Y.size), Y.ravel(), Z.ravel()])
    ys = np.linspace(spec.y1 - 3 * d, spec.y2 + 3 * d, n)
    zs = np.linspace(spec.z0 - 3 * d, spec.z0 + 3 * d, n)
    Y, Z = np.meshgrid(ys, zs, indexing="ij")
    pts = np.array([np.zeros(Y.size), Y.ravel(), Z.ravel()])
    keep = ~(spec.in_ball(pts, spec.p) | spec.in_ball(pts, spec.q))
    out["outside"] = pts[:, keep]
    return out


def flow_hammer(spec, pts, times, rtol=1e-10, atol=1e-15):
    """Positions of the hammer flow at each time; shape (len(times), 3, n)."""
    H = spec.hamiltonian
    times = np.asarray(times, dtype=float)
    pts = np.asarray(pts, dtype=float)
    out = np.repeat(pts[None], len(times), axis=0)
    pos = times > 0
    if pos.any():
        traj = dopri5_multi(lambda t, y: hamiltonian_field(H, y.T).T, times[pos], pts.T,
                            rtol=rtol, atol=atol)
        out[pos] = np.transpose(traj, (0, 2, 1))
    return out


def verify_hammer(spec, sample_grid=50, T=1.0, tol=1e-12, k_max=12):
    """Sampled check of the four hammer conditions.

    (i) the flow at t = 0 is the identity; (ii) samples of {x = 0} inside the
    cube around p have x > 0 at every sampled t > 0; (iii) samples inside the
    cube around q have x < 0; (iv) other samples of {x = 0} keep |x| < tol
    and never enter either cube. Positive times are T * 2^-k, k = 0..k_max.
    """
    samples = hammer_samples(spec, sample_grid)
    counts = {k: int(v.shape[1]) for k, v in samples.items()}
    times = sorted(T * 2.0 ** -np.arange(k_max + 1)) if T > 0 else []
    all_pts = np.concatenate([samples["B_p"], samples["B_q"], samples["outside"]], axis=1)
    ident = flow_hammer(spec, all_pts, [0.0])[0]
    cond_i = bool(np.array_equal(ident, all_pts))
    wit = {}
    if not times:
        return HammerReport(cond_i, True, True, True, wit, counts, [])
    try:
        traj = flow_hammer(spec, all_pts, times)
    except StepSizeError as exc:
        return HammerReport(cond_i, False, False, False, wit, counts, times, True, str(exc))
    n_p, n_q = counts["B_p"], counts["B_q"]
    xp = traj[:, 0, :n_p]
    xq = traj[:, 0, n_p:n_p + n_q]
    out = traj[:, :, n_p + n_q:]
    # a flat bump leaves x tiny but positive near the cube faces, so the
    # side conditions are strict signs; tol applies to the invariance check
    cond_ii = bool(np.all(xp > 0))
    cond_iii = bool(np.all(xq < 0))
    wit["min_x_B_p"] = float(xp.min())
    wit["max_x_B_q"] = float(xq.max())
    drift = np.abs(out[:, 0, :])
    entered = np.zeros(out.shape[2], dtype=bool)
    for k in range(out.shape[0]):
        entered |= spec.in_ball(out[k], spec.p) | spec.in_ball(out[k], spec.q)
    cond_iv = bool(drift.max() < tol and not entered.any())
    wit["max_abs_x_outside"] = float(drift.max())
    wit["outside_entering_balls"] = int(entered.sum())
    if not cond_ii:
        j = int(np.argmin(xp.min(axis=0)))
        wit["cond_ii_point"] = samples["B_p"][:, j].tolist()
    if not cond_iii:
        j = int(np.argmax(xq.max(axis=0)))
        wit["cond_iii_point"] = samples["B_q"][:, j].tolist()
    return HammerReport(cond_i, cond_ii, cond_iii, cond_iv, wit, counts, [float(t) for t in times])


# ------------------------------------------------------------------ PSI


@dataclass
class Box:
    """Open axis-aligned box; ``periods[k]`` makes axis k circular."""

    lo: np.ndarray
    hi: np.ndarray
    periods: tuple = None
    label: str = ""

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.periods is None:
            self.periods = (None,) * len(self.lo)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        ok = np.ones(pts.shape[0], dtype=bool)
        for k, L in enumerate(self.periods):
            x = pts[:, k]
            if L is None:
                ok &= (x > self.lo[k]) & (x < self.hi[k])
            else:
                ok &= np.mod(x - self.lo[k], L) < (self.hi[k] - self.lo[k])
                ok &= np.mod(x - self.lo[k], L) > 0
        return ok

    def overlaps(self, other):
        for k, L in enumerate(self.periods):
            a0, a1, b0, b1 = self.lo[k], self.hi[k], other.lo[k], other.hi[k]
            if L is None:
                if a1 <= b0 or b1 <= a0:
                    return False
            else:
                s = np.mod(b0 - a0, L)
                if s >= a1 - a0 and s + (b1 - b0) <= L:
                    return False
        return True

    def to_dict(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "diameter": self.diameter,
                "label": self.label}


@dataclass
class IsotopyStage:
    time_interval: tuple
    support_sets: list
    trajectory_log: dict = field(default_factory=dict)

    def to_dict(self):
        return {"time_interval": list(self.time_interval),
                "support_sets": [b.to_dict() for b in self.support_sets]}


@dataclass
class PsiReport:
    is_psi: bool
    displacement_bound: float
    eps: float
    max_visits: int
    diameters_ok: bool
    disjoint_ok: bool
    leakage: list
    witness: list = None

    def to_dict(self):
        return {"is_psi": self.is_psi, "displacement": self.displacement_bound, "eps": self.eps,
                "bound": 2 * self.eps, "max_visits_per_stage": self.max_visits,
                "diameters_ok": self.diameters_ok, "disjoint_ok": self.disjoint_ok,
                "n_leaks": len(self.leakage), "witness": self.witness}


def _distance(a, b, periods):
    d = np.abs(a - b)
    for k, L in enumerate(periods or ()):
        if L is not None:
            d[..., k] = np.minimum(np.mod(d[..., k], L), L - np.mod(d[..., k], L))
    return np.sqrt(np.sum(d**2, axis=-1))


def psi_check(stages, tracked_points, flow, eps, n_tau=17, dtau=1e-4, move_tol=1e-12, periods=None):
    """Audit a two-stage isotopy for eps-piecewise support.

    ``flow(tau, pts)`` maps tracked points (n, d) to their images at time tau.
    A point is moving at tau when its central-difference velocity exceeds
    ``move_tol``; its image must then lie in a support set of the current
    stage. Each trajectory may visit at most one set per stage, and the
    sup-displacement over the sampled times must stay below 2 eps.
    """
    if len(stages) != 2:
        raise ValueError("psi_check expects exactly two stages")
    pts = np.asarray(tracked_points, dtype=float)
    diam_ok = all(b.diameter < eps for s in stages for b in s.support_sets)
    disjoint = all(not a.overlaps(b) for s in stages
                   for i, a in enumerate(s.support_sets) for b in s.support_sets[i + 1:])
    leaks = []
    max_visits = 0
    disp = 0.0
    witness = None
    for si, st in enumerate(stages):
        t0, t1 = st.time_interval
        taus = np.linspace(t0, t1, n_tau)
        visited = np.zeros((len(pts), len(st.support_sets)), dtype=bool)
        for tau in taus:
            img = flow(tau, pts)
            d = _distance(img, pts, periods)
            if d.max() > disp:
                disp = float(d.max())
            lo, hi = max(tau - dtau, 0.0), min(tau + dtau, 1.0)
            vel = _distance(flow(hi, pts), flow(lo, pts), periods) / (hi - lo)
            moving = vel > move_tol
            inside = np.zeros(len(pts), dtype=bool)
            for j, box in enumerate(st.support_sets):
                c = box.contains(img)
                visited[:, j] |= c & moving
                inside |= c
            bad = np.flatnonzero(moving & ~inside)
            if len(bad):
                leaks.append({"stage": si, "tau": float(tau), "point": pts[bad[0]].tolist()})
        counts = visited.sum(axis=1)
        st.trajectory_log = {int(i): np.flatnonzero(visited[i]).tolist()
                             for i in np.flatnonzero(counts)}
        if counts.size and counts.max() > max_visits:
            max_visits = int(counts.max())
            witness = pts[int(np.argmax(counts))].tolist()
    ok = diam_ok and disjoint and not leaks and max_visits <= 1 and disp < 2 * eps
    if leaks and witness is None:
        witness = leaks[0]["point"]
    return PsiReport(bool(ok), disp, eps, max_visits, diam_ok, disjoint, leaks, witness)
