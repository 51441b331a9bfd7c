"""Coordinate charts, 1-forms, surface pullbacks and the characteristic field.

Conventions (fixed once, recorded in every report):

* area form on a surface chart is ``omega(u, v) du ^ dv`` (``omega = 1`` unless given);
* the characteristic field solves ``i_X Omega = beta``, i.e.
  ``X = (beta_v, -beta_u) / omega``;
* coorientation is the one given by the supplied contact form.
"""

from dataclasses import dataclass, field

import numpy as np

FD_STEP = 1e-5
AREA_CONVENTION = "Omega = omega du^dv, i_X Omega = beta  =>  X = (beta_v, -beta_u)/omega"


class DomainError(ValueError):
    pass


class Field:
    """Scalar field on R^n with an optional analytic gradient.

    ``value(*coords)`` and ``grad(*coords)`` (returning a sequence of ``n``
    arrays) must broadcast over array arguments.
    """

    def __init__(self, value, grad=None, n=3, label="field"):
        self.value = value
        self.grad = grad
        self.n = n
        self.label = label

    def __call__(self, *coords):
        out = self.value(*coords)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(*coords).shape)

    def fd_gradient(self, *coords, h=FD_STEP):
        coords = [np.asarray(c, dtype=float) for c in coords]
        out = []
        for i in range(self.n):
            plus = list(coords)
            minus = list(coords)
            plus[i] = coords[i] + h
            minus[i] = coords[i] - h
            out.append((self(*plus) - self(*minus)) / (2 * h))
        return out

    def gradient(self, *coords, h=FD_STEP):
        if self.grad is None:
            return self.fd_gradient(*coords, h=h)
        shape = np.broadcast(*coords).shape
        return [np.broadcast_to(np.asarray(g, dtype=float), shape) for g in self.grad(*coords)]

    # composition -----------------------------------------------------
    def __add__(self, other):
        other = as_field(other, self.n)
        grad = None
        if self.grad is not None and other.grad is not None:
            grad = lambda *c: [a + b for a, b in zip(self.gradient(*c), other.gradient(*c))]
        return Field(lambda *c: self(*c) + other(*c), grad, self.n, f"({self.label} + {other.label})")

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-as_field(other, self.n))

    def __rsub__(self, other):
        return as_field(other, self.n) - self

    def __mul__(self, other):
        other = as_field(other, self.n)
        grad = None
        if self.grad is not None and other.grad is not None:
            def grad(*c):
                u, v = self(*c), other(*c)
                return [a * v + u * b for a, b in zip(self.gradient(*c), other.gradient(*c))]
        return Field(lambda *c: self(*c) * other(*c), grad, self.n, f"{self.label}*{other.label}")

    __rmul__ = __mul__


def as_field(obj, n=3):
    if isinstance(obj, Field):
        return obj
    c = float(obj)
    return constant(c, n)


def constant(c, n=3):
    return Field(lambda *x: np.full(np.broadcast(*x).shape, c),
                 lambda *x: [np.zeros(np.broadcast(*x).shape)] * n, n, repr(c))


def coordinate(axis, n=3):
    def grad(*x):
        shape = np.broadcast(*x).shape
        return [np.ones(shape) if i == axis else np.zeros(shape) for i in range(n)]
    return Field(lambda *x: np.asarray(x[axis], dtype=float), grad, n, "xyzw"[axis] if n <= 4 else f"x{axis}")


def function_of(axis, f, df=None, n=3, label="g"):
    """Field depending on one coordinate through the 1-d function ``f``."""
    grad = None
    if df is not None:
        def grad(*x):
            shape = np.broadcast(*x).shape
            d = np.broadcast_to(np.asarray(df(np.asarray(x[axis], dtype=float)), dtype=float), shape)
            return [d if i == axis else np.zeros(shape) for i in range(n)]
    return Field(lambda *x: f(np.asarray(x[axis], dtype=float)), grad, n, f"{label}({'xyzw'[axis]})")


class OneForm:
    """alpha = sum_i coeffs[i] dx^i on R^n."""

    def __init__(self, coeffs):
        self.coeffs = [as_field(c, len(coeffs)) for c in coeffs]
        self.n = len(coeffs)

    def __call__(self, point, vector):
        return sum(c(*point) * v for c, v in zip(self.coeffs, vector))

    def scaled(self, k):
        return OneForm([c * k for c in self.coeffs])


@dataclass
class ContactChart:
    """Axis-aligned box with a 1-form alpha = a dx + b dy + c dz.

    Periodic axes are wrapped into ``[lo, hi)`` inside every evaluator.
    """

    form: OneForm
    domain: tuple
    periodic: tuple = (False, False, False)
    name: str = "chart"
    h: float = FD_STEP
    gradient_check: dict = field(default_factory=dict)

    def __post_init__(self):
        self.domain = tuple(tuple(float(v) for v in b) for b in self.domain)
        self.periodic = tuple(bool(p) for p in self.periodic)
        self.gradient_check = cross_check_gradients(self)

    @property
    def coeffs(self):
        return self.form.coeffs

    def wrap(self, p, check=True):
        out = []
        for x, (lo, hi), per in zip(p, self.domain, self.periodic):
            x = np.asarray(x, dtype=float)
            if per:
                x = lo + np.mod(x - lo, hi - lo)
            elif check:
                slack = 1e-12 * max(1.0, hi - lo)
                if np.any(x < lo - slack) or np.any(x > hi + slack):
                    raise DomainError(f"point outside chart domain {self.domain}")
            out.append(x)
        return out

    def alpha(self, p, check=True):
        q = self.wrap(p, check)
        return [c(*q) for c in self.coeffs]

    def grad_alpha(self, p, check=True):
        q = self.wrap(p, check)
        return [c.gradient(*q, h=self.h) for c in self.coeffs]

    def scaled(self, k):
        return ContactChart(self.form.scaled(k), self.domain, self.periodic, f"{k}*{self.name}", self.h)


def cross_check_gradients(chart, n_probe=16, seed=0):
    """Compare analytic gradients against central differences at random probes."""
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in chart.domain])
    hi = np.array([b[1] for b in chart.domain])
    # keep probes away from the box faces so the stencil stays inside
    pad = np.minimum(10 * chart.h, 0.25 * (hi - lo))
    pts = rng.uniform(lo + pad, hi - pad, size=(n_probe, 3)).T
    worst = 0.0
    for c in chart.form.coeffs:
        if c.grad is None:
            continue
        ga = np.array(c.gradient(*pts))
        gf = np.array(c.fd_gradient(*pts, h=chart.h))
        err = np.max(np.abs(ga - gf) / (1.0 + np.abs(ga)))
        worst = max(worst, float(err))
    if worst > 1e-6:
        raise ValueError(f"analytic gradient disagrees with finite differences (rel err {worst:.3g})")
    return {"max_rel_err": worst, "h": chart.h, "probes": n_probe}


def contact_volume(chart, p, check=True):
    """V(p) with alpha ^ d alpha = V dx^dy^dz."""
    a, b, c = chart.alpha(p, check)
    (ax, ay, az), (bx, by, bz), (cx, cy, cz) = chart.grad_alpha(p, check)
    return a * (cy - bz) + b * (az - cx) + c * (bx - ay)


@dataclass
class ContactCheck:
    is_contact: bool
    min_abs_volume: float
    violating_points: np.ndarray
    sign: int
    grid_resolution: int
    tol: float

    def to_dict(self, max_points=100):
        return {
            "is_contact": self.is_contact,
            "min_abs_volume": self.min_abs_volume,
            "sign": self.sign,
            "n_violations": int(len(self.violating_points)),
            "violating_points": np.asarray(self.violating_points[:max_points]).tolist(),
            "grid_resolution": self.grid_resolution,
            "tol": self.tol,
        }


def grid_axes(domain, periodic, n):
    axes = []
    for (lo, hi), per in zip(domain, periodic):
        axes.append(np.linspace(lo, hi, n, endpoint=not per))
    return axes


def contact_check(chart, grid_resolution=128, tol=1e-9):
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    xs, ys, zs = grid_axes(chart.domain, chart.periodic, grid_resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vols = np.empty((len(xs), len(ys), len(zs)))
    for k, z in enumerate(zs):
        vols[:, :, k] = contact_volume(chart, (X, Y, np.full_like(X, z)))
    absv = np.abs(vols)
    pos = np.count_nonzero(vols > tol)
    neg = np.count_nonzero(vols < -tol)
    sign = 1 if pos >= neg else -1
    bad = (absv <= tol) | (np.sign(vols) != sign)
    idx = np.argwhere(bad)
    pts = np.column_stack([xs[idx[:, 0]], ys[idx[:, 1]], zs[idx[:, 2]]]) if len(idx) else np.empty((0, 3))
    return ContactCheck(
        is_contact=not bad.any(),
        min_abs_volume=float(absv.min()),
        violating_points=pts,
        sign=sign if pos or neg else 0,
        grid_resolution=grid_resolution,
        tol=tol,
    )


# surfaces -------------------------------------------------------------


@dataclass
class SurfaceGraph:
    """Parametrised surface (u, v) -> R^n with its 2 x n derivative."""

    param: object
    jacobian: object
    domain: tuple = ((-0.5, 0.5), (-0.5, 0.5))
    periodic: tuple = (True, True)
    name: str = "surface"
    beta_jacobian: object = None  # optional analytic d(beta) for known surfaces

    def wrap(self, u, v):
        out = []
        for x, (lo, hi), per in zip((u, v), self.domain, self.periodic):
            x = np.asarray(x, dtype=float)
            if per:
                x = lo + np.mod(x - lo, hi - lo)
            out.append(x)
        return out


@dataclass
class PulledBackForm:
    """beta = beta_u du + beta_v dv on a surface chart."""

    beta: object  # (u, v) -> (beta_u, beta_v)
    dbeta: object = None  # (u, v) -> [[d_u beta_u, d_v beta_u], [d_u beta_v, d_v beta_v]]
    domain: tuple = ((-0.5, 0.5), (-0.5, 0.5))
    periodic: tuple = (True, True)
    h: float = FD_STEP

    def __call__(self, u, v):
        return self.beta(u, v)

    def jacobian(self, u, v):
        if self.dbeta is not None:
            return np.asarray(self.dbeta(u, v), dtype=float)
        return fd_jacobian(self.beta, u, v, self.h)


def fd_jacobian(fun, u, v, h=FD_STEP):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    fu = (np.asarray(fun(u + h, v)) - np.asarray(fun(u - h, v))) / (2 * h)
    fv = (np.asarray(fun(u, v + h)) - np.asarray(fun(u, v - h))) / (2 * h)
    return np.stack([fu, fv], axis=1)


def pullback(chart, surface):
    """beta = param^* alpha, evaluated by exact composition of evaluators."""
    def beta(u, v):
        u, v = surface.wrap(u, v)
        pt = surface.param(u, v)
        jac = surface.jacobian(u, v)
        if isinstance(chart, ContactChart):
            coeffs = chart.alpha(pt)
        else:
            coeffs = [c(*pt) for c in chart.coeffs]
        bu = sum(c * d for c, d in zip(coeffs, jac[0]))
        bv = sum(c * d for c, d in zip(coeffs, jac[1]))
        shape = np.broadcast(u, v).shape
        return np.broadcast_to(bu, shape), np.broadcast_to(bv, shape)

    return PulledBackForm(beta, surface.beta_jacobian, surface.domain, surface.periodic)


def plane_surface(domain=((-1.0, 1.0), (-1.0, 1.0)), periodic=(False, False)):
    """{z = 0} parametrised by (u, v) -> (u, v, 0)."""
    def param(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return u, v, np.zeros_like(u)

    def jac(u, v):
        shape = np.broadcast(u, v).shape
        one, zero = np.ones(shape), np.zeros(shape)
        return [(one, zero, zero), (zero, one, zero)]

    return SurfaceGraph(param, jac, domain, periodic, "plane z=0")


def graph_surface(profile):
    """S_f = {(x, y, f(y))} in T^2 x R with coordinates (x, y, r)."""
    f, df = profile.f, profile.df

    def param(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return u, v, f(v)

    def jac(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        one, zero = np.ones_like(u), np.zeros_like(u)
        return [(one, zero, zero), (zero, one, df(v))]

    def dbeta(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        zero = np.zeros_like(u)
        return np.array([[zero, -df(v)], [zero, zero]])

    return SurfaceGraph(param, jac, ((-0.5, 0.5), (-0.5, 0.5)), (True, True),
                        f"S_f[{getattr(profile, 'variant', 'custom')}]", dbeta)


def clifford_torus():
    """Clifford torus in C^2 = R^4 with coordinates (x1, y1, x2, y2)."""
    r = 1.0 / np.sqrt(2.0)

    def param(t1, t2):
        t1, t2 = np.broadcast_arrays(np.asarray(t1, float), np.asarray(t2, float))
        return r * np.cos(t1), r * np.sin(t1), r * np.cos(t2), r * np.sin(t2)

    def jac(t1, t2):
        t1, t2 = np.broadcast_arrays(np.asarray(t1, float), np.asarray(t2, float))
        z = np.zeros_like(t1)
        return [(-r * np.sin(t1), r * np.cos(t1), z, z), (z, z, -r * np.sin(t2), r * np.cos(t2))]

    return SurfaceGraph(param, jac, ((0.0, 2 * np.pi), (0.0, 2 * np.pi)), (True, True), "Clifford torus")


def standard_sphere_form():
    """alpha_std = 1/2 sum_i (x_i dy_i - y_i dx_i) on R^4 = C^2."""
    c = [coordinate(i, 4) for i in range(4)]
    return OneForm([-0.5 * c[1], 0.5 * c[0], -0.5 * c[3], 0.5 * c[2]])


# characteristic field --------------------------------------------------


@dataclass
class FoliationField:
    """Plane vector field X with Jacobian DX on a (possibly periodic) box."""

    X: object
    DX: object = None
    domain: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    periodic: tuple = (False, False)
    area: object = None
    beta: object = None
    name: str = "field"
    h: float = FD_STEP

    def __call__(self, u, v):
        return np.asarray(self.X(u, v), dtype=float)

    def jacobian(self, u, v):
        """DX as an array of shape (2, 2, ...) with DX[i, j] = d X^i / d (u, v)_j."""
        if self.DX is not None:
            return np.asarray(self.DX(u, v), dtype=float)
        return fd_jacobian(lambda a, b: np.asarray(self.X(a, b)), u, v, self.h)

    def wrap(self, u, v):
        out = []
        for x, (lo, hi), per in zip((u, v), self.domain, self.periodic):
            x = np.asarray(x, dtype=float)
            if per:
                x = lo + np.mod(x - lo, hi - lo)
            out.append(x)
        return out

    def inside(self, u, v, slack=0.0):
        ok = np.ones(np.broadcast(u, v).shape, dtype=bool)
        for x, (lo, hi), per in zip((u, v), self.domain, self.periodic):
            if not per:
                ok &= (np.asarray(x) >= lo - slack) & (np.asarray(x) <= hi + slack)
        return ok

    @classmethod
    def from_vector(cls, X, DX=None, domain=((-1.0, 1.0), (-1.0, 1.0)), periodic=(False, False), name="field"):
        return cls(X, DX, domain, periodic, name=name)


def characteristic_field(beta, area=None, domega=None):
    """X = (beta_v, -beta_u)/omega for Omega = omega du^dv (omega = 1 by default)."""
    if area is None:
        omega = lambda u, v: np.ones(np.broadcast(u, v).shape)
        domega = lambda u, v: np.zeros((2,) + np.broadcast(u, v).shape)
    else:
        omega = area

    def X(u, v):
        bu, bv = beta(u, v)
        w = omega(u, v)
        return np.array([bv / w, -bu / w])

    def DX(u, v):
        bu, bv = beta(u, v)
        w = np.asarray(omega(u, v), dtype=float)
        J = beta.jacobian(u, v)  # J[i, j] = d beta_i / d x_j
        if domega is None:
            dw = fd_jacobian(lambda a, b: np.asarray(omega(a, b))[None], u, v)[0]
        else:
            dw = np.asarray(domega(u, v), dtype=float)
        out = np.empty((2, 2) + np.broadcast(u, v).shape)
        for j in range(2):
            out[0, j] = (J[1, j] * w - bv * dw[j]) / w**2
            out[1, j] = -(J[0, j] * w - bu * dw[j]) / w**2
        return out

    return FoliationField(X, DX, beta.domain, beta.periodic, area=omega, beta=beta, name="characteristic")


def field_from_beta(bu, bv, dbeta=None, domain=((-1.0, 1.0), (-1.0, 1.0)), periodic=(False, False)):
    """Characteristic field of a planar 1-form given by coefficient callables."""
    def beta(u, v):
        shape = np.broadcast(u, v).shape
        return np.broadcast_to(bu(u, v), shape), np.broadcast_to(bv(u, v), shape)

    return characteristic_field(PulledBackForm(beta, dbeta, domain, periodic))


# built-in charts ---------------------------------------------------------


def darboux_chart(box=((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))):
    """(R^3, ker(dz - x dy))."""
    x = coordinate(0)
    return ContactChart(OneForm([0.0, -x, 1.0]), box, name="darboux dz - x dy")


def dz_chart(box=((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))):
    return ContactChart(OneForm([0.0, 0.0, 1.0]), box, name="dz")


def model_chart(sign=1, box=((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))):
    """dz + sign * y dx."""
    y = coordinate(1)
    return ContactChart(OneForm([sign * y, 0.0, 1.0]), box, name=f"dz {'+' if sign > 0 else '-'} y dx")


def torus_chart(r_range=(-1.0, 1.0)):
    """T^2 x R with alpha = dy - r dx, coordinates (x, y, r)."""
    r = coordinate(2)
    return ContactChart(OneForm([-r, 1.0, 0.0]), ((-0.5, 0.5), (-0.5, 0.5), r_range),
                        (True, True, False), name="T2xR dy - r dx")


def critset_chart(g, dg, box=((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)), label="g"):
    """alpha = y dx + g(x) dy + dz."""
    return ContactChart(OneForm([coordinate(1), function_of(0, g, dg, label=label), 1.0]), box,
                        name=f"y dx + {label}(x) dy + dz")
