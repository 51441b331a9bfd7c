"""Profile functions f on the circle S^1 = [-1/2, 1/2) for graph surfaces S_f."""

from dataclasses import dataclass, field

import numpy as np

from .bumps import DEFAULT_K, ramp, window

VARIANTS = ("f_infty", "C_eps", "C_tilde_eps", "custom")
F_INF_AMPLITUDE = 0.05
F_INF_BLEND = (0.25, 0.375)
CERT_POINTS = 10_000


class ProfileError(ValueError):
    """A profile violates one of its defining clauses."""

    def __init__(self, clause, detail=""):
        super().__init__(f"clause {clause} violated{': ' + detail if detail else ''}")
        self.clause = clause


def wrap_circle(y):
    y = np.asarray(y, dtype=float)
    # leave [-1/2, 1/2) untouched so tiny |y| keep full precision
    return np.where((y >= -0.5) & (y < 0.5), y, np.mod(y + 0.5, 1.0) - 0.5)


def _wave(y, a):
    # -a sin(2 pi y), phase-shifted so that y = -1/2 gives exactly 0
    return a * np.sin(2 * np.pi * (y - 0.5 * np.sign(y)))


def f_infty(y):
    """-y^3 near 0, blended into -A sin(2 pi y) before reaching |y| = 1/2."""
    y = wrap_circle(y)
    chi, dchi = ramp(np.abs(y), *F_INF_BLEND)
    a = F_INF_AMPLITUDE
    cubic = -y**3
    wave = _wave(y, a)
    return (1 - chi) * cubic + chi * wave


def df_infty(y):
    y = wrap_circle(y)
    chi, dchi = ramp(np.abs(y), *F_INF_BLEND)
    a = F_INF_AMPLITUDE
    cubic, dcubic = -y**3, -3 * y**2
    wave = _wave(y, a)
    dwave = 2 * np.pi * a * np.cos(2 * np.pi * (y - 0.5 * np.sign(y)))
    return (1 - chi) * dcubic + chi * dwave + np.sign(y) * dchi * (wave - cubic)


@dataclass
class ProfileFunction:
    variant: str
    eps: float = None
    delta: float = None
    seed: int = None
    params: dict = field(default_factory=dict)
    f: object = None
    df: object = None
    pieces: list = field(default_factory=list)

    def __call__(self, y):
        return self.f(y)

    def to_dict(self):
        if self.variant == "custom":
            raise ValueError("custom profiles carry arbitrary callables and are not serialisable")
        return {"variant": self.variant, "eps": self.eps, "delta": self.delta,
                "seed": self.seed, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d):
        return make_profile(d["variant"], d.get("eps"), d.get("delta"), d.get("seed"),
                            params=d.get("params"))

    def sup_distance(self, other, n=CERT_POINTS + 1):
        y = np.linspace(-0.5, 0.5, n)
        return float(np.max(np.abs(self.f(y) - other.f(y))))


def custom_profile(f, df, name="custom"):
    return ProfileFunction("custom", f=f, df=df, pieces=[name])


def _c_eps(eps, delta, k):
    def f(y):
        y = wrap_circle(y)
        chi, _ = ramp(np.abs(y), delta, eps, k)
        inner = (1 - chi) * (-y) + chi * (-y**3)
        return np.where(np.abs(y) < eps, inner, f_infty(y))

    def df(y):
        y = wrap_circle(y)
        chi, dchi = ramp(np.abs(y), delta, eps, k)
        inner = (1 - chi) * (-1.0) + chi * (-3 * y**2) + np.sign(y) * dchi * (y - y**3)
        return np.where(np.abs(y) < eps, inner, df_infty(y))

    return f, df


def _c_tilde(eps, delta, amp, k):
    def f(y):
        y = wrap_circle(y)
        w, _ = window(np.abs(y), delta, eps, k)
        return np.where(np.abs(y) < eps, -y**3 - amp * w * y, f_infty(y))

    def df(y):
        y = wrap_circle(y)
        w, dw = window(np.abs(y), delta, eps, k)
        inner = -3 * y**2 - amp * (w + np.abs(y) * dw)
        return np.where(np.abs(y) < eps, inner, df_infty(y))

    return f, df


def make_profile(variant, eps=None, delta=None, seed=0, params=None):
    """Build and certify a profile.

    ``f_infty`` is the fixed degenerate profile. ``C_eps`` has the linear
    core -y on (-delta, delta); ``C_tilde_eps`` keeps the cubic core -y^3.
    The seed draws the blend parameters (transition steepness, and the bump
    amplitude for ``C_tilde_eps``) unless ``params`` gives them explicitly.
    """
    if variant not in VARIANTS or variant == "custom":
        raise ValueError(f"unknown or non-constructible variant {variant!r}")
    if variant == "f_infty":
        prof = ProfileFunction("f_infty", None, None, seed, {}, f_infty, df_infty,
                               ["-y^3 on |y| <= 1/4", "blend on 1/4 < |y| < 3/8",
                                f"-{F_INF_AMPLITUDE} sin(2 pi y) on |y| >= 3/8"])
        certify(prof)
        return prof
    if eps is None or delta is None:
        raise ValueError(f"{variant} needs eps and delta")
    eps, delta = float(eps), float(delta)
    if not 0 < delta < eps < 0.25:
        raise ValueError(f"need 0 < delta < eps < 1/4, got delta={delta}, eps={eps}")
    rng = np.random.default_rng(seed)
    params = dict(params or {})
    params.setdefault("k", float(DEFAULT_K + 0.4 * rng.uniform()))
    if variant == "C_eps":
        f, df = _c_eps(eps, delta, params["k"])
        pieces = ["-y on |y| < delta", "blend -y -> -y^3 on delta <= |y| < eps", "f_infty on |y| >= eps"]
    else:
        params.setdefault("amp", float(0.25 + 0.25 * rng.uniform()))
        f, df = _c_tilde(eps, delta, params["amp"], params["k"])
        pieces = ["-y^3 on |y| <= delta", "-y^3 - a w(|y|) y on delta < |y| < eps", "f_infty on |y| >= eps"]
    prof = ProfileFunction(variant, eps, delta, seed, params, f, df, pieces)
    certify(prof)
    return prof


def certify(prof, n=CERT_POINTS):
    """Check every defining clause of ``prof`` on an n-point grid of the circle."""
    y = np.linspace(-0.5, 0.5, n, endpoint=False)
    fy = prof.f(y)
    if prof.variant == "f_infty":
        core = np.abs(y) <= 0.25
        if np.max(np.abs(fy[core] + y[core] ** 3)) > 1e-15:
            raise ProfileError("f_infty cubic core")
        if abs(float(prof.f(-0.5))) > 1e-15 or abs(float(prof.df(-0.5))) < 1e-3:
            raise ProfileError("f_infty orbit at -1/2")
        neg, pos = (y > -0.5) & (y < 0), y > 0
        if np.any(fy[neg] <= 0) or np.any(fy[pos] >= 0):
            raise ProfileError("f_infty sign conditions")
        return
    eps, delta = prof.eps, prof.delta
    outer = np.abs(y) >= eps
    if np.any(fy[outer] != f_infty(y[outer])):
        raise ProfileError("C1", "f differs from f_infty off (-eps, eps)")
    inner = np.abs(y) < eps
    if np.max(np.abs(fy[inner])) >= eps:
        raise ProfileError("C1", "max |f| >= eps on (-eps, eps)")
    yp = y[(y > 0) & (y < eps)]
    if np.any(prof.f(yp) >= 0) or np.max(np.abs(prof.f(yp) + prof.f(-yp))) > 1e-15:
        raise ProfileError("C2")
    yc = y[np.abs(y) < delta]
    target = -yc if prof.variant == "C_eps" else -yc**3
    if np.max(np.abs(prof.f(yc) - target)) > 1e-15:
        raise ProfileError("C3" if prof.variant == "C_eps" else "C3~")
