"""Convexity of graph surfaces S_f via the two closed orbits of their foliation."""

from dataclasses import dataclass, field

import numpy as np

from .leaves import DEGENERACY_TOL, ReturnMapError, return_map

ORBITS = {"C1": 0.0, "C2": -0.5}


@dataclass
class ConvexityReport:
    orbits: dict
    verdict: str  # convex | non_convex | inconclusive
    obstruction: dict = field(default_factory=dict)

    def to_dict(self):
        return {"orbits": {k: v.to_dict() if hasattr(v, "to_dict") else v for k, v in self.orbits.items()},
                "verdict": self.verdict, "obstruction": self.obstruction}


def periodicity_obstruction(profile, y_star, n=4096):
    """Data showing that no u can satisfy E = u f' - u_x - f u_y > 0 on {y = y*}.

    On a degenerate closed orbit f(y*) = f'(y*) = 0, so E restricts to -u_x
    there; its integral over the circle is zero for every periodic u, hence
    E cannot be positive along the whole orbit. The integral is evaluated
    for a few trial functions as a numerical sanity check.
    """
    fy = float(profile.f(y_star))
    dfy = float(profile.df(y_star))
    x = np.linspace(-0.5, 0.5, n, endpoint=False)
    trials = {
        "1": (np.ones_like(x), np.zeros_like(x), np.zeros_like(x)),
        "2+cos(2 pi x)": (2 + np.cos(2 * np.pi * x), -2 * np.pi * np.sin(2 * np.pi * x), np.zeros_like(x)),
        "1+sin(2 pi x)/2": (1 + 0.5 * np.sin(2 * np.pi * x), np.pi * np.cos(2 * np.pi * x), np.zeros_like(x)),
    }
    integrals = {}
    for name, (u, ux, uy) in trials.items():
        E = u * dfy - ux - fy * uy
        integrals[name] = float(np.mean(E))
    holds = abs(fy) < 1e-12 and abs(dfy) < DEGENERACY_TOL
    return {
        "orbit_y": y_star,
        "f": fy,
        "df": dfy,
        "restricted_integrand": "-du/dx",
        "circle_integral_of_du_dx": 0.0,
        "trial_mean_E": integrals,
        "holds": bool(holds),
        "statement": "E restricted to the orbit is -du/dx, which has zero mean on the circle, "
                     "so E > 0 along the orbit is impossible",
    }


def check_convexity(profile, tol=DEGENERACY_TOL):
    """Verdict from the non-degeneracy of the closed orbits y = 0 and y = -1/2."""
    orbits = {}
    closed = True
    for name, y0 in ORBITS.items():
        if abs(float(profile.f(y0))) > 1e-12:
            closed = False
            orbits[name] = {"y_in": y0, "closed": False}
            continue
        try:
            orbits[name] = return_map(profile, y0, tol=tol)
        except ReturnMapError as exc:
            orbits[name] = {"y_in": y0, "error": str(exc)}
            closed = False
    degenerate = [n for n, r in orbits.items() if hasattr(r, "degenerate") and r.degenerate]
    if degenerate:
        name = degenerate[0]
        obs = periodicity_obstruction(profile, ORBITS[name])
        obs["orbit"] = name
        verdict = "non_convex" if obs["holds"] else "inconclusive"
        return ConvexityReport(orbits, verdict, obs)
    if not closed:
        return ConvexityReport(orbits, "inconclusive", {"reason": "an expected orbit is not closed"})
    return ConvexityReport(orbits, "convex", {})


@dataclass
class WitnessResult:
    holds: bool
    min_margin: float
    argmin: tuple

    def to_dict(self):
        return {"holds": self.holds, "min_margin": self.min_margin, "argmin": list(self.argmin)}


def verify_witness(profile, u, du=None, grid=256, tol=1e-9, h=1e-6):
    """Evaluate E = u f'(y) - u_x - f(y) u_y on a grid of the torus.

    ``u(x, y)`` is a periodic function; ``du(x, y)`` returns (u_x, u_y) and
    defaults to central differences.
    """
    xs = np.linspace(-0.5, 0.5, grid, endpoint=False)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    U = np.broadcast_to(np.asarray(u(X, Y), dtype=float), X.shape)
    if du is None:
        ux = (u(X + h, Y) - u(X - h, Y)) / (2 * h)
        uy = (u(X, Y + h) - u(X, Y - h)) / (2 * h)
    else:
        ux, uy = du(X, Y)
    ux = np.broadcast_to(ux, X.shape)
    uy = np.broadcast_to(uy, X.shape)
    E = U * profile.df(Y) - ux - profile.f(Y) * uy
    k = np.unravel_index(int(np.argmin(E)), E.shape)
    m = float(E[k])
    return WitnessResult(bool(m > tol), m, (float(X[k]), float(Y[k])))
