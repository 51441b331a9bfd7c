"""Leaf integration, closed-form leaf oracles and Poincare return maps."""

import csv
from dataclasses import dataclass

import numpy as np

from .chart import DomainError
from .ode import StepSizeError, dopri5

CRITICAL_CUTOFF = 1e-10
DEGENERACY_TOL = 1e-6

REACHED_TIME = "reached_time"
CONVERGED = "converged_to_point"
LEFT_DOMAIN = "left_domain"
HIT_CRITICAL = "hit_critical_tol"


class LeafIntegrationError(RuntimeError):
    def __init__(self, msg, t, state):
        super().__init__(msg)
        self.t = t
        self.state = state


class ReturnMapError(RuntimeError):
    pass


@dataclass
class LeafTrace:
    """Polyline (t, u, v) approximating one leaf; u, v are not wrapped."""

    points: np.ndarray
    local_error: np.ndarray
    max_step: float
    max_error: float
    terminal_flag: str

    @property
    def t(self):
        return self.points[:, 0]

    @property
    def uv(self):
        return self.points[:, 1:]

    @property
    def end(self):
        return self.points[-1, 1:]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "u", "v", "local_error"])
            for (t, u, v), e in zip(self.points, self.local_error):
                w.writerow([repr(float(t)), repr(float(u)), repr(float(v)), repr(float(e))])


def integrate_leaf(field, p0, t_span, rtol=1e-9, atol=1e-12, critical_tol=CRITICAL_CUTOFF,
                   target=None, target_tol=0.0, max_steps=200_000):
    """Follow the leaf of ``field`` through ``p0`` over ``t_span`` (either direction).

    Stops when the trace leaves a non-periodic side of the domain, when
    ``|X| < critical_tol`` (convergence to a singularity), optionally when it
    comes within ``target_tol`` of ``target``, or at the end of ``t_span``.
    """
    def rhs(t, y):
        u, v = field.wrap(y[0], y[1])
        return field(u, v)

    def norm_x(y):
        u, v = field.wrap(y[0], y[1])
        return float(np.hypot(*field(u, v)))

    def stop(t, y):
        if not bool(field.inside(y[0], y[1])):
            return True
        if norm_x(y) < critical_tol:
            return True
        if target is not None and np.hypot(y[0] - target[0], y[1] - target[1]) < target_tol:
            return True
        return False

    try:
        sol = dopri5(rhs, t_span, np.asarray(p0, dtype=float), rtol=rtol, atol=atol,
                     stop=stop, record_steps=True, max_steps=max_steps)
    except StepSizeError as exc:
        raise LeafIntegrationError(str(exc), exc.t, exc.y) from exc

    end = sol.y[-1]
    near_target = target is not None and np.hypot(end[0] - target[0], end[1] - target[1]) < target_tol
    if not sol.stopped[0]:
        flag = REACHED_TIME
    elif not bool(field.inside(end[0], end[1])):
        flag = LEFT_DOMAIN
    elif near_target or (target is None and norm_x(end) < critical_tol):
        flag = CONVERGED
    else:
        # |X| fell below the cutoff away from the requested target
        flag = HIT_CRITICAL
    pts = np.column_stack([sol.t, sol.y])
    return LeafTrace(pts, sol.err, sol.max_step, sol.max_err, flag)


@dataclass
class ReturnMapResult:
    y_in: float
    y_out: float
    derivative: float
    degenerate: bool

    def to_dict(self):
        return {"y_in": self.y_in, "y_out": self.y_out, "derivative": self.derivative,
                "degenerate": self.degenerate}


def return_map(profile, y0, rtol=1e-11, atol=1e-14, tol=DEGENERACY_TOL):
    """First return of the foliation X = (1, f(y)) to the circle {x = 0}.

    The x-period is 1, so the return map is the time-1 flow of y' = f(y);
    its derivative comes from the variational equation v' = f'(y) v, v(0) = 1.
    """
    y0 = float(y0)
    if not -0.5 <= y0 < 0.5:
        raise ReturnMapError(f"y0 = {y0} outside the annulus band [-1/2, 1/2)")

    def rhs(t, s):
        return np.array([profile.f(s[0]), profile.df(s[0]) * s[1]], dtype=float)

    sol = dopri5(rhs, (0.0, 1.0), np.array([y0, 1.0]), rtol=rtol, atol=atol)
    y1, v1 = sol.y[-1]
    if not (np.isfinite(y1) and np.isfinite(v1)) or abs(y1 - y0) >= 1.0:
        raise ReturnMapError(f"orbit from y0 = {y0} escaped the annulus band")
    return ReturnMapResult(y0, float(y1), float(v1), bool(abs(v1 - 1.0) < tol))


def leaf_oracle(case, c, sign, t, theta=0.0):
    """Closed-form leaves of y' = -y (``linear``) and y' = -y^3 (``cubic``).

    linear: (theta + t, sign * c * exp(-t));
    cubic:  (theta + t, sign / sqrt(c + 2t)), defined while c + 2t > 0.
    """
    t = np.asarray(t, dtype=float)
    if case == "linear":
        y = sign * c * np.exp(-t)
    elif case == "cubic":
        arg = c + 2 * t
        if np.any(arg <= 0):
            raise DomainError("cubic leaf requires c + 2t > 0")
        y = sign / np.sqrt(arg)
    else:
        raise ValueError(f"unknown leaf case {case!r}")
    return np.array([theta + t, y])
