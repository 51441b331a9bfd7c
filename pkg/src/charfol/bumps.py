"""Smooth cutoff catalogue built on the exp(-k/s) mollifier.

Every function here takes and returns numpy arrays (scalars are promoted),
is exactly 0 / exactly 1 outside its transition window, and comes with a
closed-form first derivative.
"""

import numpy as np

#: Steepness parameter of the default transition; with k = 0.6 the
#: maximal slope of :func:`smooth_step` on [0, 1] is about 1.491.
DEFAULT_K = 0.6
MAX_STEP_SLOPE = 1.4913


def psi(x, k=DEFAULT_K):
    """exp(-k/x) for x > 0 and 0 otherwise."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-k / x[pos])
    return out


def smooth_step(x, k=DEFAULT_K):
    """C^inf transition from 0 (x <= 0) to 1 (x >= 1), strictly increasing on (0, 1)."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 1.0, 0.0)
    mid = (x > 0) & (x < 1)
    xm = x[mid]
    with np.errstate(over="ignore"):
        p = np.exp(-k / xm)
        q = np.exp(-k / (1.0 - xm))
    out[mid] = p / (p + q)
    return out


def smooth_step_deriv(x, k=DEFAULT_K):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mid = (x > 0) & (x < 1)
    xm = x[mid]
    with np.errstate(over="ignore", under="ignore"):
        p = np.exp(-k / xm)
        q = np.exp(-k / (1.0 - xm))
    out[mid] = p * q * (k / xm**2 + k / (1.0 - xm) ** 2) / (p + q) ** 2
    return out


def ramp(x, lo, hi, k=DEFAULT_K):
    """Transition 0 -> 1 across [lo, hi]; returns (value, d/dx)."""
    w = hi - lo
    s = (np.asarray(x, dtype=float) - lo) / w
    return smooth_step(s, k), smooth_step_deriv(s, k) / w


def hammer_ramp(t, y1, y2, delta, k=DEFAULT_K):
    """Plateau profile f_delta: supported in [y1-delta, y2+delta], rising on
    (y1-delta, y1+delta), flat in between, falling on (y2-delta, y2+delta).

    Returns (value, derivative).
    """
    up, dup = ramp(t, y1 - delta, y1 + delta, k)
    down, ddown = ramp(-np.asarray(t, dtype=float), -(y2 + delta), -(y2 - delta), k)
    return up * down, dup * down - up * ddown


def flat_top_bump(t, delta, k=DEFAULT_K):
    """g_delta: supported in [-delta, delta], positive inside, constant 1 on
    |t| <= delta/2. Returns (value, derivative)."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    s = (delta - a) / (0.5 * delta)
    val = smooth_step(s, k)
    der = -np.sign(t) * smooth_step_deriv(s, k) / (0.5 * delta)
    return val, der


def window(t, lo, hi, k=DEFAULT_K):
    """Bump positive exactly on (lo, hi), zero elsewhere, max 1 at the centre.
    Returns (value, derivative)."""
    h = 0.5 * (hi - lo)
    a, da = ramp(t, lo, lo + h, k)
    b, db = ramp(-np.asarray(t, dtype=float), -hi, -hi + h, k)
    return a * b, da * b - a * db
