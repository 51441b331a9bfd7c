"""Adaptive Dormand-Prince 5(4) integrator with batch support.

The state may be a single vector ``(d,)`` or a batch ``(n, d)``; in the batch
case all members share one step size, and members flagged by ``stop`` are
frozen in place while the others continue.
"""

from dataclasses import dataclass, field

import numpy as np

# Dormand & Prince (1980) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class StepSizeError(RuntimeError):
    """Raised when the step size underflows; carries the last accepted state."""

    def __init__(self, msg, t, y):
        super().__init__(msg)
        self.t = t
        self.y = y


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    err: np.ndarray
    stopped: np.ndarray
    stop_time: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    max_step: float = 0.0
    max_err: float = 0.0
    steps: list = field(default_factory=list)


def dopri5(fun, t_span, y0, t_eval=None, rtol=1e-9, atol=1e-12, stop=None,
           max_steps=200_000, h0=None, record_steps=False, h_min=1e-14):
    """Integrate y' = fun(t, y) over ``t_span``.

    ``t_eval`` output times are hit exactly (steps are clipped). With
    ``record_steps`` every accepted step end is returned instead. ``stop(t, y)``
    returns a bool (or per-member bool mask); flagged members freeze.
    Returns a :class:`Solution` whose ``y`` has shape ``(len(t), *y0.shape)``.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    direction = 1.0 if t1 >= t0 else -1.0
    y = np.array(y0, dtype=float)
    batched = y.ndim == 2
    n = y.shape[0] if batched else 1

    if t_eval is None:
        t_eval = np.array([t1]) if not record_steps else np.array([], dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    if np.any(direction * np.diff(t_eval) < 0):
        raise ValueError("t_eval must be monotone in the integration direction")

    active = np.ones(n, dtype=bool)
    stop_time = np.full(n, np.nan)

    def mask_of(t, yy):
        if stop is None:
            return np.zeros(n, dtype=bool)
        m = np.asarray(stop(t, yy), dtype=bool)
        return np.broadcast_to(m, (n,)).copy()

    def rhs(t, yy):
        d = np.asarray(fun(t, yy), dtype=float)
        if batched:
            d = d * active[:, None]
        elif not active[0]:
            d = np.zeros_like(d)
        return d

    m0 = mask_of(t0, y)
    active &= ~m0
    stop_time[m0] = t0

    out_t, out_y, out_err = [], [], []
    k_eval = 0
    while k_eval < len(t_eval) and direction * (t_eval[k_eval] - t0) <= 0:
        out_t.append(t_eval[k_eval])
        out_y.append(y.copy())
        out_err.append(0.0)
        k_eval += 1
    if record_steps:
        out_t.append(t0)
        out_y.append(y.copy())
        out_err.append(0.0)

    t = t0
    f = rhs(t, y)
    span = abs(t1 - t0)
    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((f / scale) ** 2))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        h = min(h, span) if span > 0 else 0.0
    else:
        h = abs(h0)
    h = max(h, min(span, 1e-12))

    sol = Solution(t=None, y=None, err=None, stopped=None, stop_time=stop_time)
    n_steps = 0
    last_target = t_eval[-1] if (len(t_eval) and not record_steps) else t1
    end = t1 if record_steps else last_target
    while active.any() and direction * (end - t) > 0:
        if n_steps >= max_steps:
            raise StepSizeError("maximum number of steps exceeded", t, y)
        next_stop = end
        if not record_steps and k_eval < len(t_eval):
            next_stop = t_eval[k_eval]
        hit = False
        h_try = h
        if h >= abs(next_stop - t):
            h = abs(next_stop - t)
            hit = True
        hs = direction * h
        ks = [f]
        for i in range(1, 7):
            yi = y + hs * sum(a * kk for a, kk in zip(_A[i], ks))
            ks.append(rhs(t + _C[i] * hs, yi))
        y_new = y + hs * sum(b * kk for b, kk in zip(_B5, ks) if b != 0.0)
        err_vec = hs * sum(e * kk for e, kk in zip(_E, ks))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = (err_vec / scale) ** 2
        if batched:
            per = np.sqrt(ratio.mean(axis=1))
            err = per[active].max() if active.any() else 0.0
        else:
            err = float(np.sqrt(ratio.mean()))
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            t_new = next_stop if hit else t + hs
            n_steps += 1
            sol.max_step = max(sol.max_step, h)
            sol.max_err = max(sol.max_err, float(np.max(np.abs(err_vec))))
            t, y = t_new, y_new
            f = ks[6]
            newly = mask_of(t, y) & active
            if newly.any():
                stop_time[newly] = t
                active &= ~newly
                f = rhs(t, y)
            local = float(np.max(np.abs(err_vec)))
            if record_steps:
                out_t.append(t)
                out_y.append(y.copy())
                out_err.append(local)
            elif hit and k_eval < len(t_eval):
                out_t.append(t)
                out_y.append(y.copy())
                out_err.append(local)
                k_eval += 1
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = max(h_try, h * fac) if hit else h * fac
        else:
            sol.n_rejected += 1
            h = h * max(0.1, 0.9 * err ** -0.2) if np.isfinite(err) else h * 0.1
            if h < h_min * max(1.0, abs(t)):
                raise StepSizeError("step size underflow", t, y)
    # members that stopped early keep their frozen state at remaining outputs
    while not record_steps and k_eval < len(t_eval):
        out_t.append(t_eval[k_eval])
        out_y.append(y.copy())
        out_err.append(0.0)
        k_eval += 1

    sol.t = np.array(out_t)
    sol.y = np.array(out_y)
    sol.err = np.array(out_err)
    sol.stopped = ~np.isnan(stop_time)
    sol.n_steps = n_steps
    return sol


def dopri5_multi(fun, t_eval, y0, rtol=1e-9, atol=1e-12, max_steps=200_000, h_min=1e-14):
    """Integrate a batch ``y0`` of shape (n, d) forward from t = 0 with a
    separate step size and clock per member, reporting every member at the
    increasing times ``t_eval`` (> 0). ``fun(t, y)`` takes t of shape (n,).

    Returns an array of shape (len(t_eval), n, d).
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if np.any(np.diff(t_eval) <= 0) or t_eval[0] <= 0:
        raise ValueError("t_eval must be positive and strictly increasing")
    y = np.array(y0, dtype=float)
    n, d = y.shape
    out = np.empty((len(t_eval), n, d))
    t = np.zeros(n)
    k = np.zeros(n, dtype=int)
    f = np.asarray(fun(t, y), dtype=float)
    h = np.full(n, min(1e-4, t_eval[0]))
    live = np.ones(n, dtype=bool)
    steps = 0
    while live.any():
        steps += 1
        if steps > max_steps:
            raise StepSizeError("maximum number of steps exceeded", t, y)
        idx = np.flatnonzero(live)
        target = t_eval[k[idx]]
        hi = np.minimum(h[idx], target - t[idx])
        hit = hi >= target - t[idx]
        yi, ti = y[idx], t[idx]
        ks = [f[idx]]
        for i in range(1, 7):
            yy = yi + hi[:, None] * sum(a * kk for a, kk in zip(_A[i], ks))
            ks.append(np.asarray(fun(ti + _C[i] * hi, yy), dtype=float))
        y_new = yi + hi[:, None] * sum(b * kk for b, kk in zip(_B5, ks) if b != 0.0)
        err_vec = hi[:, None] * sum(e * kk for e, kk in zip(_E, ks))
        scale = atol + rtol * np.maximum(np.abs(yi), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2, axis=1))
        err = np.where(np.isfinite(err), err, np.inf)
        ok = err <= 1.0
        acc = idx[ok]
        y[acc] = y_new[ok]
        f[acc] = ks[6][ok]
        t[acc] = np.where(hit[ok], target[ok], ti[ok] + hi[ok])
        fac = np.where(err == 0, 5.0, np.clip(0.9 * np.where(err > 0, err, 1.0) ** -0.2, 0.2, 5.0))
        fac = np.where(ok, fac, np.maximum(0.1, np.minimum(fac, 1.0)))
        h_new = hi * fac
        h[idx] = np.where(ok & hit, np.maximum(h[idx], h_new), h_new)
        if np.any(h[idx[~ok]] < h_min * np.maximum(1.0, t[idx[~ok]])):
            raise StepSizeError("step size underflow", t, y)
        arrived = acc[hit[ok]]
        out[k[arrived], arrived] = y[arrived]
        k[arrived] += 1
        live[arrived[k[arrived] >= len(t_eval)]] = False
    return out
