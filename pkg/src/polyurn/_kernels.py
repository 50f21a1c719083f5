"""Compiled inner loops. f is passed as (code, params, breaks, coefs), see
:meth:`polyurn.reinforce.ReinforcementSpec.kernel_params`."""
import math

import numpy as np
from numba import njit

_JIT = dict(nogil=True, cache=True)


@njit(**_JIT)
def feval(code, params, breaks, coefs, x):
    if code == 0:
        return x ** params[0]
    if code == 1:
        return x ** (2.0 + params[0]) * math.exp(1.0 - x)
    m = breaks.shape[0] - 1
    i = np.searchsorted(breaks, x, side="right") - 1
    if i < 0:
        i = 0
    elif i > m - 1:
        i = m - 1
    dx = x - breaks[i]
    return ((coefs[0, i] * dx + coefs[1, i]) * dx + coefs[2, i]) * dx + coefs[3, i]


@njit(**_JIT)
def probabilities(code, params, breaks, coefs, counts, total, out):
    """Selection probabilities into ``out``; returns the normaliser."""
    d = counts.shape[0]
    s = 0.0
    for i in range(d):
        v = feval(code, params, breaks, coefs, counts[i] / total)
        out[i] = v
        s += v
    if s > 0.0:
        for i in range(d):
            out[i] /= s
    return s


@njit(**_JIT)
def multinomial(rng, n, probs, out):
    """Multinomial(n, probs) by conditional binomials, colour by colour."""
    d = probs.shape[0]
    remaining = n
    mass = 1.0
    for i in range(d):
        out[i] = 0
    for i in range(d - 1):
        if remaining == 0:
            return
        p = probs[i]
        if p <= 0.0:
            continue
        q = p / mass if mass > 0.0 else 1.0
        if q >= 1.0:
            out[i] = remaining
            return
        k = rng.binomial(remaining, q)
        out[i] = k
        remaining -= k
        mass -= p
    out[d - 1] = remaining


@njit(**_JIT)
def step(rng, code, params, breaks, coefs, counts, total, sigma, probs, drawn):
    """One urn step in place. Returns the new total, or -1.0 if every f value is zero."""
    s = probabilities(code, params, breaks, coefs, counts, total, probs)
    if not s > 0.0:
        return -1.0
    multinomial(rng, sigma, probs, drawn)
    for i in range(counts.shape[0]):
        counts[i] += drawn[i]
    return total + sigma


@njit(**_JIT)
def run(rng, code, params, breaks, coefs, counts, total, sigmas, snap_steps,
        mart_start, history):
    """Advance the urn len(sigmas) steps in place.

    Returns (status, total, snapshots, snap_taus, last_hit, martingale,
    hist_drawn, hist_probs). status is -1 on a zero normaliser, else the number
    of completed steps. The history arrays are empty unless ``history``.
    """
    d = counts.shape[0]
    n_steps = sigmas.shape[0]
    probs = np.empty(d)
    drawn = np.zeros(d, dtype=np.int64)
    snaps = np.empty((snap_steps.shape[0], d))
    snap_taus = np.empty(snap_steps.shape[0])
    last_hit = np.zeros(d, dtype=np.int64)
    mart = np.zeros(d)
    h_n = n_steps if history else 0
    h_drawn = np.zeros((h_n, d), dtype=np.int64)
    h_probs = np.zeros((h_n, d))
    k = 0
    if k < snap_steps.shape[0] and snap_steps[k] == 0:
        for i in range(d):
            snaps[k, i] = counts[i] / total
        snap_taus[k] = total
        k += 1
    for n in range(n_steps):
        sig = sigmas[n]
        new_total = step(rng, code, params, breaks, coefs, counts, total, sig, probs, drawn)
        if new_total < 0.0:
            return -1, total, snaps, snap_taus, last_hit, mart, h_drawn, h_probs
        total = new_total
        j = n + 1
        for i in range(d):
            if drawn[i] > 0:
                last_hit[i] = j
        if j > mart_start:
            for i in range(d):
                mart[i] += (drawn[i] - sig * probs[i]) / total
        if history:
            for i in range(d):
                h_drawn[n, i] = drawn[i]
                h_probs[n, i] = probs[i]
        if k < snap_steps.shape[0] and snap_steps[k] == j:
            for i in range(d):
                snaps[k, i] = counts[i] / total
            snap_taus[k] = total
            k += 1
    return n_steps, total, snaps, snap_taus, last_hit, mart, h_drawn, h_probs


@njit(**_JIT)
def mean_field(code, params, breaks, coefs, y, out):
    d = y.shape[0]
    s = 0.0
    for i in range(d):
        v = feval(code, params, breaks, coefs, y[i])
        out[i] = v
        s += v
    if not s > 0.0:
        return False
    for i in range(d):
        out[i] = out[i] / s - y[i]
    return True


@njit(**_JIT)
def rk4_flow(code, params, breaks, coefs, y0, dt, n_max, stop_tol, drift_tol):
    """Classical RK4 for y' = h(y) with clamp-and-renormalise after each step.

    Returns (status, n_done, ys). status: 0 reached n_max, 1 stopped on
    ||h||_inf < stop_tol, 2 sum drift above drift_tol, 3 zero normaliser.
    """
    d = y0.shape[0]
    ys = np.empty((n_max + 1, d))
    ys[0] = y0
    y = y0.copy()
    k1 = np.empty(d)
    k2 = np.empty(d)
    k3 = np.empty(d)
    k4 = np.empty(d)
    tmp = np.empty(d)
    for n in range(n_max):
        if not mean_field(code, params, breaks, coefs, y, k1):
            return 3, n, ys
        if np.max(np.abs(k1)) < stop_tol:
            return 1, n, ys
        for i in range(d):
            tmp[i] = min(max(y[i] + 0.5 * dt * k1[i], 0.0), 1.0)
        if not mean_field(code, params, breaks, coefs, tmp, k2):
            return 3, n, ys
        for i in range(d):
            tmp[i] = min(max(y[i] + 0.5 * dt * k2[i], 0.0), 1.0)
        if not mean_field(code, params, breaks, coefs, tmp, k3):
            return 3, n, ys
        for i in range(d):
            tmp[i] = min(max(y[i] + dt * k3[i], 0.0), 1.0)
        if not mean_field(code, params, breaks, coefs, tmp, k4):
            return 3, n, ys
        s = 0.0
        for i in range(d):
            y[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            s += y[i]
        if abs(s - 1.0) > drift_tol:
            return 2, n, ys
        s = 0.0
        for i in range(d):
            if y[i] < 0.0:
                y[i] = 0.0
            s += y[i]
        for i in range(d):
            y[i] /= s
        ys[n + 1] = y
    if mean_field(code, params, breaks, coefs, y, k1) and np.max(np.abs(k1)) < stop_tol:
        return 1, n_max, ys
    return 0, n_max, ys
