"""Subgradient kernel for the largest-inscribed-ball objective.

The objective is f(x) = max_i (||x - c_i||_{k_i} - r_i); its negated minimum
is the inscribed radius.  A plain 1/k step schedule stalls well above 1e-7,
so the kernel runs stages of constant step size, halving the step between
stages and restarting each stage from the incumbent.  The objective is sharp
(it grows linearly off the optimum), which is what makes the geometric
schedule converge.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# norm codes: 0 = l1, 1 = l2, 2 = linf (mirrors geometry._NORM_CODE)


@njit(cache=True)
def _margin(center, radius, kind, x):
    d = x.shape[0]
    if kind == 0:
        s = 0.0
        for j in range(d):
            s += abs(x[j] - center[j])
        return s - radius
    if kind == 1:
        s = 0.0
        for j in range(d):
            t = x[j] - center[j]
            s += t * t
        return np.sqrt(s) - radius
    m = 0.0
    for j in range(d):
        t = abs(x[j] - center[j])
        if t > m:
            m = t
    return m - radius


@njit(cache=True)
def _eval(centers, radii, kinds, x):
    best = -np.inf
    arg = 0
    for i in range(centers.shape[0]):
        v = _margin(centers[i], radii[i], kinds[i], x)
        if v > best:
            best = v
            arg = i
    return best, arg


@njit(cache=True)
def _subgradient(center, kind, x, g):
    """Fill g with a subgradient of ||x - c|| at x; True when it is zero."""
    d = x.shape[0]
    if kind == 1:
        s = 0.0
        for j in range(d):
            t = x[j] - center[j]
            g[j] = t
            s += t * t
        if s == 0.0:
            return True
        s = np.sqrt(s)
        for j in range(d):
            g[j] /= s
        return False
    if kind == 0:
        zero = True
        for j in range(d):
            t = x[j] - center[j]
            if t > 0.0:
                g[j] = 1.0
                zero = False
            elif t < 0.0:
                g[j] = -1.0
                zero = False
            else:
                g[j] = 0.0
        return zero
    m = 0.0
    arg = 0
    for j in range(d):
        g[j] = 0.0
        t = abs(x[j] - center[j])
        if t > m:
            m = t
            arg = j
    if m == 0.0:
        return True
    g[arg] = 1.0 if x[arg] > center[arg] else -1.0
    return False


@njit(cache=True)
def subgrad_min_max_margin(centers, radii, kinds, x0, tol, max_iter):
    """Minimize the max margin; returns (f_best, x_best, iters, converged)."""
    d = x0.shape[0]
    x = x0.copy()
    g = np.zeros(d)
    f_best, i = _eval(centers, radii, kinds, x)
    x_best = x.copy()
    h = 0.5
    h_floor = tol * 0.05
    iters = 0
    while h > h_floor:
        stall = 0
        while stall < 12:
            if iters >= max_iter:
                return f_best, x_best, iters, False
            iters += 1
            if _subgradient(centers[i], kinds[i], x, g):
                # active term is exactly at its center: global minimum
                return f_best, x_best, iters, True
            for j in range(d):
                x[j] -= h * g[j]
            f, i = _eval(centers, radii, kinds, x)
            if f < f_best - h * 1e-3:
                stall = 0
            else:
                stall += 1
            if f < f_best:
                f_best = f
                for j in range(d):
                    x_best[j] = x[j]
        h *= 0.5
        for j in range(d):
            x[j] = x_best[j]
        f, i = _eval(centers, radii, kinds, x)
    return f_best, x_best, iters, True
