"""Compiled thinning loop for :func:`hawkes_npole.process.simulate`."""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def eval_pair(terms, start, stop, x):
    s = 0.0
    for r in range(start, stop):
        v = terms[r, 0] * math.exp(-terms[r, 3] * x - terms[r, 4] * (x - terms[r, 5]) ** 2)
        if terms[r, 1] != 0.0:
            v *= x ** terms[r, 1]
        if terms[r, 2] != 0.0:
            v *= math.cos(terms[r, 2] * x)
        s += v
    return s


@njit(cache=True, nogil=True)
def _advance(times, n, lo, t, horizon):
    while lo < n and t - times[lo] >= horizon:
        lo += 1
    return lo


@njit(cache=True, nogil=True)
def thin(mu, terms, offs, cut, env, h, T, t, times, dims, n, lo, u, guard):
    """Run thinning until the horizon, the uniforms, or the buffer run out.

    Status codes: 0 done, 1 need uniforms, 2 bound violated, 3 buffer full,
    4 explosion guard.
    """
    p = mu.shape[0]
    n_env = env.shape[2]
    horizon = 0.0
    for i in range(p):
        for j in range(p):
            if cut[i, j] > horizon:
                horizon = cut[i, j]
    lam = np.empty(p)
    ui = 0
    nu = u.shape[0]
    while True:
        if ui + 2 > nu:
            return t, n, lo, ui, 1
        lo = _advance(times, n, lo, t, horizon)
        bound = 0.0
        for i in range(p):
            bound += mu[i]
        for e in range(lo, n):
            idx = int((t - times[e]) / h)
            if idx < n_env:
                j = dims[e]
                for i in range(p):
                    bound += env[i, j, idx]
        bound *= 1.0 + 1e-12
        w = -math.log(1.0 - u[ui]) / bound
        ui += 1
        tc = t + w
        if tc > T:
            return tc, n, lo, ui, 0
        lo = _advance(times, n, lo, tc, horizon)
        total = 0.0
        for i in range(p):
            lam[i] = mu[i]
        for e in range(lo, n):
            lag = tc - times[e]
            j = dims[e]
            for i in range(p):
                if lag < cut[i, j]:
                    lam[i] += eval_pair(terms, offs[i, j], offs[i, j + 1], lag)
        for i in range(p):
            if lam[i] < 0.0:
                lam[i] = 0.0
            total += lam[i]
        if total > bound:
            return tc, n, lo, ui, 2
        d = u[ui] * bound
        ui += 1
        t = tc
        if d <= total:
            acc = 0.0
            k = p - 1
            for i in range(p):
                acc += lam[i]
                if d <= acc:
                    k = i
                    break
            times[n] = tc
            dims[n] = k
            n += 1
            if n >= guard:
                return t, n, lo, ui, 4
            if n == times.shape[0]:
                return t, n, lo, ui, 3
