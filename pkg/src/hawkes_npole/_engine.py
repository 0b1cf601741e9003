"""Compiled per-row online update loop on a fixed lag lattice.

Each triggering estimate ``f_ij`` is a coefficient vector on the lattice
``0, g, 2g, ..., z``.  Both the coefficients and the lattice values
``G @ coef`` are kept so that evaluating ``f`` at a snapped lag is a lookup.
"""

import math

import numpy as np
from numba import njit

MODE_GRID_CLIP = 0
MODE_SQUARE = 1

STATUS_OK = 0
STATUS_DOMAIN = 1


@njit(cache=True, nogil=True)
def _gp(Gt, Gs, u, v):
    # entry of the product Gramian Gt (x) Gs on the flattened lattice
    ds = Gs.shape[0]
    return Gt[u // ds, v // ds] * Gs[u % ds, v % ds]


@njit(cache=True, nogil=True)
def _add_section(Gt, Gs, vals, c, u):
    # vals += c * K(u, .) on the product lattice
    ds = Gs.shape[0]
    a = u // ds
    b = u % ds
    for e in range(Gt.shape[0]):
        ct = c * Gt[e, a]
        base = e * ds
        for f in range(ds):
            vals[base + f] += ct * Gs[f, b]


@njit(cache=True, nogil=True)
def lcp_clip(G, clip, coef, vals, tol, max_iter):
    """Project ``f`` (coef, vals on the lattice) onto ``{f(clip) >= 0}`` in place.

    The dual ``min_{l >= 0} 1/2 l' G_cc l + l' f(clip)`` is a nonnegative
    least-squares problem in Gram form, solved with the Lawson-Hanson active
    set.  The primal solution adds ``l_c K(t_c, .)``.  Returns
    ``(outer iterations, final KKT residual)``, the residual being
    ``max_c |min(l_c, f'(t_c))|``.
    """
    return lcp_clip_product(G, np.ones((1, 1)), clip, coef, vals, tol, max_iter)


@njit(cache=True, nogil=True)
def lcp_clip_product(Gt, Gs, clip, coef, vals, tol, max_iter):
    """:func:`lcp_clip` on a product lattice with Gramian ``Gt (x) Gs``."""
    nc = clip.shape[0]
    lam = np.zeros(nc)
    passive = np.zeros(nc, dtype=np.bool_)
    y = np.empty(nc)
    for c in range(nc):
        y[c] = vals[clip[c]]
    it = 0
    while it < max_iter:
        best = -1
        worst = -tol
        for c in range(nc):
            if not passive[c] and y[c] < worst:
                worst = y[c]
                best = c
        if best < 0:
            break
        passive[best] = True
        it += 1
        while True:
            idx = np.nonzero(passive)[0]
            m = idx.shape[0]
            Q = np.empty((m, m))
            rhs = np.empty(m)
            for r in range(m):
                rhs[r] = -(y[idx[r]] - _dot_row(Gt, Gs, clip, idx, r, lam))
                for s in range(m):
                    Q[r, s] = _gp(Gt, Gs, clip[idx[r]], clip[idx[s]])
            sol = np.linalg.solve(Q, rhs)
            ok = True
            for r in range(m):
                if sol[r] <= 0.0:
                    ok = False
            if ok:
                _apply(Gt, Gs, clip, idx, lam, sol, coef, vals, y)
                break
            alpha = 1.0
            for r in range(m):
                if sol[r] <= 0.0:
                    cur = lam[idx[r]]
                    a = cur / (cur - sol[r]) if cur - sol[r] > 0.0 else 0.0
                    if a < alpha:
                        alpha = a
            step = np.empty(m)
            for r in range(m):
                step[r] = lam[idx[r]] + alpha * (sol[r] - lam[idx[r]])
            _apply(Gt, Gs, clip, idx, lam, step, coef, vals, y)
            dropped = False
            for r in range(m):
                if lam[idx[r]] <= 1e-15 * (1.0 + abs(sol[r])):
                    passive[idx[r]] = False
                    dropped = True
            if not dropped or not passive.any():
                # degenerate pivot; leave the active set as it is
                break
    # natural residual of the complementarity problem: |min(l, y)|
    res = 0.0
    for c in range(nc):
        r = abs(min(lam[c], y[c]))
        if r > res:
            res = r
    return it, res


@njit(cache=True, nogil=True)
def _dot_row(Gt, Gs, clip, idx, r, lam):
    # contribution of the current multipliers to f at clip point idx[r]
    s = 0.0
    for t in range(idx.shape[0]):
        s += _gp(Gt, Gs, clip[idx[r]], clip[idx[t]]) * lam[idx[t]]
    return s


@njit(cache=True, nogil=True)
def _apply(Gt, Gs, clip, idx, lam, new, coef, vals, y):
    for r in range(idx.shape[0]):
        c = idx[r]
        d = new[r] - lam[c]
        if d != 0.0:
            lam[c] = new[r]
            q = clip[c]
            coef[q] += d
            _add_section(Gt, Gs, vals, d, q)
            for e in range(clip.shape[0]):
                y[e] += d * _gp(Gt, Gs, clip[e], q)


@njit(cache=True, nogil=True)
def _drop_to_budget(G, coef, vals, budget):
    nnz = 0
    for d in range(coef.shape[0]):
        if coef[d] != 0.0:
            nnz += 1
    while nnz > budget:
        best = -1
        score = np.inf
        for d in range(coef.shape[0]):
            if coef[d] != 0.0:
                s = abs(coef[d]) * G[d, d]
                if s < score:
                    score = s
                    best = d
        a = coef[best]
        coef[best] = 0.0
        for d in range(vals.shape[0]):
            vals[d] -= a * G[d, best]
        nnz -= 1


@njit(cache=True, nogil=True)
def fit_row(
    i,
    epochs,
    xrow,
    ev_times,
    ev_dims,
    p,
    G,
    clip,
    g_step,
    z,
    mu_min,
    mu0,
    omega,
    zeta_row,
    step_a,
    step_b,
    mode,
    budget,
    stride,
    coef0,
    kkt_tol,
    max_iter,
    track_norms,
):
    """Run the online updates of row ``i`` over every epoch ``k = 1..M``.

    Returns snapshots (taken at ``k = 0``, every ``stride`` epochs and at
    ``M``), the per-epoch data loss ``dt lam - x log lam`` and regulariser
    ``omega/2 mu^2 + sum zeta/2 ||.||^2`` at the pre-update iterate, optional
    per-epoch norms, and diagnostics.
    """
    D = G.shape[0]
    M = epochs.shape[0] - 1
    n_ev = ev_times.shape[0]
    coef = coef0.copy()
    vals = np.zeros((p, D))
    for j in range(p):
        for d in range(D):
            if coef[j, d] != 0.0:
                for e in range(D):
                    vals[j, e] += coef[j, d] * G[e, d]
    norm2 = np.zeros(p)
    for j in range(p):
        s = 0.0
        for d in range(D):
            s += coef[j, d] * vals[j, d]
        norm2[j] = s
    mu = mu0

    n_snap = M // stride + 2
    snap_k = np.zeros(n_snap, dtype=np.int64)
    snap_mu = np.zeros(n_snap)
    snap_coef = np.zeros((n_snap, p, D))
    snap_coef[0] = coef
    snap_mu[0] = mu
    ns = 1
    loss = np.zeros(M)
    reg = np.zeros(M)
    lam_trace = np.zeros(M)
    norms = np.zeros((M if track_norms else 0, p))
    max_norm2 = norm2.copy()
    proj_calls = 0
    proj_fail = 0
    worst_kkt = 0.0

    lags = np.zeros(n_ev, dtype=np.int64)
    touched = np.zeros(p, dtype=np.bool_)
    grad_w = np.zeros((p, D))
    lo = 0
    hi = 0
    status = STATUS_OK
    for k in range(1, M + 1):
        t = epochs[k]
        dt = t - epochs[k - 1]
        while hi < n_ev and ev_times[hi] < t:
            hi += 1
        while lo < hi and t - ev_times[lo] >= z:
            lo += 1
        lam = mu
        for e in range(lo, hi):
            q = int(math.floor((t - ev_times[e]) / g_step + 0.5))
            if q > D - 1:
                q = D - 1
            lags[e] = q
            j = ev_dims[e]
            if mode == MODE_SQUARE:
                lam += vals[j, q] * vals[j, q]
            else:
                lam += vals[j, q]
        if lam < mu_min * (1.0 - 1e-9) - 1e-12:
            status = STATUS_DOMAIN
            break
        x = xrow[k]
        rho = dt - x / lam
        r = 0.5 * omega * mu * mu
        for j in range(p):
            r += 0.5 * zeta_row[j] * norm2[j]
        loss[k - 1] = dt * lam - x * math.log(lam)
        reg[k - 1] = r
        lam_trace[k - 1] = lam

        eta = 1.0 / (step_a * k + step_b)
        mu = mu - eta * (rho + omega * mu)
        if mu < mu_min:
            mu = mu_min

        for j in range(p):
            touched[j] = False
        for e in range(lo, hi):
            j = ev_dims[e]
            q = lags[e]
            if mode == MODE_SQUARE:
                grad_w[j, q] += rho * (2.0 * vals[j, q])
            else:
                grad_w[j, q] += rho
            touched[j] = True
        for j in range(p):
            shrink = 1.0 - eta * zeta_row[j]
            if shrink != 1.0:
                for d in range(D):
                    coef[j, d] *= shrink
                    vals[j, d] *= shrink
            if touched[j]:
                for q in range(D):
                    w = grad_w[j, q]
                    if w != 0.0:
                        c = -eta * w
                        coef[j, q] += c
                        for d in range(D):
                            vals[j, d] += c * G[d, q]
                        grad_w[j, q] = 0.0
                if mode == MODE_GRID_CLIP:
                    neg = False
                    for c in range(clip.shape[0]):
                        if vals[j, clip[c]] < 0.0:
                            neg = True
                            break
                    if neg:
                        it, res = lcp_clip(G, clip, coef[j], vals[j], kkt_tol, max_iter)
                        proj_calls += 1
                        if res >= kkt_tol:
                            proj_fail += 1
                        if res > worst_kkt:
                            worst_kkt = res
                if budget > 0:
                    _drop_to_budget(G, coef[j], vals[j], budget)
            if touched[j] or shrink != 1.0:
                s = 0.0
                for d in range(D):
                    s += coef[j, d] * vals[j, d]
                norm2[j] = s if s > 0.0 else 0.0
            if norm2[j] > max_norm2[j]:
                max_norm2[j] = norm2[j]
        if track_norms:
            for j in range(p):
                norms[k - 1, j] = math.sqrt(norm2[j])
        if k % stride == 0 or k == M:
            snap_k[ns] = k
            snap_mu[ns] = mu
            snap_coef[ns] = coef
            ns += 1
    return (
        status,
        snap_k[:ns],
        snap_mu[:ns],
        snap_coef[:ns],
        loss,
        reg,
        lam_trace,
        norms,
        np.sqrt(max_norm2),
        proj_calls,
        proj_fail,
        worst_kkt,
    )


@njit(cache=True, nogil=True)
def _drop_to_budget_product(Gt, Gs, coef, vals, budget):
    D = coef.shape[0]
    nnz = 0
    for d in range(D):
        if coef[d] != 0.0:
            nnz += 1
    while nnz > budget:
        best = -1
        score = np.inf
        for d in range(D):
            if coef[d] != 0.0:
                s = abs(coef[d]) * _gp(Gt, Gs, d, d)
                if s < score:
                    score = s
                    best = d
        a = coef[best]
        coef[best] = 0.0
        for d in range(vals.shape[0]):
            vals[d] -= a * _gp(Gt, Gs, d, best)
        nnz -= 1


@njit(cache=True, nogil=True)
def fit_lattice(
    epochs,
    X,
    weight,
    ev_times,
    ev_dims,
    ev_keys,
    nbr_ptr,
    nbr_cell,
    nbr_s,
    p,
    Gt,
    Gs,
    clip,
    g_step,
    z,
    mu_min,
    mu0,
    omega,
    zeta_row,
    step_a,
    step_b,
    mode,
    budget,
    stride,
    coef0,
    kkt_tol,
    max_iter,
    track_norms,
):
    """Online updates for one intensity observed at ``C`` sites.

    Functions live on the product lattice ``(lag, s)`` flattened as
    ``lag * Ds + s``.  An arrival with key ``key`` reaches the sites
    ``nbr_cell[nbr_ptr[key]:nbr_ptr[key + 1]]`` at second coordinate
    ``nbr_s[...]``.  Site ``c`` has intensity
    ``mu + sum f_j(lag, s)`` and feedback ``rho_c = dt w_c - X[k, c] / lam_c``;
    ``mu`` and every ``f_j`` are shared across sites.  With one site and
    ``Gs = [[1]]`` the arithmetic is that of :func:`fit_row`.
    """
    Dt = Gt.shape[0]
    Ds = Gs.shape[0]
    D = Dt * Ds
    C = X.shape[1]
    M = epochs.shape[0] - 1
    n_ev = ev_times.shape[0]
    coef = coef0.copy()
    vals = np.zeros((p, D))
    for j in range(p):
        for d in range(D):
            if coef[j, d] != 0.0:
                for e in range(D):
                    vals[j, e] += coef[j, d] * _gp(Gt, Gs, e, d)
    norm2 = np.zeros(p)
    for j in range(p):
        s = 0.0
        for d in range(D):
            s += coef[j, d] * vals[j, d]
        norm2[j] = s
    mu = mu0

    n_snap = M // stride + 2
    snap_k = np.zeros(n_snap, dtype=np.int64)
    snap_mu = np.zeros(n_snap)
    snap_coef = np.zeros((n_snap, p, D))
    snap_coef[0] = coef
    snap_mu[0] = mu
    ns = 1
    loss = np.zeros(M)
    reg = np.zeros(M)
    norms = np.zeros((M if track_norms else 0, p))
    max_norm2 = norm2.copy()
    proj_calls = 0
    proj_fail = 0
    worst_kkt = 0.0

    lags = np.zeros(n_ev, dtype=np.int64)
    lam = np.zeros(C)
    rho = np.zeros(C)
    touched = np.zeros(p, dtype=np.bool_)
    grad_w = np.zeros((p, D))
    lo = 0
    hi = 0
    status = STATUS_OK
    for k in range(1, M + 1):
        t = epochs[k]
        dt = t - epochs[k - 1]
        while hi < n_ev and ev_times[hi] < t:
            hi += 1
        while lo < hi and t - ev_times[lo] >= z:
            lo += 1
        for c in range(C):
            lam[c] = mu
        for e in range(lo, hi):
            q = int(math.floor((t - ev_times[e]) / g_step + 0.5))
            if q > Dt - 1:
                q = Dt - 1
            lags[e] = q
            j = ev_dims[e]
            key = ev_keys[e]
            for r in range(nbr_ptr[key], nbr_ptr[key + 1]):
                u = q * Ds + nbr_s[r]
                if mode == MODE_SQUARE:
                    lam[nbr_cell[r]] += vals[j, u] * vals[j, u]
                else:
                    lam[nbr_cell[r]] += vals[j, u]
        bad = False
        for c in range(C):
            if lam[c] < mu_min * (1.0 - 1e-9) - 1e-12:
                bad = True
        if bad:
            status = STATUS_DOMAIN
            break
        lk = 0.0
        rsum = 0.0
        for c in range(C):
            x = X[k, c]
            dtw = dt * weight[c]
            rho[c] = dtw - x / lam[c]
            lk += dtw * lam[c] - x * math.log(lam[c])
            rsum += rho[c]
        r_ = 0.5 * omega * mu * mu
        for j in range(p):
            r_ += 0.5 * zeta_row[j] * norm2[j]
        loss[k - 1] = lk
        reg[k - 1] = r_

        eta = 1.0 / (step_a * k + step_b)
        mu = mu - eta * (rsum + omega * mu)
        if mu < mu_min:
            mu = mu_min

        for j in range(p):
            touched[j] = False
        for e in range(lo, hi):
            j = ev_dims[e]
            key = ev_keys[e]
            for r in range(nbr_ptr[key], nbr_ptr[key + 1]):
                u = lags[e] * Ds + nbr_s[r]
                if mode == MODE_SQUARE:
                    grad_w[j, u] += rho[nbr_cell[r]] * (2.0 * vals[j, u])
                else:
                    grad_w[j, u] += rho[nbr_cell[r]]
                touched[j] = True
        for j in range(p):
            shrink = 1.0 - eta * zeta_row[j]
            if shrink != 1.0:
                for d in range(D):
                    coef[j, d] *= shrink
                    vals[j, d] *= shrink
            if touched[j]:
                for u in range(D):
                    w = grad_w[j, u]
                    if w != 0.0:
                        c = -eta * w
                        coef[j, u] += c
                        _add_section(Gt, Gs, vals[j], c, u)
                        grad_w[j, u] = 0.0
                if mode == MODE_GRID_CLIP:
                    neg = False
                    for c in range(clip.shape[0]):
                        if vals[j, clip[c]] < 0.0:
                            neg = True
                            break
                    if neg:
                        it, res = lcp_clip_product(Gt, Gs, clip, coef[j], vals[j], kkt_tol, max_iter)
                        proj_calls += 1
                        if res >= kkt_tol:
                            proj_fail += 1
                        if res > worst_kkt:
                            worst_kkt = res
                if budget > 0:
                    _drop_to_budget_product(Gt, Gs, coef[j], vals[j], budget)
            if touched[j] or shrink != 1.0:
                s = 0.0
                for d in range(D):
                    s += coef[j, d] * vals[j, d]
                norm2[j] = s if s > 0.0 else 0.0
            if norm2[j] > max_norm2[j]:
                max_norm2[j] = norm2[j]
        if track_norms:
            for j in range(p):
                norms[k - 1, j] = math.sqrt(norm2[j])
        if k % stride == 0 or k == M:
            snap_k[ns] = k
            snap_mu[ns] = mu
            snap_coef[ns] = coef
            ns += 1
    return (
        status,
        snap_k[:ns],
        snap_mu[:ns],
        snap_coef[:ns],
        loss,
        reg,
        norms,
        np.sqrt(max_norm2),
        proj_calls,
        proj_fail,
        worst_kkt,
    )
