"""Online gradient descent for exponential triggering functions with known decays."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .discretize import DomainError, UpdateGrid, build_grid
from .npole import HyperParams
from .process import EventStream, HawkesModel, exp_decay


@dataclass
class ExpModel:
    """``f_ij(t) = A[i, j] exp(-B[i, j] t)`` with base rates ``mu``."""

    A: np.ndarray
    B: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, float)
        self.B = np.asarray(self.B, float)
        self.mu = np.asarray(self.mu, float)
        if np.any(self.B <= 0):
            raise ValueError("decay rates must be positive")

    def to_model(self, window: float = math.inf) -> HawkesModel:
        p = len(self.mu)
        F = [[exp_decay(self.A[i, j], self.B[i, j]) for j in range(p)] for i in range(p)]
        return HawkesModel(self.mu.copy(), F, window=window, check_stability=False)


@dataclass
class ExpFitResult:
    grid: UpdateGrid
    B: np.ndarray
    snap_k: np.ndarray
    snap_mu: np.ndarray
    snap_A: np.ndarray
    loss: np.ndarray
    reg: np.ndarray

    def model(self, s: int = -1) -> ExpModel:
        return ExpModel(self.snap_A[s], self.B, self.snap_mu[s])

    def risk(self) -> np.ndarray:
        return self.loss + self.reg


@njit(cache=True, nogil=True)
def _ogd_row(epochs, xrow, ev_times, ev_dims, beta, z, mu_min, mu0, omega, zeta, step_a, step_b, stride):
    p = beta.shape[0]
    M = epochs.shape[0] - 1
    n_ev = ev_times.shape[0]
    alpha = np.zeros(p)
    mu = mu0
    n_snap = M // stride + 2
    snap_k = np.zeros(n_snap, dtype=np.int64)
    snap_mu = np.zeros(n_snap)
    snap_a = np.zeros((n_snap, p))
    snap_mu[0] = mu
    ns = 1
    loss = np.zeros(M)
    reg = np.zeros(M)
    feat = np.zeros(p)
    lo = 0
    hi = 0
    for k in range(1, M + 1):
        t = epochs[k]
        dt = t - epochs[k - 1]
        while hi < n_ev and ev_times[hi] < t:
            hi += 1
        while lo < hi and t - ev_times[lo] >= z:
            lo += 1
        for j in range(p):
            feat[j] = 0.0
        for e in range(lo, hi):
            j = ev_dims[e]
            feat[j] += math.exp(-beta[j] * (t - ev_times[e]))
        lam = mu
        for j in range(p):
            lam += alpha[j] * feat[j]
        if lam < mu_min * (1.0 - 1e-9) - 1e-12:
            return 1, snap_k[:ns], snap_mu[:ns], snap_a[:ns], loss, reg
        x = xrow[k]
        rho = dt - x / lam
        r = 0.5 * omega * mu * mu
        for j in range(p):
            r += 0.5 * zeta[j] * alpha[j] * alpha[j]
        loss[k - 1] = dt * lam - x * math.log(lam)
        reg[k - 1] = r
        eta = 1.0 / (step_a * k + step_b)
        mu = mu - eta * (rho + omega * mu)
        if mu < mu_min:
            mu = mu_min
        for j in range(p):
            a = alpha[j] - eta * (rho * feat[j] + zeta[j] * alpha[j])
            alpha[j] = a if a > 0.0 else 0.0
        if k % stride == 0 or k == M:
            snap_k[ns] = k
            snap_mu[ns] = mu
            snap_a[ns] = alpha
            ns += 1
    return 0, snap_k[:ns], snap_mu[:ns], snap_a[:ns], loss, reg


def alpha_gradient(alpha, beta, lags_by_dim, dt: float, x: int, mu: float, zeta) -> np.ndarray:
    """``rho sum_n exp(-beta_j lag_n) + zeta alpha_j`` for one row."""
    alpha = np.asarray(alpha, float)
    feat = np.array([np.sum(np.exp(-b * np.asarray(l, float))) for b, l in zip(beta, lags_by_dim)])
    lam = mu + float(alpha @ feat)
    return (dt - x / lam) * feat + np.asarray(zeta, float) * alpha


def ogd_exp_fit(stream: EventStream, hyper: HyperParams, B=2.0, grid: UpdateGrid | None = None) -> ExpFitResult:
    """Projected online gradient descent on ``alpha >= 0`` with decays ``B`` fixed.

    Uses the same discretized risk, window, step schedule and base-rate
    update as the nonparametric estimator.
    """
    grid = build_grid(stream, hyper.delta) if grid is None else grid
    p = stream.p
    B = np.broadcast_to(np.asarray(B, float), (p, p)).copy()
    if np.any(B <= 0):
        raise ValueError("decay rates must be positive")
    zeta = hyper.zeta_matrix(p)
    omega = hyper.omega_vector(p)
    sched = hyper.schedule
    n = stream.count_before(grid.epochs[-1])
    times = np.ascontiguousarray(stream.times[:n])
    dims = np.ascontiguousarray(stream.dims[:n])
    xf = grid.x.astype(float)
    outs = []
    for i in range(p):
        out = _ogd_row(
            grid.epochs, np.ascontiguousarray(xf[:, i]), times, dims, B[i], hyper.z, hyper.mu_min,
            hyper.initial_mu, omega[i], zeta[i], sched.a, sched.b, hyper.snapshot_stride,
        )
        if out[0]:
            raise DomainError(f"row {i}: intensity fell below mu_min")
        outs.append(out)
    S = len(outs[0][1])
    snap_mu = np.stack([o[2] for o in outs], axis=1)
    snap_A = np.stack([o[3] for o in outs], axis=1)
    loss = np.stack([o[4] for o in outs], axis=1)
    reg = np.stack([o[5] for o in outs], axis=1)
    assert snap_A.shape == (S, p, p)
    return ExpFitResult(grid, B, outs[0][1], snap_mu, snap_A, loss, reg)


__all__ = ["ExpFitResult", "ExpModel", "alpha_gradient", "ogd_exp_fit"]
