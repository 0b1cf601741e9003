"""Update grids, discretized likelihoods and the truncation/discretization bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .process import EventStream, GroundTruthFn, HawkesModel, UnsupportedModelError, intensity_at_times

GRID_SLACK = 1e-9


class DomainError(ValueError):
    """An intensity left its admissible range."""


@dataclass
class UpdateGrid:
    """Epochs ``t_0 = 0 < t_1 < ... < t_M`` and arrival counts per epoch.

    ``x[k, i]`` counts dimension-``i`` arrivals in ``(t_{k-1}, t_k]``.
    Row 0 only holds arrivals at exactly ``t = 0``.
    """

    epochs: np.ndarray
    x: np.ndarray
    delta: float

    @property
    def M(self) -> int:
        return len(self.epochs) - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.epochs)

    def to_csv(self) -> str:
        p = self.x.shape[1]
        lines = ["t_k," + ",".join(f"x_{i + 1}k" for i in range(p))]
        for t, row in zip(self.epochs, self.x):
            lines.append(repr(float(t)) + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def build_grid(stream: EventStream, delta: float, T: float | None = None) -> UpdateGrid:
    """Merge the ``delta`` ticks in ``(0, T]`` with the arrival times.

    Ticks within ``1e-9`` of an arrival are dropped in favour of the arrival,
    and ``T`` is always the last epoch.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if delta > 1:
        raise ValueError("delta must not exceed 1")
    T = stream.T if T is None else float(T)
    n = stream.count_before(T)
    ev = stream.times[:n]
    m_max = int(math.floor(T / delta + GRID_SLACK))
    ticks = delta * np.arange(1, m_max + 1)
    ticks = ticks[ticks < T - GRID_SLACK]
    ticks = np.append(ticks, T)
    if n:
        pos = np.searchsorted(ev, ticks)
        near = np.zeros(len(ticks), dtype=bool)
        for off in (pos - 1, pos):
            ok = (off >= 0) & (off < n)
            near[ok] |= np.abs(ev[off[ok]] - ticks[ok]) <= GRID_SLACK
        ticks = ticks[~near]
    epochs = np.unique(np.concatenate([[0.0], ticks, ev]))
    x = np.zeros((len(epochs), stream.p), dtype=np.int64)
    if n:
        np.add.at(x, (np.searchsorted(epochs, ev), stream.dims[:n]), 1)
    return UpdateGrid(epochs, x, float(delta))


def build_grid_recursive(stream: EventStream, delta: float, T: float | None = None) -> np.ndarray:
    """Reference epoch sequence from the one-step recursion (slow)."""
    T = stream.T if T is None else float(T)
    ev = stream.times[: stream.count_before(T)]
    out = [0.0]
    t = 0.0
    while t < T:
        floor_t = delta * math.floor(t / delta + GRID_SLACK)
        cand = [floor_t + delta, T]
        later = ev[ev > t]
        if len(later):
            cand.append(later[0])
        nxt = min(cand)
        # a tick that lands on an arrival is the arrival, one that lands on T is T
        if len(later) and abs(later[0] - nxt) <= GRID_SLACK:
            nxt = later[0]
        elif abs(T - nxt) <= GRID_SLACK:
            nxt = T
        out.append(nxt)
        t = nxt
    return np.asarray(out)


def discretized_nll(intensity_fn, grid: UpdateGrid, i: int) -> float:
    """``sum_k dt_k lambda(t_k) - x_ik log lambda(t_k)`` over ``k >= 1``.

    ``intensity_fn`` maps an array of epochs to intensities.
    """
    lam = np.asarray(intensity_fn(grid.epochs[1:]), dtype=float)
    if np.any(~(lam > 0)):
        raise DomainError("non-positive intensity on the update grid")
    return float(np.sum(grid.dt * lam) - np.sum(grid.x[1:, i] * np.log(lam)))


def discretized_nll_model(model: HawkesModel, stream: EventStream, grid: UpdateGrid, i: int, z: float = math.inf) -> float:
    """Discretized likelihood of the (truncated) intensity of ``model``."""
    return discretized_nll(lambda ts: intensity_at_times(model, stream, i, ts, z), grid, i)


def stepwise_terms(lam: np.ndarray, grid: UpdateGrid, i: int) -> np.ndarray:
    if np.any(~(lam > 0)):
        raise DomainError("non-positive intensity on the update grid")
    return grid.dt * lam - grid.x[1:, i] * np.log(lam)


def instantaneous_risk(lam, dt, x, mu, f_norms_sq=(), omega=0.0, zeta=(), mu_min=None) -> float:
    """``dt lam - x log lam + omega/2 mu^2 + sum zeta_j/2 ||f_j||^2``."""
    if mu_min is not None and lam < mu_min:
        raise DomainError(f"intensity {lam} below mu_min {mu_min}")
    if not lam > 0:
        raise DomainError("non-positive intensity")
    reg = 0.5 * omega * mu * mu
    norms = np.asarray(f_norms_sq, dtype=float)
    if norms.size:
        reg += 0.5 * float(np.sum(np.broadcast_to(np.asarray(zeta, float), norms.shape) * norms))
    return float(dt * lam - x * math.log(lam) + reg)


# -- tail functions -------------------------------------------------------------

def tail_fn_exp(beta: float, delta: float, t):
    """``beta^-1 exp(-beta (t - delta))``: tail of ``exp(-beta t)``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return np.exp(-beta * (np.asarray(t, float) - delta)) / beta


@dataclass(frozen=True)
class ExpTail:
    beta: float
    delta: float
    scale: float = 1.0

    def __call__(self, t):
        return self.scale * tail_fn_exp(self.beta, self.delta, t)


@dataclass(frozen=True)
class GaussTail:
    """Tail of ``exp(-(t - gamma)^2)``: ``sqrt(pi/2) erfc((t - gamma)/sqrt 2) e^{delta^2/2}``.

    Valid for ``t > gamma + 2 delta``.
    """

    gamma: float
    delta: float
    scale: float = 1.0

    def valid_from(self) -> float:
        return self.gamma + 2 * self.delta

    def __call__(self, t):
        t = np.asarray(t, float)
        return self.scale * math.sqrt(math.pi / 2) * erfc((t - self.gamma) / math.sqrt(2)) * math.exp(self.delta**2 / 2)


def riemann_tail(f, epochs: np.ndarray, m: int, n_sub: int = 64) -> float:
    """``sum_{k >= m} (t_k - t_{k-1}) sup_{(t_{k-1}, t_k]} |f|`` by dense sampling."""
    total = 0.0
    for k in range(m, len(epochs)):
        a, b = epochs[k - 1], epochs[k]
        xs = np.linspace(a, b, n_sub + 1)[1:]
        total += (b - a) * float(np.max(np.abs(f(xs))))
    return total


def exponential_tails(model: HawkesModel, delta: float) -> tuple:
    """Uniform tails ``eps`` and ``eps'`` over all pairs of an exponential model.

    Returns two callables.  ``eps(t) = max a/b e^{-b (t - delta)}`` and
    ``eps'(t) = max a e^{-b (t - delta)}``.
    """
    pairs = []
    for row in model.F:
        for fn in row:
            if not isinstance(fn, GroundTruthFn) or not fn.is_exponential():
                raise UnsupportedModelError("exponential triggering functions required")
            for a, _, _, b, _, _ in fn.terms():
                pairs.append((abs(a), b))
    if not pairs:
        return (lambda t: 0.0 * np.asarray(t, float)), (lambda t: 0.0 * np.asarray(t, float))
    amp = np.array([p[0] for p in pairs])
    rate = np.array([p[1] for p in pairs])

    def eps(t):
        t = np.asarray(t, float)
        return np.max(amp[:, None] / rate[:, None] * np.exp(-rate[:, None] * (t.reshape(-1) - delta)), axis=0).reshape(t.shape)

    def eps_prime(t):
        t = np.asarray(t, float)
        return np.max(amp[:, None] * np.exp(-rate[:, None] * (t.reshape(-1) - delta)), axis=0).reshape(t.shape)

    return eps, eps_prime


# -- stream statistics -------------------------------------------------------------

def kappa_window(stream: EventStream, width: float, per_dim: bool = True) -> int:
    """Largest arrival count in any window of length ``width``.

    Per dimension by default, otherwise over all dimensions together.
    """
    best = 0
    groups = [stream.times[stream.dims == i] for i in range(stream.p)] if per_dim else [stream.times]
    for ts in groups:
        if len(ts):
            # any closed window [a, a + width] can be slid to start at an arrival
            c = np.searchsorted(ts, ts + width, side="right") - np.arange(len(ts))
            best = max(best, int(c.max()))
    return best


def kappa_1(stream: EventStream) -> int:
    return kappa_window(stream, 1.0)


def kappa_z(stream: EventStream, z: float) -> int:
    """Largest count of one dimension's arrivals in a half-open window of length ``z``."""
    return kappa_window(stream, z)


def prop1_bound(stream: EventStream, z: float, delta: float, mu_min: float, kappa1: float, eps, eps_prime, t: float | None = None) -> float:
    """``(1 + kappa1/mu_min) N(t - z) eps(z) + delta N(t) eps'(0)``."""
    t = stream.T if t is None else t
    n_old = stream.count_before(t - z) if math.isfinite(z) else 0
    trunc = (1.0 + kappa1 / mu_min) * n_old * float(eps(z)) if n_old else 0.0
    return float(trunc + delta * stream.count_before(t) * float(eps_prime(0.0)))


def grid_size_bound(stream: EventStream, delta: float, T: float | None = None) -> float:
    """``T/delta + N(T)``: ceiling on the number of epochs."""
    T = stream.T if T is None else T
    return T / delta + stream.count_before(T)


__all__ = [
    "DomainError",
    "ExpTail",
    "GaussTail",
    "UpdateGrid",
    "build_grid",
    "build_grid_recursive",
    "discretized_nll",
    "discretized_nll_model",
    "exponential_tails",
    "grid_size_bound",
    "instantaneous_risk",
    "kappa_1",
    "kappa_window",
    "kappa_z",
    "prop1_bound",
    "riemann_tail",
    "stepwise_terms",
    "tail_fn_exp",
]
