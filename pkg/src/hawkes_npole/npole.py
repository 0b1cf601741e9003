"""Online nonparametric estimation of Hawkes triggering functions."""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import nnls

from . import _engine
from .discretize import DomainError, UpdateGrid, build_grid, kappa_z, stepwise_terms
from .kernels import (
    GaussianKernel,
    KernelExpansion,
    PolynomialKernel,
    gram,
    kernel_from_description,
    merge_duplicates,
    rkhs_norm_sq,
    truncate_budget,
)
from .process import EventStream, HawkesModel, intensity_at_times

PROJECTIONS = ("grid_clip", "square", "poly_sdp")


class ProjectionWarning(RuntimeWarning):
    pass


# -- hyperparameters ------------------------------------------------------------

@dataclass(frozen=True)
class StepSchedule:
    """``eta_k = 1 / (a k + b)``."""

    a: float
    b: float

    def __post_init__(self):
        if not self.b > 0 or self.a < 0:
            raise ValueError("step schedule needs a >= 0 and b > 0")

    def __call__(self, k):
        return 1.0 / (self.a * np.asarray(k, float) + self.b)

    @classmethod
    def experimental(cls, delta: float) -> "StepSchedule":
        """``1 / (k delta / 20 + 100)``."""
        return cls(delta / 20.0, 100.0)

    @classmethod
    def sensitivity(cls) -> "StepSchedule":
        """``1 / (k / 2000 + 10)``, the schedule of the hyperparameter sweep."""
        return cls(1.0 / 2000.0, 10.0)

    @classmethod
    def regret(cls, zeta: float, b: float = 10.0) -> "StepSchedule":
        """``1 / (zeta k + b)``, the schedule of the logarithmic regret bound."""
        return cls(zeta, b)


@dataclass(frozen=True)
class HyperParams:
    """Everything the estimator needs besides the data.

    ``zeta`` and ``omega`` may be scalars or per-pair / per-row arrays;
    ``omega`` defaults to ``zeta``.  ``snap`` defaults to ``0.02 z / 3`` and
    the clip grid to the whole snap lattice.
    """

    delta: float = 0.05
    z: float = 3.0
    zeta: float | tuple = 1e-8
    omega: float | tuple | None = None
    mu_min: float = 0.01
    mu_init: float | None = None
    step: StepSchedule | None = None
    kernel: object = field(default_factory=lambda: GaussianKernel(0.2))
    budget: int | None = None
    projection: str = "grid_clip"
    snap: float | None = None
    clip_points: int | None = None
    square_init: float = 0.01
    snapshot_stride: int = 1000
    kkt_tol: float = 1e-12
    max_projection_iter: int = 1000

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if not self.z > self.delta:
            raise ValueError("window z must exceed delta")
        if not self.mu_min > 0:
            raise ValueError("mu_min must be positive")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"projection must be one of {PROJECTIONS}")
        if self.projection == "poly_sdp" and not isinstance(self.kernel, PolynomialKernel):
            raise ValueError("poly_sdp projection needs a polynomial kernel")
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be positive")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot stride must be positive")
        if np.any(np.asarray(self.zeta, float) < 0):
            raise ValueError("zeta must be nonnegative")

    @property
    def schedule(self) -> StepSchedule:
        return self.step if self.step is not None else StepSchedule.experimental(self.delta)

    @property
    def initial_mu(self) -> float:
        return 10.0 * self.mu_min if self.mu_init is None else float(self.mu_init)

    @property
    def snap_step(self) -> float:
        return 0.02 * self.z / 3.0 if self.snap is None else float(self.snap)

    def zeta_matrix(self, p: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.zeta, float), (p, p)).copy()

    def omega_vector(self, p: int) -> np.ndarray:
        om = self.zeta if self.omega is None else self.omega
        om = np.asarray(om, float)
        if om.ndim == 2:
            om = np.min(om, axis=1)
        return np.broadcast_to(om, (p,)).copy()

    def lattice(self) -> np.ndarray:
        n = int(math.floor(self.z / self.snap_step + 1e-9))
        return np.arange(n + 1) * self.snap_step

    def clip_indices(self) -> np.ndarray:
        D = len(self.lattice())
        if self.clip_points is None or self.clip_points >= D:
            return np.arange(D, dtype=np.int64)
        return np.unique(np.rint(np.linspace(0, D - 1, self.clip_points)).astype(np.int64))

    def describe(self) -> dict:
        return {
            "delta": self.delta,
            "z": self.z,
            "zeta": np.asarray(self.zeta, float).tolist(),
            "omega": None if self.omega is None else np.asarray(self.omega, float).tolist(),
            "mu_min": self.mu_min,
            "mu_init": self.initial_mu,
            "step_a": self.schedule.a,
            "step_b": self.schedule.b,
            "kernel": self.kernel.describe(),
            "budget": self.budget,
            "projection": self.projection,
            "snap": self.snap_step,
            "clip_points": self.clip_points,
            "square_init": self.square_init,
            "snapshot_stride": self.snapshot_stride,
        }

    @classmethod
    def from_description(cls, d: dict) -> "HyperParams":
        d = dict(d)
        kernel = kernel_from_description(d.pop("kernel")) if "kernel" in d else GaussianKernel(0.2)
        a, b = d.pop("step_a", None), d.pop("step_b", None)
        step = StepSchedule(a, b) if a is not None and b is not None else None
        mu_init = d.pop("mu_init", None)
        d.pop("snap", None) if d.get("snap") is None else None
        for key in ("zeta", "omega"):
            if isinstance(d.get(key), list):
                d[key] = np.asarray(d[key], float)
        return cls(kernel=kernel, step=step, mu_init=mu_init, **d)


def sweep_hyper(delta: float = 0.05, zeta: float = 1e-8, **kw) -> HyperParams:
    """Settings of the synthetic hyperparameter sweep: square transform,
    ``eta_k = 1/(k/2000 + 10)``, Gaussian kernel of bandwidth 0.2, ``z = 3``."""
    base = dict(
        delta=delta,
        z=3.0,
        zeta=zeta,
        step=StepSchedule.sensitivity(),
        projection="square",
        kernel=GaussianKernel(0.2),
    )
    base.update(kw)
    return HyperParams(**base)


# -- update primitives -------------------------------------------------------------

def rho(dt: float, x: float, lam: float, mu_min: float | None = None) -> float:
    """``dt - x / lam``."""
    if mu_min is not None and lam < mu_min:
        raise DomainError(f"truncated intensity {lam} below mu_min {mu_min}")
    if not lam > 0:
        raise DomainError("non-positive intensity")
    return dt - x / lam


def rho_bound(delta: float, mu_min: float) -> float:
    return abs(delta - 1.0 / mu_min)


def mu_step(mu: float, rho_k: float, eta: float, omega: float, mu_min: float) -> float:
    """``max(mu - eta (rho + omega mu), mu_min)``."""
    return max(mu - eta * (rho_k + omega * mu), mu_min)


def f_gradient(f: KernelExpansion, lags, rho_k: float, zeta: float, snap: float | None = None, weights=None) -> KernelExpansion:
    """Functional gradient ``rho sum_n w_n K(lag_n, .) + zeta f``.

    ``lags`` are ``t_k - tau`` for the window arrivals; ``weights`` default
    to one.  With ``snap`` the lags are rounded to that lattice first.
    """
    lags = np.asarray(lags, float).reshape(-1)
    if snap is not None:
        lags = np.rint(lags / snap) * snap
    w = np.ones(len(lags)) if weights is None else np.asarray(weights, float).reshape(-1)
    kernel_part = merge_duplicates(replace(f, centers=lags, coefs=rho_k * w)) if len(lags) else replace(f, centers=np.zeros(0), coefs=np.zeros(0))
    return f.scaled(zeta) + kernel_part


def gradient_norm_bound(kappa: int, delta: float, mu_min: float, x: int) -> float:
    """``2 kappa |delta - 1/mu_min|`` with an arrival, ``2 delta kappa`` without."""
    return 2.0 * kappa * (abs(delta - 1.0 / mu_min) if x else delta)


def estimate_norm_bound(zeta: float, kappa: int, delta: float, mu_min: float) -> float:
    """``zeta^-1 kappa |delta - 1/mu_min|``."""
    return math.inf if zeta == 0 else kappa * abs(delta - 1.0 / mu_min) / zeta


# -- projections -------------------------------------------------------------------------

@dataclass
class ProjectionResult:
    expansion: KernelExpansion
    kkt_residual: float
    iterations: int
    converged: bool


def _with_grid_centers(f: KernelExpansion, grid: np.ndarray) -> KernelExpansion:
    missing = grid[~np.isin(grid, f.centers)]
    if len(missing) == 0:
        return f.copy()
    return replace(f, centers=np.concatenate([f.centers, missing]), coefs=np.concatenate([f.coefs, np.zeros(len(missing))]))


def _range_inverse(K: np.ndarray, rel: float = 1e-13) -> np.ndarray:
    ev, U = np.linalg.eigh((K + K.T) / 2)
    keep = ev > ev.max() * rel
    return (U[:, keep] / ev[keep]) @ U[:, keep].T


def project_grid_clip_info(f: KernelExpansion, grid, tol: float = 1e-12, max_iter: int = 1000, extend: bool = False) -> ProjectionResult:
    """Closest expansion in RKHS norm with ``f(t_g) >= 0`` on the grid.

    The new coefficients ``b`` live on the centers of ``f`` and minimise
    ``(b - a)' K (b - a)``.  With ``extend`` the grid points join the
    centers first, which makes this the exact projection onto
    ``{f : f(t_g) >= 0}``.  The dual is a nonnegative least-squares problem
    solved by an active-set method.
    """
    grid = np.asarray(grid, float).reshape(-1)
    if len(grid) == 0:
        raise ValueError("clip grid must be nonempty")
    if len(f) == 0:
        return ProjectionResult(f.copy(), 0.0, 0, True)
    if np.all(np.atleast_1d(f(grid)) >= 0):
        return ProjectionResult(f.copy(), 0.0, 0, True)
    if extend:
        f = _with_grid_centers(f, grid)
    pos = {c: n for n, c in enumerate(f.centers.tolist())}
    on_centers = all(g in pos for g in grid.tolist())
    A = gram(f.kernel, grid, f.centers)
    if on_centers:
        # every constraint functional is a center: the dual Gramian is K_gg
        Q = gram(f.kernel, grid)
        lift = None
    else:
        Kinv = _range_inverse(f.gram())
        lift = Kinv @ A.T
        Q = A @ lift
    lam = np.zeros(len(grid))
    y = A @ f.coefs
    it, res = _engine.lcp_clip(Q, np.arange(len(grid), dtype=np.int64), lam, y, tol, max_iter)
    ok = res < max(tol, 1e-6)
    if not ok:
        warnings.warn(f"grid-clip projection stopped with KKT residual {res:.3g}", ProjectionWarning)
    b = f.coefs.copy()
    if lift is None:
        np.add.at(b, [pos[g] for g in grid.tolist()], lam)
    else:
        b += lift @ lam
    return ProjectionResult(f.with_coefs(b), float(res), int(it), bool(ok))


def project_grid_clip(f: KernelExpansion, grid, tol: float = 1e-12, max_iter: int = 1000, extend: bool = False) -> KernelExpansion:
    return project_grid_clip_info(f, grid, tol, max_iter, extend).expansion


def project_grid_clip_nnls(f: KernelExpansion, grid, extend: bool = False) -> KernelExpansion:
    """Same projection by a separate route: Moreau decomposition in feature space.

    With ``K = U diag(s) U'`` on the centers, the features of ``f`` are
    ``theta = diag(s)^{1/2} U' a`` and the constraints read ``C u >= 0``.
    The projected features are ``theta + C' l`` with ``l`` the NNLS solution
    of ``min_{l >= 0} ||C' l + theta||``.
    """
    grid = np.asarray(grid, float).reshape(-1)
    if len(f) == 0 or np.all(np.atleast_1d(f(grid)) >= 0):
        return f.copy()
    if extend:
        f = _with_grid_centers(f, grid)
    ev, U = np.linalg.eigh(f.gram())
    keep = ev > ev.max() * 1e-13
    Ur, sr = U[:, keep], np.sqrt(ev[keep])
    theta = sr * (Ur.T @ f.coefs)
    C = (gram(f.kernel, grid, f.centers) @ Ur) / sr
    lam, _ = nnls(C.T, -theta, maxiter=50 * len(grid))
    u = theta + C.T @ lam
    b = f.coefs + Ur @ ((u - theta) / sr)
    return f.with_coefs(b)


def _psd_sqrt(K: np.ndarray) -> np.ndarray:
    ev, U = np.linalg.eigh((K + K.T) / 2)
    ev = np.clip(ev, 0.0, None)
    return U * np.sqrt(ev)


def poly_lmi(f: KernelExpansion, b=None) -> np.ndarray:
    """``G diag(b) + diag(b) G`` with ``G`` the half-degree Gramian."""
    b = f.coefs if b is None else np.asarray(b, float)
    G = gram(f.kernel.half(), f.centers)
    return G * b[None, :] + b[:, None] * G


def project_poly_sdp(f: KernelExpansion, solver: str | None = None, fallback_grid=None) -> KernelExpansion:
    """Solve ``min_b -2 a'K b + b'K b`` s.t. ``G diag(b) + diag(b) G >= 0``.

    Falls back to grid clipping with a warning when the solver fails.
    """
    import cvxpy as cp

    if not isinstance(f.kernel, PolynomialKernel):
        raise ValueError("poly_sdp projection needs a polynomial kernel")
    n = len(f)
    if n == 0:
        return f.copy()
    if np.linalg.eigvalsh(poly_lmi(f)).min() >= 0:
        return f.copy()
    K = gram(f.kernel, f.centers)
    G = gram(f.kernel.half(), f.centers)
    L = _psd_sqrt(K)
    b = cp.Variable(n)
    Db = cp.diag(b)
    lmi = G @ Db + Db @ G
    obj = cp.Minimize(cp.sum_squares(L.T @ b) - 2 * (K @ f.coefs) @ b)
    prob = cp.Problem(obj, [(lmi + lmi.T) / 2 >> 0])
    try:
        prob.solve(solver=solver or "CLARABEL")
        ok = prob.status in ("optimal", "optimal_inaccurate") and b.value is not None
    except cp.error.SolverError:
        ok = False
    if not ok:
        warnings.warn("SDP projection failed; falling back to grid clipping", ProjectionWarning)
        grid = np.linspace(0, float(np.max(f.centers)), 61) if fallback_grid is None else fallback_grid
        return project_grid_clip(f, grid, extend=True)
    return f.with_coefs(np.asarray(b.value, float))


# -- estimates --------------------------------------------------------------------------

@dataclass
class SquaredExpansion:
    """``f = g^2`` for a kernel expansion ``g``."""

    g: KernelExpansion

    @property
    def window(self):
        return self.g.window

    def __call__(self, x):
        v = self.g(x)
        return v * v

    def as_expansion(self) -> KernelExpansion:
        """Exact Gaussian expansion of ``g^2`` (bandwidth ``h / sqrt 2``, midpoint centers)."""
        if not isinstance(self.g.kernel, GaussianKernel) or self.g.is_2d:
            raise ValueError("closed form only for Gaussian time kernels")
        h = self.g.kernel.bandwidth
        c, a = self.g.centers, self.g.coefs
        mids = 0.5 * (c[:, None] + c[None, :])
        w = a[:, None] * a[None, :] * np.exp(-((c[:, None] - c[None, :]) ** 2) / (4 * h * h))
        out = KernelExpansion(GaussianKernel(h / math.sqrt(2)), mids.reshape(-1), w.reshape(-1), window=self.g.window)
        return merge_duplicates(out)


@dataclass
class FitResult:
    """Snapshots and per-epoch traces of one estimator run.

    ``loss[k, i]`` is ``dt lam - x log lam`` of row ``i`` at epoch ``k + 1``
    under the iterate in force before that epoch's update; ``reg`` holds the
    matching Tikhonov terms.  Snapshots are taken at ``k = 0``, every
    ``snapshot_stride`` epochs and at the last epoch.
    """

    hyper: HyperParams
    p: int
    grid: UpdateGrid
    lattice: np.ndarray
    snap_k: np.ndarray
    snap_mu: np.ndarray
    snap_coef: np.ndarray | None
    loss: np.ndarray
    reg: np.ndarray
    lam: np.ndarray
    max_norm: np.ndarray
    norms: np.ndarray | None = None
    snap_fns: list | None = None
    projection_calls: int = 0
    projection_failures: int = 0
    worst_kkt: float = 0.0
    wall_seconds: float = 0.0

    @property
    def mu_hat(self) -> np.ndarray:
        return self.snap_mu[-1]

    @property
    def n_snapshots(self) -> int:
        return len(self.snap_k)

    def estimate(self, i: int, j: int, s: int = -1):
        if self.snap_fns is not None:
            return self.snap_fns[s][i][j]
        coef = self.snap_coef[s, i, j]
        nz = np.nonzero(coef)[0]
        g = KernelExpansion(self.hyper.kernel, self.lattice[nz], coef[nz], self.hyper.budget, self.hyper.z)
        return SquaredExpansion(g) if self.hyper.projection == "square" else g

    def lattice_values(self, s: int = -1) -> np.ndarray:
        """``f_ij`` evaluated on the lattice, shape ``(p, p, D)``."""
        out = np.zeros((self.p, self.p, len(self.lattice)))
        for i in range(self.p):
            for j in range(self.p):
                out[i, j] = self.estimate(i, j, s)(self.lattice)
        return out

    def model(self, s: int = -1) -> HawkesModel:
        F = [[self.estimate(i, j, s) for j in range(self.p)] for i in range(self.p)]
        return HawkesModel(self.snap_mu[s].copy(), F, window=self.hyper.z, check_stability=False)

    def risk(self) -> np.ndarray:
        return self.loss + self.reg

    def seconds_per_1e4_epochs(self) -> float:
        return self.wall_seconds / max(self.grid.M, 1) * 1e4

    def summary(self) -> dict:
        norms = [[math.sqrt(max(rkhs_norm_sq(self._norm_target(i, j)), 0.0)) for j in range(self.p)] for i in range(self.p)]
        return {
            "mu_hat": self.mu_hat.tolist(),
            "rkhs_norms": norms,
            "epochs": int(self.grid.M),
            "cumulative_risk": np.cumsum(self.risk().sum(axis=1))[:: max(1, self.hyper.snapshot_stride)].tolist(),
            "projection_calls": int(self.projection_calls),
            "projection_failures": int(self.projection_failures),
            "hyper": self.hyper.describe(),
        }

    def _norm_target(self, i, j):
        f = self.estimate(i, j)
        return f.g if isinstance(f, SquaredExpansion) else f

    def export(self, outdir: str, step: float = 0.01) -> list[str]:
        """One CSV per pair sampled every ``step`` on ``[0, z]``."""
        os.makedirs(outdir, exist_ok=True)
        ts = np.round(np.arange(0, self.hyper.z + step / 2, step), 10)
        paths = []
        for i in range(self.p):
            for j in range(self.p):
                vals = self.estimate(i, j)(ts)
                path = os.path.join(outdir, f"f_{i + 1}_{j + 1}.csv")
                with open(path, "w") as fh:
                    fh.write("t,value\n")
                    for t, v in zip(ts, vals):
                        fh.write(f"{float(t)!r},{float(v)!r}\n")
                paths.append(path)
        return paths


def thread_count(threads: int | None = None) -> int:
    env = os.environ.get("HAWKES_NPOLE_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(threads or 1))


def _initial_coefs(hyper: HyperParams, p: int, G: np.ndarray) -> np.ndarray:
    D = G.shape[0]
    coef0 = np.zeros((p, D))
    if hyper.projection == "square":
        # g starts as a flat sum of kernels scaled so that max f = square_init
        c = np.ones(D)
        coef0[:] = c * math.sqrt(hyper.square_init) / np.max(G @ c)
    return coef0


def fit(
    stream: EventStream,
    hyper: HyperParams,
    grid: UpdateGrid | None = None,
    rows=None,
    threads: int | None = None,
    track_norms: bool = False,
) -> FitResult:
    """Run the online estimator on every row (or the given ``rows``).

    Rows are independent and run on a thread pool; each row walks the
    epochs strictly in order.
    """
    if hyper.projection == "poly_sdp":
        return fit_reference(stream, hyper, grid)
    grid = build_grid(stream, hyper.delta) if grid is None else grid
    p = stream.p
    rows = list(range(p)) if rows is None else list(rows)
    lat = hyper.lattice()
    G = gram(hyper.kernel, lat)
    clip = hyper.clip_indices()
    zeta = hyper.zeta_matrix(p)
    omega = hyper.omega_vector(p)
    sched = hyper.schedule
    mode = _engine.MODE_SQUARE if hyper.projection == "square" else _engine.MODE_GRID_CLIP
    coef0 = _initial_coefs(hyper, p, G)
    xf = grid.x.astype(float)
    n = stream.count_before(grid.epochs[-1])
    times = np.ascontiguousarray(stream.times[:n])
    dims = np.ascontiguousarray(stream.dims[:n])

    def run(i):
        return _engine.fit_row(
            i, grid.epochs, np.ascontiguousarray(xf[:, i]), times, dims, p, G, clip,
            hyper.snap_step, hyper.z, hyper.mu_min, hyper.initial_mu, omega[i], zeta[i],
            sched.a, sched.b, mode, hyper.budget or 0, hyper.snapshot_stride, coef0,
            hyper.kkt_tol, hyper.max_projection_iter, track_norms,
        )

    t0 = time.perf_counter()
    nthreads = min(thread_count(threads), len(rows))
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            outs = list(ex.map(run, rows))
    else:
        outs = [run(i) for i in rows]
    wall = time.perf_counter() - t0

    M = grid.M
    D = len(lat)
    S = len(outs[0][1])
    snap_mu = np.zeros((S, p))
    snap_coef = np.zeros((S, p, p, D))
    loss = np.zeros((M, p))
    reg = np.zeros((M, p))
    lam = np.zeros((M, p))
    norms = np.zeros((M, p, p)) if track_norms else None
    max_norm = np.zeros((p, p))
    calls = fails = 0
    worst = 0.0
    for i, out in zip(rows, outs):
        status, sk, smu, scoef, l_, r_, lam_, nrm, mx, pc, pf, wk = out
        if status == _engine.STATUS_DOMAIN:
            raise DomainError(f"row {i}: truncated intensity fell below mu_min")
        snap_k = sk
        snap_mu[:, i] = smu
        snap_coef[:, i] = scoef
        loss[:, i] = l_
        reg[:, i] = r_
        lam[:, i] = lam_
        if track_norms:
            norms[:, i] = nrm
        max_norm[i] = mx
        calls += pc
        fails += pf
        worst = max(worst, wk)
    return FitResult(
        hyper, p, grid, lat, snap_k, snap_mu, snap_coef, loss, reg, lam, max_norm, norms,
        projection_calls=calls, projection_failures=fails, worst_kkt=worst, wall_seconds=wall,
    )


# -- reference implementation -----------------------------------------------------------

def fit_reference(stream: EventStream, hyper: HyperParams, grid: UpdateGrid | None = None, rows=None) -> FitResult:
    """Plain-Python run of the same updates on growing kernel expansions.

    Much slower than :func:`fit`; grid clipping goes through the NNLS route
    and polynomial kernels through the SDP projection.
    """
    grid = build_grid(stream, hyper.delta) if grid is None else grid
    p = stream.p
    rows = list(range(p)) if rows is None else list(rows)
    lat = hyper.lattice()
    clip_grid = lat[hyper.clip_indices()]
    zeta = hyper.zeta_matrix(p)
    omega = hyper.omega_vector(p)
    sched = hyper.schedule
    snap = hyper.snap_step
    square = hyper.projection == "square"
    M = grid.M
    n = stream.count_before(grid.epochs[-1])
    times, dims = stream.times[:n], stream.dims[:n]
    snap_ks = [0] + [k for k in range(1, M + 1) if k % hyper.snapshot_stride == 0 or k == M]
    S = len(snap_ks)
    snap_mu = np.zeros((S, p))
    fns = [[[None] * p for _ in range(p)] for _ in range(S)]
    loss = np.zeros((M, p))
    reg = np.zeros((M, p))
    lam_tr = np.zeros((M, p))
    max_norm = np.zeros((p, p))
    G_lat = gram(hyper.kernel, lat)
    coef0 = _initial_coefs(hyper, p, G_lat)
    t0 = time.perf_counter()
    for i in range(p):
        if i not in rows:
            continue
        mu = hyper.initial_mu
        F = []
        for j in range(p):
            nz = np.nonzero(coef0[j])[0]
            F.append(KernelExpansion(hyper.kernel, lat[nz], coef0[j, nz], hyper.budget, hyper.z))
        norm2 = np.array([rkhs_norm_sq(f) for f in F])
        max_norm[i] = np.sqrt(norm2)
        si = 0

        def record(s_idx):
            snap_mu[s_idx, i] = mu
            for j in range(p):
                fns[s_idx][i][j] = SquaredExpansion(F[j].copy()) if square else F[j].copy()

        record(0)
        si = 1
        for k in range(1, M + 1):
            t = grid.epochs[k]
            dt = t - grid.epochs[k - 1]
            hi = int(np.searchsorted(times, t, side="left"))
            lo = int(np.searchsorted(times, t - hyper.z, side="right"))
            lo = max(min(lo, hi) - 1, 0)
            lags = t - times[lo:hi]
            inside = lags < hyper.z
            lags = lags[inside]
            lags = np.minimum(np.floor(lags / snap + 0.5), len(lat) - 1) * snap
            evd = dims[lo:hi][inside]
            by_j = [lags[evd == j] for j in range(p)]
            vals = [np.atleast_1d(F[j](by_j[j])) if len(by_j[j]) else np.zeros(0) for j in range(p)]
            lam = mu + sum(float(np.sum(v * v if square else v)) for v in vals)
            if lam < hyper.mu_min * (1 - 1e-9) - 1e-12:
                raise DomainError(f"row {i}: truncated intensity fell below mu_min")
            x = grid.x[k, i]
            r = rho(dt, x, lam)
            loss[k - 1, i] = dt * lam - x * math.log(lam)
            reg[k - 1, i] = 0.5 * omega[i] * mu * mu + 0.5 * float(np.sum(zeta[i] * norm2))
            lam_tr[k - 1, i] = lam
            eta = float(sched(k))
            mu = mu_step(mu, r, eta, omega[i], hyper.mu_min)
            for j in range(p):
                w = 2.0 * vals[j] if square else None
                grad = f_gradient(F[j], by_j[j], r, zeta[i, j], weights=w)
                f_new = F[j] - grad.scaled(eta)
                if not square and len(by_j[j]):
                    if hyper.projection == "poly_sdp":
                        f_new = project_poly_sdp(f_new)
                    elif len(f_new) and np.any(np.atleast_1d(f_new(clip_grid)) < 0):
                        f_new = project_grid_clip_nnls(f_new, clip_grid, extend=True)
                if hyper.budget is not None and len(by_j[j]):
                    f_new, _ = truncate_budget(f_new)
                F[j] = f_new
                norm2[j] = rkhs_norm_sq(f_new)
            max_norm[i] = np.maximum(max_norm[i], np.sqrt(norm2))
            if si < S and snap_ks[si] == k:
                record(si)
                si += 1
    wall = time.perf_counter() - t0
    return FitResult(
        hyper, p, grid, lat, np.asarray(snap_ks), snap_mu, None, loss, reg, lam_tr, max_norm,
        snap_fns=fns, wall_seconds=wall,
    )


# -- regret --------------------------------------------------------------------------------

@dataclass
class RegretTrace:
    """Cumulative regret per row against a fixed comparator model.

    ``regret[k, i]`` sums ``l_ik(estimate) - l_ik(comparator)`` over the
    first ``k + 1`` epochs.  ``c1`` is the constant of the logarithmic bound,
    reported for reference only.
    """

    regret: np.ndarray
    estimator_risk: np.ndarray
    comparator_risk: np.ndarray
    c1: float
    kappa_z: int

    @property
    def total(self) -> np.ndarray:
        return self.regret.sum(axis=1)

    def normalized(self) -> np.ndarray:
        k = np.arange(1, len(self.regret) + 1)
        return self.total / (1.0 + np.log(k))

    def flatness_ratio(self) -> float:
        """``final / max`` of the log-normalised total regret."""
        r = self.normalized()
        peak = float(np.max(r))
        return float(r[-1] / peak) if peak > 0 else float("nan")

    def growth_exponent(self) -> float:
        """Slope of ``log R`` against ``log k`` over the second half (1 means linear)."""
        r = self.total
        k = np.arange(1, len(r) + 1)
        half = len(r) // 2
        sel = slice(half, None)
        if np.any(r[sel] <= 0):
            return float("nan")
        return float(np.polyfit(np.log(k[sel]), np.log(r[sel]), 1)[0])

    def bound(self) -> np.ndarray:
        k = np.arange(1, len(self.regret) + 1)
        return self.c1 * (1.0 + np.log(k))


def comparator_risk(model: HawkesModel, stream: EventStream, grid: UpdateGrid, z: float, omega=None) -> np.ndarray:
    """Per-epoch ``dt lam - x log lam (+ omega/2 mu^2)`` of a fixed model, shape ``(M, p)``.

    The triggering-function regulariser of the comparator is left out: a
    closed-form ground truth has no finite expansion to take a norm of.
    """
    out = np.zeros((grid.M, model.p))
    for i in range(model.p):
        lam = intensity_at_times(model, stream, i, grid.epochs[1:], z)
        out[:, i] = stepwise_terms(lam, grid, i)
        if omega is not None:
            out[:, i] += 0.5 * float(np.asarray(omega, float).reshape(-1)[i]) * model.mu[i] ** 2
    return out


def c1_constant(p: int, kappa: int, zeta: float, delta: float, mu_min: float) -> float:
    """``2 (1 + p kappa_z^2) zeta^-1 |delta - 1/mu_min|^2``."""
    return 2.0 * (1 + p * kappa**2) / zeta * (delta - 1.0 / mu_min) ** 2


def regret_trace(result: FitResult, reference: HawkesModel, stream: EventStream) -> RegretTrace:
    est = result.risk()
    comp = comparator_risk(reference, stream, result.grid, result.hyper.z, result.hyper.omega_vector(result.p))
    kz = kappa_z(stream, result.hyper.z)
    zeta_min = float(min(np.min(result.hyper.zeta_matrix(result.p)), np.min(result.hyper.omega_vector(result.p))))
    c1 = c1_constant(result.p, kz, zeta_min, result.hyper.delta, result.hyper.mu_min) if zeta_min > 0 else math.inf
    return RegretTrace(np.cumsum(est - comp, axis=0), est, comp, c1, kz)


__all__ = [
    "FitResult",
    "HyperParams",
    "ProjectionResult",
    "ProjectionWarning",
    "RegretTrace",
    "SquaredExpansion",
    "StepSchedule",
    "c1_constant",
    "comparator_risk",
    "estimate_norm_bound",
    "f_gradient",
    "fit",
    "fit_reference",
    "gradient_norm_bound",
    "mu_step",
    "sweep_hyper",
    "poly_lmi",
    "project_grid_clip",
    "project_grid_clip_info",
    "project_grid_clip_nnls",
    "project_poly_sdp",
    "regret_trace",
    "rho",
    "rho_bound",
]
