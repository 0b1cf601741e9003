"""Marked and spatial variants of the online estimator.

Both run on a product lattice: the time-lag lattice of the unmarked
estimator times a second axis holding standardized marks or cell
displacements.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _engine
from .discretize import DomainError, UpdateGrid, build_grid
from .kernels import GaussianKernel, KernelExpansion, ProductKernel, gram, merge_duplicates
from .npole import HyperParams, mu_step, rho, thread_count
from .process import EventFormatError, EventStream


# -- marks ------------------------------------------------------------------------

def standardize_marks(marks, warmup: int = 1000) -> tuple[np.ndarray, float, float]:
    """Standardize each mark with the running mean and deviation at its arrival.

    The statistics stop updating after ``warmup`` marks.  A zero deviation
    uses scale one.  Returns the standardized marks and the frozen
    ``(mean, scale)``.
    """
    v = np.asarray(marks, float).reshape(-1)
    n = len(v)
    if n == 0:
        return v.copy(), 0.0, 1.0
    m = min(n, warmup)
    head = v[:m]
    count = np.arange(1, m + 1)
    mean = np.cumsum(head) / count
    var = np.cumsum(head * head) / count - mean * mean
    sd = np.sqrt(np.clip(var, 0.0, None))
    # a spread below round-off counts as none
    sd = np.where(sd > 1e-12 * np.maximum(1.0, np.abs(mean)), sd, 1.0)
    out = np.empty(n)
    out[:m] = (head - mean) / sd
    out[m:] = (v[m:] - mean[-1]) / sd[-1]
    return out, float(mean[-1]), float(sd[-1])


@dataclass(frozen=True)
class MarkLattice:
    """``-bound, -bound + step, ..., bound`` in standardized mark units."""

    step: float = 0.25
    bound: float = 3.0

    def __post_init__(self):
        if not self.step > 0 or self.bound < 0:
            raise ValueError("mark lattice needs step > 0 and bound >= 0")

    def points(self) -> np.ndarray:
        n = int(math.floor(self.bound / self.step + 1e-9))
        return np.arange(-n, n + 1) * self.step

    def index(self, v) -> np.ndarray:
        n = len(self.points()) // 2
        q = np.floor(np.asarray(v, float) / self.step + 0.5).astype(np.int64)
        return np.clip(q, -n, n) + n


@dataclass(frozen=True)
class MarkedHyper:
    """Settings of the marked estimator on top of :class:`HyperParams`."""

    base: HyperParams = field(default_factory=HyperParams)
    mark_kernel: object = field(default_factory=lambda: GaussianKernel(1.0))
    lattice: MarkLattice = field(default_factory=MarkLattice)
    mode: str = "joint"
    warmup: int = 1000
    order: str = "g_then_h"

    def __post_init__(self):
        if self.mode not in ("joint", "separable"):
            raise ValueError("mode must be 'joint' or 'separable'")
        if self.order not in ("g_then_h", "h_then_g"):
            raise ValueError("order must be 'g_then_h' or 'h_then_g'")
        if self.mode == "separable" and self.base.projection != "grid_clip":
            raise ValueError("separable mode projects g and h by grid clipping")


@dataclass
class MarkedTrigger:
    """``f(t, v)``: a 2-D expansion (joint) or a product ``g(t) h(v)`` (separable).

    ``v`` is in standardized mark units.
    """

    joint: KernelExpansion | None = None
    g: KernelExpansion | None = None
    h: KernelExpansion | None = None
    square: bool = False

    def __post_init__(self):
        if (self.joint is None) == (self.g is None or self.h is None):
            raise ValueError("give either a joint expansion or both g and h")

    @property
    def separable(self) -> bool:
        return self.joint is None

    def __call__(self, t, v):
        t, v = np.broadcast_arrays(np.asarray(t, float), np.asarray(v, float))
        if self.separable:
            return self.g(t) * self.h(v)
        pts = np.stack([t.reshape(-1), v.reshape(-1)], axis=1)
        out = np.asarray(self.joint(pts)).reshape(t.shape)
        return out * out if self.square else out


def mmhp_gradient_joint(f: KernelExpansion, lags, marks, rho_k: float, zeta: float) -> KernelExpansion:
    """``rho sum_n K([lag_n, v_n], .) + zeta f`` over 2-D centers."""
    lags = np.asarray(lags, float).reshape(-1)
    if marks is None:
        raise ValueError("marked gradient needs marks")
    marks = np.asarray(marks, float).reshape(-1)
    if len(marks) != len(lags):
        raise ValueError("one mark per window arrival")
    centers = np.stack([lags, marks], axis=1)
    part = KernelExpansion(f.kernel, centers, np.full(len(lags), float(rho_k)), window=f.window)
    return f.scaled(zeta) + merge_duplicates(part) if len(lags) else f.scaled(zeta)


def mmhp_gradient_separable(g: KernelExpansion, h: KernelExpansion, lags, marks, rho_k: float, zeta: float):
    """Gradients of ``g`` and ``h`` for ``f = g h``.

    The ``g`` part weights ``K(lag_n, .)`` by ``h(v_n)``; the ``h`` part
    weights ``K(v_n, .)`` by ``g(lag_n)``.
    """
    lags = np.asarray(lags, float).reshape(-1)
    marks = np.asarray(marks, float).reshape(-1)
    if len(lags):
        hv = np.atleast_1d(h(marks))
        gv = np.atleast_1d(g(lags))
        dg = g.scaled(zeta) + merge_duplicates(replace(g, centers=lags, coefs=rho_k * hv))
        dh = h.scaled(zeta) + merge_duplicates(replace(h, centers=marks, coefs=rho_k * gv))
    else:
        dg, dh = g.scaled(zeta), h.scaled(zeta)
    return dg, dh


@dataclass
class MarkedFitResult:
    hyper: MarkedHyper
    p: int
    grid: UpdateGrid
    time_lattice: np.ndarray
    mark_lattice: np.ndarray
    mark_mean: float
    mark_scale: float
    snap_k: np.ndarray
    snap_mu: np.ndarray
    snap_coef: np.ndarray | None = None
    snap_g: np.ndarray | None = None
    snap_h: np.ndarray | None = None
    loss: np.ndarray | None = None
    reg: np.ndarray | None = None
    projection_calls: int = 0
    wall_seconds: float = 0.0

    @property
    def mu_hat(self) -> np.ndarray:
        return self.snap_mu[-1]

    def estimate(self, i: int, j: int, s: int = -1) -> MarkedTrigger:
        base = self.hyper.base
        if self.snap_coef is not None:
            c = self.snap_coef[s, i, j]
            nz = np.nonzero(c)[0]
            Ds = len(self.mark_lattice)
            centers = np.stack([self.time_lattice[nz // Ds], self.mark_lattice[nz % Ds]], axis=1)
            kern = ProductKernel(base.kernel, self.hyper.mark_kernel)
            f = KernelExpansion(kern, centers.reshape(-1, 2), c[nz], window=base.z)
            return MarkedTrigger(joint=f, square=base.projection == "square")
        g = KernelExpansion(base.kernel, self.time_lattice, self.snap_g[s, i, j], window=base.z)
        h = KernelExpansion(self.hyper.mark_kernel, self.mark_lattice, self.snap_h[s, i, j])
        return MarkedTrigger(g=g, h=h)

    def export(self, outdir: str, step: float = 0.01) -> list[str]:
        """Long-format ``t, v, value`` per pair; ``v`` in original mark units."""
        os.makedirs(outdir, exist_ok=True)
        ts = np.round(np.arange(0, self.hyper.base.z + step / 2, step), 10)
        paths = []
        for i in range(self.p):
            for j in range(self.p):
                f = self.estimate(i, j)
                path = os.path.join(outdir, f"f_{i + 1}_{j + 1}.csv")
                with open(path, "w") as fh:
                    fh.write("t,v,value\n")
                    for v in self.mark_lattice:
                        vals = f(ts, np.full_like(ts, v))
                        raw = self.mark_mean + self.mark_scale * v
                        for t, val in zip(ts, vals):
                            fh.write(f"{float(t)!r},{raw!r},{float(val)!r}\n")
                paths.append(path)
        return paths


def _marked_inputs(stream: EventStream, mh: MarkedHyper):
    if stream.marks is None:
        raise EventFormatError("marked estimation needs a mark column")
    zmarks, mean, scale = standardize_marks(stream.marks, mh.warmup)
    return zmarks, mean, scale, mh.lattice.index(zmarks)


def fit_marked(stream: EventStream, mh: MarkedHyper, grid: UpdateGrid | None = None, threads: int | None = None) -> MarkedFitResult:
    """Marked estimator, one independent run per row."""
    base = mh.base
    grid = build_grid(stream, base.delta) if grid is None else grid
    zmarks, mean, scale, midx = _marked_inputs(stream, mh)
    if mh.mode == "separable":
        return _fit_separable(stream, mh, grid, zmarks, mean, scale, midx)
    p = stream.p
    tl = base.lattice()
    ml = mh.lattice.points()
    Gt = gram(base.kernel, tl)
    Gs = gram(mh.mark_kernel, ml)
    Ds = len(ml)
    D = len(tl) * Ds
    n = stream.count_before(grid.epochs[-1])
    # f only enters the intensity at observed mark levels, so only those are clipped
    levels = np.unique(midx[:n]) if n else np.array([Ds // 2])
    clip = (base.clip_indices()[:, None] * Ds + levels[None, :]).reshape(-1).astype(np.int64)
    nbr_ptr = np.arange(Ds + 1, dtype=np.int64)
    nbr_cell = np.zeros(Ds, dtype=np.int64)
    nbr_s = np.arange(Ds, dtype=np.int64)
    coef0 = np.zeros((p, D))
    if base.projection == "square":
        coef0[:] = math.sqrt(base.square_init) / (np.max(Gt.sum(axis=1)) * np.max(Gs.sum(axis=1)))
    zeta = base.zeta_matrix(p)
    omega = base.omega_vector(p)
    sched = base.schedule
    mode = _engine.MODE_SQUARE if base.projection == "square" else _engine.MODE_GRID_CLIP
    times = np.ascontiguousarray(stream.times[:n])
    dims = np.ascontiguousarray(stream.dims[:n])
    keys = np.ascontiguousarray(midx[:n])
    xf = grid.x.astype(float)

    def run(i):
        return _engine.fit_lattice(
            grid.epochs, np.ascontiguousarray(xf[:, i : i + 1]), np.ones(1), times, dims, keys,
            nbr_ptr, nbr_cell, nbr_s, p, Gt, Gs, clip, base.snap_step, base.z, base.mu_min,
            base.initial_mu, omega[i], zeta[i], sched.a, sched.b, mode, base.budget or 0,
            base.snapshot_stride, coef0, base.kkt_tol, base.max_projection_iter, False,
        )

    t0 = time.perf_counter()
    nthreads = min(thread_count(threads), p)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            outs = list(ex.map(run, range(p)))
    else:
        outs = [run(i) for i in range(p)]
    wall = time.perf_counter() - t0
    S = len(outs[0][1])
    snap_mu = np.zeros((S, p))
    snap_coef = np.zeros((S, p, p, D))
    loss = np.zeros((grid.M, p))
    reg = np.zeros((grid.M, p))
    calls = 0
    for i, out in enumerate(outs):
        if out[0] == _engine.STATUS_DOMAIN:
            raise DomainError(f"row {i}: truncated intensity fell below mu_min")
        snap_k = out[1]
        snap_mu[:, i] = out[2]
        snap_coef[:, i] = out[3]
        loss[:, i] = out[4]
        reg[:, i] = out[5]
        calls += out[8]
    return MarkedFitResult(
        mh, p, grid, tl, ml, mean, scale, snap_k, snap_mu, snap_coef=snap_coef,
        loss=loss, reg=reg, projection_calls=calls, wall_seconds=wall,
    )


def _clip_inplace(G, coef, vals, tol, max_iter):
    if np.any(vals < 0):
        _engine.lcp_clip(G, np.arange(len(coef), dtype=np.int64), coef, vals, tol, max_iter)
        return 1
    return 0


def _fit_separable(stream, mh, grid, zmarks, mean, scale, midx) -> MarkedFitResult:
    base = mh.base
    p = stream.p
    tl = base.lattice()
    ml = mh.lattice.points()
    Gt = gram(base.kernel, tl)
    Gs = gram(mh.mark_kernel, ml)
    Dt, Ds = len(tl), len(ml)
    zeta = base.zeta_matrix(p)
    omega = base.omega_vector(p)
    sched = base.schedule
    M = grid.M
    n = stream.count_before(grid.epochs[-1])
    times, dims, keys = stream.times[:n], stream.dims[:n], midx[:n]
    snap_ks = [0] + [k for k in range(1, M + 1) if k % base.snapshot_stride == 0 or k == M]
    S = len(snap_ks)
    snap_mu = np.zeros((S, p))
    snap_g = np.zeros((S, p, p, Dt))
    snap_h = np.zeros((S, p, p, Ds))
    loss = np.zeros((M, p))
    reg = np.zeros((M, p))
    calls = 0
    g_first = mh.order == "g_then_h"
    # h starts as one kernel section at the (standardized) mark mean
    h0 = np.zeros(Ds)
    h0[int(mh.lattice.index(0.0))] = 1.0
    t0 = time.perf_counter()
    for i in range(p):
        mu = base.initial_mu
        g = np.zeros((p, Dt))
        gv = np.zeros((p, Dt))
        h = np.tile(h0, (p, 1))
        hv = h @ Gs
        snap_mu[0, i] = mu
        snap_g[0, i] = g
        snap_h[0, i] = h
        si = 1
        lo = hi = 0
        for k in range(1, M + 1):
            t = grid.epochs[k]
            dt = t - grid.epochs[k - 1]
            while hi < n and times[hi] < t:
                hi += 1
            while lo < hi and t - times[lo] >= base.z:
                lo += 1
            q = np.minimum(np.floor((t - times[lo:hi]) / base.snap_step + 0.5).astype(np.int64), Dt - 1)
            js, bs = dims[lo:hi], keys[lo:hi]
            lam = mu + float(np.sum(gv[js, q] * hv[js, bs]))
            if lam < base.mu_min * (1 - 1e-9) - 1e-12:
                raise DomainError(f"row {i}: truncated intensity fell below mu_min")
            x = grid.x[k, i]
            r = rho(dt, x, lam)
            loss[k - 1, i] = dt * lam - x * math.log(lam)
            norms = np.einsum("jd,jd->j", g, gv) * np.einsum("jd,jd->j", h, hv)
            reg[k - 1, i] = 0.5 * omega[i] * mu * mu + 0.5 * float(np.sum(zeta[i] * norms))
            eta = float(sched(k))
            mu = mu_step(mu, r, eta, omega[i], base.mu_min)
            for j in range(p):
                sel = js == j
                qj, bj = q[sel], bs[sel]
                shrink = 1.0 - eta * zeta[i, j]
                steps = (("g", "h") if g_first else ("h", "g"))
                for part in steps:
                    if part == "g":
                        w = np.zeros(Dt)
                        np.add.at(w, qj, hv[j, bj])
                        g[j] = shrink * g[j] - eta * r * w
                        gv[j] = Gt @ g[j]
                        if len(qj):
                            calls += _clip_inplace(Gt, g[j], gv[j], base.kkt_tol, base.max_projection_iter)
                    else:
                        w = np.zeros(Ds)
                        np.add.at(w, bj, gv[j, qj])
                        h[j] = shrink * h[j] - eta * r * w
                        hv[j] = Gs @ h[j]
                        if len(bj):
                            calls += _clip_inplace(Gs, h[j], hv[j], base.kkt_tol, base.max_projection_iter)
            if si < S and snap_ks[si] == k:
                snap_mu[si, i] = mu
                snap_g[si, i] = g
                snap_h[si, i] = h
                si += 1
    wall = time.perf_counter() - t0
    return MarkedFitResult(
        mh, p, grid, tl, ml, mean, scale, np.asarray(snap_ks), snap_mu, snap_g=snap_g, snap_h=snap_h,
        loss=loss, reg=reg, projection_calls=calls, wall_seconds=wall,
    )


# -- space --------------------------------------------------------------------------

MAX_CELLS = 400


@dataclass(frozen=True)
class CellGrid:
    """Rectangular cells ``lower + spacing * (index + 1/2)`` in row-major order."""

    lower: tuple
    spacing: tuple
    shape: tuple

    def __post_init__(self):
        if not (len(self.lower) == len(self.spacing) == len(self.shape)):
            raise ValueError("lower, spacing and shape must share a dimension")
        if any(s <= 0 for s in self.spacing) or any(n < 1 for n in self.shape):
            raise ValueError("cells need positive spacing and counts")
        if self.n_cells > MAX_CELLS:
            raise ValueError(f"at most {MAX_CELLS} cells are supported")

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def area(self) -> float:
        return float(np.prod(self.spacing))

    def multi_index(self) -> np.ndarray:
        return np.stack(np.unravel_index(np.arange(self.n_cells), self.shape), axis=1)

    def centers(self) -> np.ndarray:
        return np.asarray(self.lower) + np.asarray(self.spacing) * (self.multi_index() + 0.5)

    def locate(self, points) -> np.ndarray:
        """Cell index of each location; locations outside the cells raise."""
        pts = np.asarray(points, float).reshape(-1, len(self.shape))
        rel = (pts - np.asarray(self.lower)) / np.asarray(self.spacing)
        idx = np.floor(rel).astype(np.int64)
        # the upper boundary belongs to the last cell
        upper = np.asarray(self.shape)
        idx = np.where((rel == upper) & (idx == upper), upper - 1, idx)
        bad = np.any((idx < 0) | (idx >= upper) | ~np.isfinite(rel), axis=1)
        if np.any(bad):
            raise EventFormatError(f"location outside the cell domain at event {int(np.argmax(bad))}")
        return np.ravel_multi_index(tuple(idx.T), self.shape).astype(np.int64)


def displacement_table(cells: CellGrid, radius: float):
    """Offsets between cell centers within ``radius`` and per-source neighbour lists.

    Returns ``(offsets (Ds, d), nbr_ptr, nbr_cell, nbr_s)``: arrivals in
    cell ``src`` reach ``nbr_cell[nbr_ptr[src]:nbr_ptr[src + 1]]`` at
    displacement index ``nbr_s``.
    """
    mi = cells.multi_index()
    sp = np.asarray(cells.spacing, float)
    span = [np.arange(-(n - 1), n) for n in cells.shape]
    grid = np.stack(np.meshgrid(*span, indexing="ij"), axis=-1).reshape(-1, len(cells.shape))
    dist = np.sqrt(np.sum((grid * sp) ** 2, axis=1))
    keep = dist <= radius + 1e-12
    steps = grid[keep]
    offsets = steps * sp
    lookup = {tuple(s): n for n, s in enumerate(steps.tolist())}
    ptr, cell, sidx = [0], [], []
    for src in range(cells.n_cells):
        for dst in range(cells.n_cells):
            key = tuple((mi[dst] - mi[src]).tolist())
            if key in lookup:
                cell.append(dst)
                sidx.append(lookup[key])
        ptr.append(len(cell))
    return (
        offsets,
        np.asarray(ptr, dtype=np.int64),
        np.asarray(cell, dtype=np.int64),
        np.asarray(sidx, dtype=np.int64),
    )


@dataclass
class SpatialFitResult:
    hyper: HyperParams
    cells: CellGrid
    space_kernel: object
    grid: UpdateGrid
    time_lattice: np.ndarray
    offsets: np.ndarray
    snap_k: np.ndarray
    snap_mu: np.ndarray
    snap_coef: np.ndarray
    loss: np.ndarray
    reg: np.ndarray
    projection_calls: int = 0
    wall_seconds: float = 0.0

    @property
    def mu_hat(self) -> float:
        return float(self.snap_mu[-1])

    def estimate(self, s: int = -1) -> KernelExpansion:
        """``f(t, x)`` over centers ``(lag, displacement)``."""
        c = self.snap_coef[s]
        nz = np.nonzero(c)[0]
        Ds = len(self.offsets)
        centers = np.concatenate([self.time_lattice[nz // Ds][:, None], self.offsets[nz % Ds]], axis=1)
        kern = ProductKernel(self.hyper.kernel, self.space_kernel)
        return KernelExpansion(kern, centers.reshape(-1, 1 + self.offsets.shape[1]), c[nz], window=self.hyper.z)

    def __call__(self, t, offset, s: int = -1):
        t = np.atleast_1d(np.asarray(t, float))
        pts = np.concatenate([t[:, None], np.broadcast_to(np.asarray(offset, float), (len(t), self.offsets.shape[1]))], axis=1)
        out = np.asarray(self.estimate(s)(pts))
        return out * out if self.hyper.projection == "square" else out

    def seconds_per_epoch(self) -> float:
        return self.wall_seconds / max(self.grid.M, 1)


def shp_fit(
    stream: EventStream,
    hyper: HyperParams,
    cells: CellGrid,
    radius: float | None = None,
    space_kernel=None,
    weight: str | float = "area",
    grid: UpdateGrid | None = None,
) -> SpatialFitResult:
    """Spatial estimator on a finite set of cells.

    All arrivals share one base rate and one ``f(t, x)``.  The loss at an
    epoch sums ``dt w_c lam_c - x_c log lam_c`` over cell centers, with
    ``w_c`` the cell area by default.  Displacements beyond ``radius``
    (default 1.5 cell widths) do not trigger.
    """
    if stream.locations is None:
        raise EventFormatError("spatial estimation needs location columns")
    if hyper.projection == "poly_sdp":
        raise ValueError("spatial estimation supports grid_clip and square projections")
    src = cells.locate(stream.locations)
    radius = 1.5 * min(cells.spacing) if radius is None else float(radius)
    space_kernel = GaussianKernel(0.5 * min(cells.spacing)) if space_kernel is None else space_kernel
    offsets, nbr_ptr, nbr_cell, nbr_s = displacement_table(cells, radius)
    one = EventStream(stream.times, np.zeros(len(stream), dtype=np.int64), stream.T, 1)
    grid = build_grid(one, hyper.delta) if grid is None else grid
    C = cells.n_cells
    X = np.zeros((grid.M + 1, C))
    n = stream.count_before(grid.epochs[-1])
    np.add.at(X, (np.searchsorted(grid.epochs, stream.times[:n]), src[:n]), 1.0)
    w = np.full(C, cells.area if weight == "area" else float(weight))
    tl = hyper.lattice()
    Gt = gram(hyper.kernel, tl)
    Gs = space_kernel.vec(offsets[:, None, :], offsets[None, :, :])
    Ds = len(offsets)
    clip = (hyper.clip_indices()[:, None] * Ds + np.arange(Ds)[None, :]).reshape(-1).astype(np.int64)
    D = len(tl) * Ds
    coef0 = np.zeros((1, D))
    if hyper.projection == "square":
        coef0[:] = math.sqrt(hyper.square_init) / (np.max(Gt.sum(axis=1)) * np.max(Gs.sum(axis=1)))
    sched = hyper.schedule
    mode = _engine.MODE_SQUARE if hyper.projection == "square" else _engine.MODE_GRID_CLIP
    t0 = time.perf_counter()
    out = _engine.fit_lattice(
        grid.epochs, X, w, np.ascontiguousarray(stream.times[:n]), np.zeros(n, dtype=np.int64),
        np.ascontiguousarray(src[:n]), nbr_ptr, nbr_cell, nbr_s, 1, Gt, Gs, clip, hyper.snap_step,
        hyper.z, hyper.mu_min, hyper.initial_mu, float(hyper.omega_vector(1)[0]),
        hyper.zeta_matrix(1)[0], sched.a, sched.b, mode, hyper.budget or 0, hyper.snapshot_stride,
        coef0, hyper.kkt_tol, hyper.max_projection_iter, False,
    )
    wall = time.perf_counter() - t0
    if out[0] == _engine.STATUS_DOMAIN:
        raise DomainError("spatial intensity fell below mu_min")
    return SpatialFitResult(
        hyper, cells, space_kernel, grid, tl, offsets, out[1], out[2], out[3][:, 0], out[4], out[5],
        projection_calls=int(out[8]), wall_seconds=wall,
    )


def spatial_stream(times, cells_or_points, T: float, cells: CellGrid | None = None) -> EventStream:
    """Single-type stream with locations; integer input is read as cell indices."""
    arr = np.asarray(cells_or_points)
    if cells is not None and arr.ndim == 1:
        arr = cells.centers()[arr.astype(np.int64)]
    return EventStream(times, np.zeros(len(times), dtype=np.int64), T, 1, locations=arr)


__all__ = [
    "CellGrid",
    "MarkLattice",
    "MarkedFitResult",
    "MarkedHyper",
    "MarkedTrigger",
    "SpatialFitResult",
    "displacement_table",
    "fit_marked",
    "mmhp_gradient_joint",
    "mmhp_gradient_separable",
    "shp_fit",
    "spatial_stream",
    "standardize_marks",
]
