import math

import numpy as np
import pytest

from hawkes_npole.extensions import (
    CellGrid,
    MarkedHyper,
    MarkedTrigger,
    MarkLattice,
    displacement_table,
    fit_marked,
    mmhp_gradient_joint,
    mmhp_gradient_separable,
    shp_fit,
    spatial_stream,
    standardize_marks,
)
from hawkes_npole.harness.experiments import constant_mark_gap, single_cell_gap
from hawkes_npole.kernels import GaussianKernel, KernelExpansion, ProductKernel, gram
from hawkes_npole.npole import HyperParams, rho
from hawkes_npole.process import EventFormatError, EventStream, exp_model, simulate

KT = GaussianKernel(0.2)
KM = GaussianKernel(1.0)
PK = ProductKernel(KT, KM)


def test_standardize_marks():
    z, mean, scale = standardize_marks([2.0, 2.0, 2.0])
    assert z.tolist() == [0.0, 0.0, 0.0] and mean == 2.0 and scale == 1.0
    v = np.random.default_rng(0).normal(5.0, 2.0, 3000)
    z, mean, scale = standardize_marks(v, warmup=1000)
    assert mean == pytest.approx(np.mean(v[:1000])) and scale == pytest.approx(np.std(v[:1000]))
    assert np.allclose(z[1000:], (v[1000:] - mean) / scale)


def test_mark_lattice():
    lat = MarkLattice()
    pts = lat.points()
    assert len(pts) == 25 and pts[0] == -3.0 and pts[-1] == 3.0
    assert lat.index(0.0) == 12 and lat.index(10.0) == 24 and lat.index(0.26) == 13


def test_joint_gradient_examples():
    f = KernelExpansion(PK, np.array([[0.3, 0.0], [1.0, 1.0]]), [0.5, -0.1])
    g = mmhp_gradient_joint(f, [], [], 0.4, 0.2)
    assert np.allclose(g.coefs, 0.2 * f.coefs)
    g = mmhp_gradient_joint(KernelExpansion(PK, np.zeros((0, 2)), []), [0.4], [2.0], 0.1, 0.0)
    assert g.centers.tolist() == [[0.4, 2.0]] and g.coefs.tolist() == [0.1]


def test_joint_gradient_finite_differences():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        c = np.column_stack([rng.uniform(0, 3, 5), rng.normal(size=5)])
        a = rng.uniform(0.05, 0.5, 5)
        lags, marks = rng.uniform(0, 3, 3), rng.normal(size=3)
        mu, dt, x, zeta = 0.3, 0.05, 1, 0.1
        pts = np.column_stack([lags, marks])
        G, A = gram(PK, c), gram(PK, pts, c)

        def risk(b):
            lam = mu + float(np.sum(A @ b))
            return dt * lam - x * math.log(lam) + 0.5 * zeta * float(b @ G @ b)

        f = KernelExpansion(PK, c, a)
        r = rho(dt, x, mu + float(np.sum(A @ a)))
        analytic = np.asarray(mmhp_gradient_joint(f, lags, marks, r, zeta)(c))
        h = 1e-6
        fd = np.array([(risk(a + h * e) - risk(a - h * e)) / (2 * h) for e in np.eye(5)])
        worst = max(worst, float(np.max(np.abs(analytic - fd)) / np.max(np.abs(fd))))
    assert worst <= 1e-5


def test_separable_gradient_examples():
    # h identically one: a flat mark kernel with one center
    flat = GaussianKernel(1e8)
    h = KernelExpansion(flat, [0.0], [1.0])
    g = KernelExpansion(KT, [0.3, 1.2], [0.4, 0.2])
    dg, _ = mmhp_gradient_separable(g, h, [0.4, 2.0], [1.5, -0.3], 0.1, 0.01)
    plain = g.scaled(0.01) + KernelExpansion(KT, [0.4, 2.0], [0.1, 0.1])
    ts = np.linspace(0, 3, 50)
    assert np.allclose(dg(ts), plain(ts), atol=1e-12, rtol=0)
    # one event with g(lag) = 0.5
    g = KernelExpansion(KT, [0.4], [0.5])
    _, dh = mmhp_gradient_separable(g, KernelExpansion(KM, np.zeros(0), []), [0.4], [2.0], 0.1, 0.0)
    assert dh.centers.tolist() == [2.0] and dh.coefs[0] == pytest.approx(0.05)


def test_alternating_steps_descend():
    rng = np.random.default_rng(2)
    wins = 0
    zeta, eta, mu, dt, x = 1e-3, 0.01, 0.3, 0.05, 1
    for _ in range(100):
        g = KernelExpansion(KT, rng.uniform(0, 3, 4), rng.uniform(0.1, 1, 4))
        h = KernelExpansion(KM, rng.normal(size=3), rng.uniform(0.1, 1, 3))
        lags, marks = rng.uniform(0, 3, 3), rng.normal(size=3)

        def lam(g, h):
            return mu + float(np.sum(np.asarray(g(lags)) * np.asarray(h(marks))))

        def risk(g, h):
            l = lam(g, h)
            return dt * l - x * math.log(l) + 0.5 * zeta * (float(g.coefs @ g.gram() @ g.coefs) + float(h.coefs @ h.gram() @ h.coefs))

        before = risk(g, h)
        dg, _ = mmhp_gradient_separable(g, h, lags, marks, rho(dt, x, lam(g, h)), zeta)
        g = g - dg.scaled(eta)
        _, dh = mmhp_gradient_separable(g, h, lags, marks, rho(dt, x, lam(g, h)), zeta)
        h = h - dh.scaled(eta)
        wins += risk(g, h) < before
    assert wins >= 90


def test_separable_equals_joint_when_factored():
    rng = np.random.default_rng(3)
    gc, ga = rng.uniform(0, 3, 3), rng.normal(size=3)
    hc, ha = rng.normal(size=2), rng.normal(size=2)
    g, h = KernelExpansion(KT, gc, ga), KernelExpansion(KM, hc, ha)
    centers = np.array([[t, v] for t in gc for v in hc])
    coefs = np.array([a * b for a in ga for b in ha])
    joint = MarkedTrigger(joint=KernelExpansion(PK, centers, coefs))
    sep = MarkedTrigger(g=g, h=h)
    t, v = rng.uniform(0, 3, 40), rng.normal(size=40)
    assert np.max(np.abs(joint(t, v) - sep(t, v))) <= 1e-10


def short_stream():
    m = exp_model([0.3, 0.2], [[0.5, 0.2], [0.0, 0.4]], 2.0)
    return simulate(m, 150.0, 1)


def test_constant_marks_reproduce_unmarked_fit():
    assert constant_mark_gap(short_stream(), HyperParams(delta=0.1)) <= 1e-6


def test_single_cell_reproduces_one_dim_fit():
    s = short_stream()
    for projection in ("grid_clip", "square"):
        assert single_cell_gap(s, HyperParams(delta=0.1, projection=projection)) == 0.0


def test_separable_fit_runs_and_stays_nonnegative():
    s = short_stream()
    marks = np.random.default_rng(4).exponential(1.0, len(s))
    ms = EventStream(s.times, s.dims, s.T, s.p, marks=marks)
    res = fit_marked(ms, MarkedHyper(base=HyperParams(delta=0.1), mode="separable"))
    f = res.estimate(0, 0)
    t = res.time_lattice
    for v in res.mark_lattice[::4]:
        assert np.min(f(t, np.full_like(t, v))) >= -1e-8
    assert np.all(res.snap_mu >= 0.01)


def test_marked_export_columns(tmp_path):
    s = short_stream()
    ms = EventStream(s.times, s.dims, s.T, s.p, marks=np.random.default_rng(5).normal(size=len(s)))
    res = fit_marked(ms, MarkedHyper(base=HyperParams(delta=0.1)))
    paths = res.export(str(tmp_path))
    with open(paths[0]) as fh:
        assert fh.readline().strip() == "t,v,value"


def test_cell_grid_and_displacements():
    cells = CellGrid((0.0, 0.0), (1.0, 2.0), (2, 3))
    assert cells.n_cells == 6 and cells.area == 2.0
    assert cells.locate(np.array([[0.5, 1.0], [1.9, 5.9]])).tolist() == [0, 5]
    with pytest.raises(EventFormatError):
        cells.locate(np.array([[2.5, 0.0]]))
    offsets, ptr, cell, s = displacement_table(CellGrid((0.0, 0.0), (1.0, 1.0), (2, 2)), 1.5)
    assert len(offsets) == 9 and np.any(np.all(offsets == 0, axis=1))
    assert ptr[-1] == 16  # every cell reaches all four cells within 1.5
    with pytest.raises(ValueError):
        CellGrid((0.0, 0.0), (1.0, 1.0), (21, 20))


def test_shp_estimate_nonnegative_and_empty_window():
    cells = CellGrid((0.0, 0.0), (1.0, 1.0), (2, 2))
    rng = np.random.default_rng(6)
    t = np.sort(rng.uniform(0, 200, 100))
    s = spatial_stream(t, rng.integers(0, 4, 100), 200.0, cells)
    res = shp_fit(s, HyperParams(delta=0.1), cells)
    for d in res.offsets:
        assert np.min(res(res.time_lattice, d)) >= -1e-8
    # no arrivals at all: the estimate stays at its zero start
    empty = spatial_stream(np.zeros(0), np.zeros(0, dtype=np.int64), 10.0, cells)
    assert np.all(shp_fit(empty, HyperParams(delta=0.1), cells).snap_coef == 0)


def test_shp_cost_linear_in_cells():
    rng = np.random.default_rng(0)
    T = 400.0
    hyper = HyperParams(delta=0.05, projection="square")
    sizes, cost = [], []
    for side in (1, 2, 4, 8):
        cells = CellGrid((0.0, 0.0), (1.0, 1.0), (side, side))
        C = cells.n_cells
        n = rng.poisson(0.3 * C * T)
        s = spatial_stream(np.sort(rng.uniform(0, T, n)), rng.integers(0, C, n), T, cells)
        shp_fit(s, hyper, cells)  # warm-up
        sizes.append(C)
        cost.append(min(shp_fit(s, hyper, cells).seconds_per_epoch() for _ in range(3)))
    C, y = np.array(sizes, float), np.array(cost)
    A = np.vstack([C, np.ones_like(C)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    r2 = 1 - float(res[0]) / float(np.sum((y - y.mean()) ** 2))
    assert coef[0] > 0 and r2 > 0.98
    assert 2.0 <= y[3] / y[2] <= 8.0
