import itertools
import math

import cvxpy as cp
import numpy as np
import pytest

from hawkes_npole.discretize import build_grid, kappa_z
from hawkes_npole.kernels import GaussianKernel, KernelExpansion, PolynomialKernel, gram, rkhs_distance, rkhs_norm_sq
from hawkes_npole.metrics import fit_l1
from hawkes_npole.npole import (
    HyperParams,
    StepSchedule,
    estimate_norm_bound,
    f_gradient,
    fit,
    fit_reference,
    gradient_norm_bound,
    mu_step,
    poly_lmi,
    project_grid_clip,
    project_grid_clip_info,
    project_grid_clip_nnls,
    project_poly_sdp,
    regret_trace,
    rho,
)
from hawkes_npole.discretize import DomainError
from hawkes_npole.process import HawkesModel, benchmark_model, exp_model, simulate, zero

H = GaussianKernel(0.2)
GRID31 = np.round(np.linspace(0, 3, 31), 12)


# -- update primitives -------------------------------------------------------------

def test_rho_examples():
    assert rho(0.05, 0, 1.0) == 0.05
    assert rho(0.05, 1, 0.5) == pytest.approx(-1.95)
    assert rho(0.05, 1, 0.01) == pytest.approx(0.05 - 100.0)
    with pytest.raises(DomainError):
        rho(0.05, 1, 0.005, mu_min=0.01)


def test_mu_step_examples():
    assert mu_step(0.05, 0.05, 0.1, 0.0, 0.01) == pytest.approx(0.045)
    assert mu_step(0.05, 10.0, 0.1, 0.0, 0.01) == 0.01
    assert mu_step(0.05, 0.0, 0.1, 0.0, 0.01) == 0.05


def test_f_gradient_examples():
    f = KernelExpansion(H, [0.3, 1.0], [0.5, -0.2])
    g = f_gradient(f, [], 0.7, 0.1)
    assert np.allclose(g.coefs, 0.1 * f.coefs) and np.array_equal(g.centers, f.centers)
    g = f_gradient(KernelExpansion(H), [0.4], 0.05, 0.0)
    assert g.centers.tolist() == [0.4] and g.coefs.tolist() == [0.05]


def test_gradient_norm_bound_by_gramian():
    rng = np.random.default_rng(0)
    delta, mu_min = 0.05, 0.01
    for kappa in (1, 3, 10, 30):
        lags = rng.uniform(0, 3, kappa)
        r = rho(delta, 1, mu_min)
        g = f_gradient(KernelExpansion(H), lags, r, 0.0)
        # brute-force norm of the kernel sum through the explicit Gramian
        norm = math.sqrt(float(np.sum(r * r * gram(H, lags))))
        assert math.sqrt(rkhs_norm_sq(g)) == pytest.approx(norm, rel=1e-10)
        assert norm <= gradient_norm_bound(kappa, delta, mu_min, 1)


def risk_of_coefs(a, centers, lags, mu, dt, x, zeta, square=False):
    G = gram(H, centers)
    vals = gram(H, lags, centers) @ a
    lam = mu + float(np.sum(vals * vals if square else vals))
    return dt * lam - x * math.log(lam) + 0.5 * zeta * float(a @ G @ a)


@pytest.mark.parametrize("square", [False, True], ids=["linear", "square"])
def test_functional_gradient_matches_finite_differences(square):
    rng = np.random.default_rng(1 + square)
    worst = 0.0
    for _ in range(30):
        c = rng.uniform(0, 3, 6)
        a = rng.uniform(0.05, 0.5, 6)
        lags = rng.uniform(0, 3, 4)
        mu, dt, x, zeta = 0.3, 0.05, int(rng.integers(0, 2)), 0.1
        f = KernelExpansion(H, c, a)
        vals = np.atleast_1d(f(lags))
        lam = mu + float(np.sum(vals * vals if square else vals))
        r = rho(dt, x, lam)
        g = f_gradient(f, lags, r, zeta, weights=2 * vals if square else None)
        # coefficient gradient = <functional gradient, K(c_s, .)> = its value at c_s
        analytic = np.atleast_1d(g(c))
        h = 1e-6
        fd = np.array([
            (risk_of_coefs(a + h * e, c, lags, mu, dt, x, zeta, square) - risk_of_coefs(a - h * e, c, lags, mu, dt, x, zeta, square)) / (2 * h)
            for e in np.eye(6)
        ])
        worst = max(worst, float(np.max(np.abs(analytic - fd)) / np.max(np.abs(fd))))
    assert worst <= 1e-5


# -- grid-clip projection ------------------------------------------------------------------

def qp_projection(f, grid, extend):
    """Independent route: the projection QP in coefficient space through cvxpy."""
    centers = np.unique(np.concatenate([f.centers, grid])) if extend else f.centers
    a = np.zeros(len(centers))
    for c, v in zip(f.centers, f.coefs):
        a[np.searchsorted(centers, c)] += v
    K = gram(H, centers) + 1e-12 * np.eye(len(centers))
    A = gram(H, grid, centers)
    b = cp.Variable(len(centers))
    cp.Problem(cp.Minimize(cp.quad_form(b - a, cp.psd_wrap(K))), [A @ b >= 0]).solve(solver="CLARABEL", tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return KernelExpansion(H, centers, b.value)


def test_nonnegative_input_unchanged():
    f = KernelExpansion(H, [0.5, 1.0], [1.0, 0.3])
    out = project_grid_clip(f, GRID31)
    assert np.array_equal(out.coefs, f.coefs)


def test_negative_bump_projects_to_zero():
    f = KernelExpansion(H, [0.5], [-1.0])
    for extend in (False, True):
        out = project_grid_clip(f, GRID31, extend=extend)
        assert np.min(out(GRID31)) >= -1e-6
        assert rkhs_distance(out, qp_projection(f, GRID31, extend)) <= 1e-4
    assert math.sqrt(rkhs_norm_sq(project_grid_clip(f, GRID31))) <= 1e-6


def test_two_center_projection_against_qp():
    f = KernelExpansion(H, [0.3, 0.35], [1.0, -2.0])
    for extend in (False, True):
        out = project_grid_clip(f, GRID31, extend=extend)
        assert rkhs_distance(out, qp_projection(f, GRID31, extend)) <= 1e-4
        assert rkhs_distance(out, project_grid_clip_nnls(f, GRID31, extend=extend)) <= 1e-8


def test_projection_idempotent_and_nonnegative():
    rng = np.random.default_rng(3)
    for n in range(40):
        extend = bool(n % 2)
        f = KernelExpansion(H, rng.uniform(0, 3, 8), rng.normal(size=8))
        info = project_grid_clip_info(f, GRID31, extend=extend)
        assert info.converged
        once = info.expansion
        twice = project_grid_clip(once, GRID31, extend=extend)
        assert np.min(once(GRID31)) >= -1e-8
        assert rkhs_distance(once, twice) <= 1e-8
        # Active-set LCP and the NNLS feature-space route agree
        assert rkhs_distance(once, project_grid_clip_nnls(f, GRID31, extend=extend)) <= 1e-6


# -- polynomial SDP projection ----------------------------------------------------------------

def lmi_ok(f, b):
    return np.linalg.eigvalsh(poly_lmi(f, b)).min() >= -1e-12


def test_poly_sdp_feasible_input_unchanged():
    f = KernelExpansion(PolynomialKernel(1, 1.0, 1.0), [0.1, 0.2], [1.0, 1.0])
    assert lmi_ok(f, f.coefs)
    assert np.array_equal(project_poly_sdp(f).coefs, f.coefs)


def test_poly_sdp_scalar_case():
    f = KernelExpansion(PolynomialKernel(1, 1.0, 1.0), [1.0], [-1.0])
    assert project_poly_sdp(f).coefs[0] == pytest.approx(0.0, abs=1e-6)


def test_poly_sdp_matches_lattice_search():
    rng = np.random.default_rng(4)
    k = PolynomialKernel(1, 1.0, 1.0)
    for _ in range(3):
        f = KernelExpansion(k, rng.uniform(-1, 1, 2), rng.uniform(-1.5, 1.5, 2))
        K = f.gram()
        obj = lambda b: float((b - f.coefs) @ K @ (b - f.coefs))
        best = math.inf
        step = 0.01
        axis = np.arange(-2.5, 2.5 + step / 2, step)
        for b in itertools.product(axis, axis):
            b = np.array(b)
            if lmi_ok(f, b):
                best = min(best, obj(b))
        out = project_poly_sdp(f)
        assert lmi_ok(f, out.coefs) or np.linalg.eigvalsh(poly_lmi(f, out.coefs)).min() >= -1e-7
        assert obj(out.coefs) <= best + 1e-6
        # the lattice optimum is within one lattice cell of the continuous one
        assert best - obj(out.coefs) <= 2 * step * math.sqrt(np.abs(K).sum()) * (1 + math.sqrt(best))


# -- the estimator ---------------------------------------------------------------------------------

def small_stream(T=300.0, seed=0):
    m = exp_model([0.3, 0.2], [[0.5, 0.2], [0.0, 0.4]], 2.0)
    return m, simulate(m, T, seed)


@pytest.mark.parametrize("projection", ["grid_clip", "square"])
def test_engine_matches_reference(projection):
    _, s = small_stream(150.0)
    hyper = HyperParams(delta=0.1, projection=projection, snapshot_stride=200)
    a = fit(s, hyper)
    b = fit_reference(s, hyper)
    # the two runs solve each clip with different QP solvers, so allow accumulated solver round-off
    assert np.max(np.abs(a.loss - b.loss) / np.maximum(1.0, np.abs(b.loss))) <= 1e-8
    assert np.max(np.abs(a.snap_mu - b.snap_mu)) <= 1e-9
    assert np.max(np.abs(a.lattice_values() - b.lattice_values())) <= 1e-8


def test_threads_do_not_change_results():
    _, s = small_stream(200.0)
    hyper = HyperParams(delta=0.1)
    a = fit(s, hyper, threads=1)
    b = fit(s, hyper, threads=2)
    assert np.array_equal(a.snap_coef, b.snap_coef) and np.array_equal(a.loss, b.loss)


def test_iterate_bounds_and_mu_clamp_every_step():
    _, s = small_stream(300.0)
    for zeta in (0.05, 0.5):
        hyper = HyperParams(delta=0.05, zeta=zeta, snapshot_stride=1, mu_min=0.05)
        res = fit(s, hyper, track_norms=True)
        bound = estimate_norm_bound(zeta, kappa_z(s, hyper.z), hyper.delta, hyper.mu_min)
        assert np.all(res.norms <= bound)
        assert np.max(res.norms) > 0
        assert np.all(res.snap_mu >= hyper.mu_min)
        assert len(res.snap_k) == res.grid.M + 1
        assert np.min(res.lam) >= hyper.mu_min * (1 - 1e-9)


def test_grid_clip_estimates_nonnegative_on_lattice():
    _, s = small_stream(300.0)
    res = fit(s, HyperParams(delta=0.05, snapshot_stride=500))
    for snap in range(res.n_snapshots):
        assert np.min(res.lattice_values(snap)) >= -1e-8


def test_square_estimates_nonnegative_everywhere():
    _, s = small_stream(300.0)
    res = fit(s, HyperParams(delta=0.05, projection="square"))
    ts = np.linspace(0, 3, 3001)
    for i in range(2):
        for j in range(2):
            assert np.min(res.estimate(i, j)(ts)) >= 0


def test_poisson_data_recovers_zero_triggering():
    m = HawkesModel(np.array([0.5]), [[zero()]])
    s = simulate(m, 2000.0, 5)
    res = fit(s, HyperParams(delta=0.05))
    assert float(fit_l1(m, res).sum()) < 0.3
    assert abs(res.mu_hat[0] - 0.5) < 0.05


def test_regret_zero_for_frozen_estimator():
    _, s = small_stream(100.0)
    hyper = HyperParams(delta=0.1, step=StepSchedule(0.0, 1e300), mu_init=0.3)
    res = fit(s, hyper)
    ref = HawkesModel(np.array([0.3, 0.3]), [[zero(), zero()], [zero(), zero()]])
    tr = regret_trace(res, ref, s)
    assert np.all(tr.total == 0.0)


def test_export_writes_one_csv_per_pair(tmp_path):
    _, s = small_stream(50.0)
    res = fit(s, HyperParams(delta=0.1))
    paths = res.export(str(tmp_path))
    assert len(paths) == 4
    data = np.loadtxt(paths[0], delimiter=",", skiprows=1)
    assert data.shape == (301, 2) and data[-1, 0] == pytest.approx(3.0)
