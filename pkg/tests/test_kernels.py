import itertools
import math

import numpy as np
import pytest

from hawkes_npole.kernels import (
    GaussianKernel,
    KernelExpansion,
    LaplacianKernel,
    PolynomialKernel,
    expansion_eval,
    expansion_from_csv,
    expansion_to_csv,
    gram,
    kernel_eval,
    rkhs_distance,
    rkhs_norm_sq,
    snap_center,
    truncate_budget,
)

KERNELS = [GaussianKernel(0.2), GaussianKernel(1.5), LaplacianKernel(0.3), PolynomialKernel(2, 1.0, 1.0), PolynomialKernel(1, 0.5, 2.0)]


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: type(k).__name__)
def test_gram_psd_on_random_sets(k):
    rng = np.random.default_rng(3)
    for _ in range(100):
        xs = rng.uniform(-1 if isinstance(k, PolynomialKernel) else 0, 3, size=rng.integers(1, 21))
        G = gram(k, xs)
        assert np.allclose(G, G.T, atol=0, rtol=1e-15)
        scale = max(1.0, float(np.max(np.abs(np.diag(G)))))
        assert np.linalg.eigvalsh(G).min() >= -1e-8 * scale


@pytest.mark.parametrize("k", [GaussianKernel(0.2), LaplacianKernel(0.3)])
def test_unit_diagonal(k):
    xs = np.random.default_rng(0).uniform(0, 3, 50)
    assert np.all(np.diag(gram(k, xs)) == 1.0)


def test_kernel_eval_values():
    assert kernel_eval(GaussianKernel(0.2), 0.7, 0.7) == 1.0
    assert kernel_eval(GaussianKernel(0.2), 0.0, 0.2) == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert kernel_eval(PolynomialKernel(1, 1.0, 1.0), 1.0, 2.0) == pytest.approx(9.0)


def test_expansion_eval_examples():
    k = GaussianKernel(0.2)
    assert expansion_eval(KernelExpansion(k), 1.3) == 0.0
    f = KernelExpansion(k, [0.1, 0.3], [1.0, -0.5])
    assert f(0.1) == pytest.approx(1 - 0.5 * math.exp(-0.5), abs=1e-12)
    assert KernelExpansion(k, [0.42], [2.5])(0.42) == pytest.approx(2.5)


def test_rkhs_norm_examples():
    k = GaussianKernel(0.2)
    assert rkhs_norm_sq(KernelExpansion(k)) == 0.0
    assert rkhs_norm_sq(KernelExpansion(k, [1.0], [2.0])) == pytest.approx(4.0)
    f = KernelExpansion(k, [0.1, 0.3], [1.0, -0.5])
    assert rkhs_norm_sq(f) == pytest.approx(1.25 - math.exp(-0.5), abs=1e-12)


def test_reproducing_property():
    rng = np.random.default_rng(1)
    k = GaussianKernel(0.2)
    c = rng.uniform(0, 3, 12)
    a = rng.normal(size=12)
    f = KernelExpansion(k, c, a)
    G = f.gram()
    for s in range(12):
        assert f(c[s]) == pytest.approx(float(G[s] @ a), abs=1e-10)


def test_norm_of_difference_nonnegative():
    rng = np.random.default_rng(2)
    k = GaussianKernel(0.2)
    c = rng.uniform(0, 3, 15)
    for _ in range(50):
        f = KernelExpansion(k, c, rng.normal(size=15))
        g = KernelExpansion(k, c, rng.normal(size=15))
        assert rkhs_norm_sq(f - g) >= 0


def test_truncate_budget_examples():
    k = GaussianKernel(0.2)
    f = KernelExpansion(k, [0.1, 0.3], [1.0, 2.0], budget=3)
    out, dist = truncate_budget(f)
    assert np.array_equal(out.centers, f.centers) and np.array_equal(out.coefs, f.coefs) and dist == 0
    out, _ = truncate_budget(KernelExpansion(k, [0.1, 0.3], [1.0, 1e-9], budget=1))
    assert out.centers.tolist() == [0.1]
    f = KernelExpansion(k, [0.0, 1.0, 2.0], [1.0, 0.5, 0.01], budget=2)
    out, dist = truncate_budget(f)
    # oracle: best RKHS distance over every choice of dropped center
    best = min(
        rkhs_distance(f, KernelExpansion(k, f.centers[list(keep)], f.coefs[list(keep)]))
        for keep in itertools.combinations(range(3), 2)
    )
    assert out.centers.tolist() == [0.0, 1.0]
    assert dist == pytest.approx(best, rel=1e-12)
    assert dist == pytest.approx(0.01, rel=1e-3)


def test_truncate_budget_idempotent():
    rng = np.random.default_rng(4)
    k = GaussianKernel(0.2)
    for _ in range(20):
        f = KernelExpansion(k, rng.uniform(0, 3, 10), rng.normal(size=10), budget=4)
        once, _ = truncate_budget(f)
        twice, d = truncate_budget(once)
        assert np.array_equal(once.centers, twice.centers) and np.array_equal(once.coefs, twice.coefs) and d == 0


def test_snap_center():
    assert snap_center(0.263, 0.02) == pytest.approx(0.26)
    assert snap_center(0.0, 0.02) == 0.0
    assert snap_center(1.999, 0.02) == pytest.approx(2.0)


def test_expansion_csv_round_trip():
    f = KernelExpansion(GaussianKernel(0.2), [0.1, 0.5, 2.0], [1.0, -0.25, 3e-7], budget=10, window=3.0)
    g = expansion_from_csv(expansion_to_csv(f))
    assert np.array_equal(g.centers, f.centers) and np.array_equal(g.coefs, f.coefs)
    assert g.budget == 10 and g.window == 3.0
