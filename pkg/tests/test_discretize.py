import math

import numpy as np
import pytest

from hawkes_npole.discretize import (
    DomainError,
    build_grid,
    discretized_nll,
    discretized_nll_model,
    exponential_tails,
    grid_size_bound,
    instantaneous_risk,
    kappa_1,
    prop1_bound,
    tail_fn_exp,
)
from hawkes_npole.harness.experiments import prop1_instances
from hawkes_npole.process import EventStream, exact_nll_exponential, exp_model, random_exponential_model, simulate


def stream(times, T=1.0, p=1):
    return EventStream(np.asarray(times, float), np.zeros(len(times), dtype=np.int64), T, p)


def test_uniform_grid():
    g = build_grid(stream([]), 0.25)
    assert g.epochs[1:].tolist() == [0.25, 0.5, 0.75, 1.0]
    assert g.x.sum() == 0


def test_event_joins_grid():
    g = build_grid(stream([0.3]), 0.25)
    assert g.epochs[1:].tolist() == [0.25, 0.3, 0.5, 0.75, 1.0]
    assert g.x[1:, 0].tolist() == [0, 1, 0, 0, 0]


def test_event_on_tick_appears_once():
    g = build_grid(stream([0.5]), 0.25)
    assert g.epochs[1:].tolist() == [0.25, 0.5, 0.75, 1.0]
    assert g.x[1:, 0].tolist() == [0, 1, 0, 0]


def test_grid_spacing_and_cardinality_fuzz():
    rng = np.random.default_rng(0)
    for _ in range(200):
        T = float(rng.uniform(1, 50))
        n = int(rng.integers(0, 200))
        ts = np.sort(rng.uniform(0, T, n))
        if rng.random() < 0.3:
            ts = np.minimum(np.round(ts, 1), T)  # collisions with ticks
        ts = np.unique(ts)
        s = stream(ts, T)
        d = float(rng.choice([0.01, 0.05, 0.1, 0.33, 1.0]))
        g = build_grid(s, d)
        assert np.all(np.diff(g.epochs) <= d + 1e-12)
        assert np.all(np.diff(g.epochs) > 0)
        assert g.epochs[-1] == T
        assert g.M <= grid_size_bound(s, d) + 1
        # every arrival is an epoch and is counted there
        idx = np.searchsorted(g.epochs, ts)
        assert np.all(g.epochs[idx] == ts)
        assert g.x.sum() == len(ts)


def test_discretized_nll_examples():
    g = build_grid(stream([]), 0.5)
    assert discretized_nll(lambda t: np.ones_like(t), g, 0) == pytest.approx(1.0)
    g = build_grid(stream([0.5]), 0.5)
    assert discretized_nll(lambda t: np.ones_like(t), g, 0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        discretized_nll(lambda t: np.zeros_like(t), g, 0)


def test_instantaneous_risk_examples():
    assert instantaneous_risk(1.0, 0.05, 0, 1.0) == pytest.approx(0.05)
    assert instantaneous_risk(math.e, 0.05, 1, 1.0) == pytest.approx(0.05 * math.e - 1, abs=1e-12)
    assert instantaneous_risk(1.0, 0.05, 0, 1.0, [0.0, 0.0], omega=2.0, zeta=[1.0, 1.0]) == pytest.approx(1.05)


def test_tail_fn_examples():
    assert tail_fn_exp(1.0, 0.0, 0.0) == 1.0
    assert tail_fn_exp(2.5, 0.05, 3.0) == pytest.approx(0.4 * math.exp(-2.5 * 2.95), rel=1e-12)


def test_tail_fn_bounds_riemann_tails():
    rng = np.random.default_rng(1)
    for _ in range(100):
        beta = float(rng.uniform(0.2, 5))
        d = float(rng.uniform(0.01, 1))
        epochs = np.arange(0, 60 / beta + d, d)
        m = int(rng.integers(1, len(epochs)))
        # f = exp(-beta t) is decreasing, so its sup on (t_{k-1}, t_k] is at the left end
        brute = float(np.sum(np.diff(epochs[m - 1 :]) * np.exp(-beta * epochs[m - 1 : -1])))
        assert brute <= tail_fn_exp(beta, d, epochs[m - 1]) + 1e-15


def test_prop1_bound_terms():
    m = exp_model([0.5], [[1.0]], 3.0)
    s = simulate(m, 100.0, 2)
    eps, epsp = exponential_tails(m, 0.05)
    # window longer than the horizon: only the discretization term remains
    b = prop1_bound(s, 1e3, 0.05, 0.5, kappa_1(s), eps, epsp)
    assert b == pytest.approx(0.05 * len(s) * float(epsp(0.0)))
    assert float(eps(10.0)) < 1e-12


def test_prop1_bound_on_random_models():
    rows = prop1_instances(50, seed=1)
    assert len(rows) == 50
    assert all(r["within"] for r in rows)


def test_refinement_reduces_error():
    rng = np.random.default_rng(4)
    for k in range(5):
        m = random_exponential_model(rng, 2)
        s = simulate(m, 100.0, k)
        ex = exact_nll_exponential(m, s, 0)
        errs = [abs(discretized_nll_model(m, s, build_grid(s, d), 0) - ex) for d in (0.4, 0.2, 0.1, 0.05)]
        assert errs[-1] < errs[0]
