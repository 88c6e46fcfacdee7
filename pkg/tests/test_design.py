import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chebfd.design import IntervalConfig, choose_parameters, damping_factor, \
    fit_scaling_constants, optimize_degree, predict_effort, quality, search_margin_for
from chebfd.filters import JACKSON, LANCZOS, NONE, FilterPolynomial, eval_scalar
from chebfd.probe import AnalyticDos


def brute_sigma(p, cfg, n=400_001):
    """Dense-grid oracle (slightly optimistic: grids can miss the exact extremum)."""
    x = np.linspace(*cfg.bounds, n)
    v = np.abs(eval_scalar(p, x))
    lo, hi = cfg.target
    s_lo, s_hi = cfg.search
    inner = v[(x >= lo) & (x <= hi)].min()
    outer = v[(x <= s_lo) | (x >= s_hi)].max()
    return outer / inner


@pytest.mark.parametrize("kind", [LANCZOS, JACKSON, NONE])
@pytest.mark.parametrize("center", [0.0, 0.37, -0.8])
def test_damping_factor_matches_dense_grid(kind, center):
    cfg = IntervalConfig.centered(center, 0.02, 0.03)
    p = FilterPolynomial.build(cfg.target, cfg.bounds, 300, kind)
    s = damping_factor(p, cfg)
    ref = brute_sigma(p, cfg)
    # the polished value can only be larger than a grid value, and only slightly
    assert s >= ref * (1 - 1e-12)
    assert s == pytest.approx(ref, rel=1e-3)


def test_interval_config_validation():
    with pytest.raises(ValueError):
        IntervalConfig((0.1, -0.1), 0.1)
    with pytest.raises(ValueError):
        IntervalConfig((-0.1, 0.1), 0.0)
    with pytest.raises(ValueError):
        IntervalConfig((-0.1, 0.95), 0.1)
    cfg = IntervalConfig.centered(0.2, 0.1, 0.05, (-2, 2))
    assert cfg.delta == pytest.approx(0.1)
    assert cfg.half_width == 2
    assert cfg.search == pytest.approx((0.05, 0.35))


def test_quality():
    assert quality(100, 0.1) == pytest.approx(100)
    assert quality(100, 1e-3) == pytest.approx(100 / 3)
    with pytest.raises(ValueError):
        quality(10, 1.0)


@pytest.mark.parametrize("kind,expected,tol", [(LANCZOS, 6251, 0.02), (JACKSON, 7899, 0.02),
                                               (NONE, 1424, 0.05)])
def test_optimal_degree_for_equal_margin(kind, expected, tol):
    res = optimize_degree(IntervalConfig.centered(0.0, 1e-3, 1e-3), kind)
    assert abs(res.N_p_opt - expected) <= tol * expected
    # the reported optimum is the best point of the scanned curve
    assert res.eta_opt == min(e for _, _, e in res.curve)


def test_optimum_is_local_minimum():
    cfg = IntervalConfig.centered(0.1, 5e-3, 5e-3)
    res = optimize_degree(cfg)
    for n in (res.N_p_opt - 1, res.N_p_opt + 1):
        p = FilterPolynomial.build(cfg.target, cfg.bounds, n)
        assert quality(n, damping_factor(p, cfg)) >= res.eta_opt


def test_predicted_iterations_and_effort():
    res = optimize_degree(IntervalConfig.centered(0, 2.5e-3, 2.5e-3), epsilon=1e-12, n_search=200)
    assert res.predicted_iters == math.ceil(-12 / math.log10(res.sigma))
    assert res.predicted_mvms == pytest.approx(res.eta_opt * 200 * 12)


def test_predict_effort_formulas():
    eta_ns, mvm = predict_effort("flat", 100, 200, 400, 2.58)
    assert eta_ns == pytest.approx(2.58 * 400 * 100 * 2)
    assert mvm == pytest.approx(eta_ns * 12)
    eta_ns, _ = predict_effort("linear", 100, 400, 20, 2.58)
    assert eta_ns == pytest.approx(2.58 * 20 * 100 * 2 / 0.5)
    with pytest.raises(ValueError):
        predict_effort("flat", 100, 100, 400, 2.58)
    with pytest.raises(ValueError):
        predict_effort("cubic", 100, 200, 400, 2.58)


def test_search_margin_flat_and_linear():
    flat = AnalyticDos.flat(40000)
    assert search_margin_for(flat, (-2.5e-3, 2.5e-3), 200) == pytest.approx(2.5e-3, rel=1e-5)
    assert search_margin_for(flat, (-2.5e-3, 2.5e-3), 400) == pytest.approx(7.5e-3, rel=1e-5)
    lin = AnalyticDos.linear(40000)
    # count ~ lambda^2: doubling N_S widens the interval by sqrt(2)
    m = search_margin_for(lin, (-0.05, 0.05), 200)
    assert m == pytest.approx(0.05 * (math.sqrt(2) - 1), rel=1e-5)
    with pytest.raises(ValueError):
        search_margin_for(flat, (-2.5e-3, 2.5e-3), 50000)


def test_choose_parameters_checks_counts():
    flat = AnalyticDos.flat(40000)
    with pytest.raises(ValueError):
        choose_parameters(flat, (-2.5e-3, 2.5e-3), 100)
    with pytest.raises(ValueError):
        choose_parameters(flat, (0.1, 0.1 + 1e-6), 10)
    with pytest.warns(UserWarning):
        choose_parameters(flat, (-2.5e-3, 2.5e-3), 110)


def test_choose_parameters_flat_table_row():
    cfg, res, n_t = choose_parameters(AnalyticDos.flat(40000), (-2.5e-3, 2.5e-3), 400)
    assert n_t == pytest.approx(100)
    assert res.N_p_opt == pytest.approx(817, rel=0.02)


def test_scaling_fit_center_row():
    eta0, n0 = fit_scaling_constants(LANCZOS, 0.0)
    assert eta0 == pytest.approx(2.58, rel=0.03)
    assert n0 == pytest.approx(6.23, rel=0.03)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.01, 0.05), st.floats(0.5, 2.0), st.floats(0.2, 5.0),
       st.floats(-3, 3))
def test_damping_factor_is_affine_invariant(center, delta, ratio, scale, shift):
    cfg = IntervalConfig.centered(center, delta, ratio * delta)
    cfg2 = IntervalConfig.centered(scale * center + shift, scale * delta, scale * ratio * delta,
                                   (shift - scale, shift + scale))
    p = FilterPolynomial.build(cfg.target, cfg.bounds, 150)
    p2 = FilterPolynomial.build(cfg2.target, cfg2.bounds, 150)
    assert damping_factor(p2, cfg2) == pytest.approx(damping_factor(p, cfg), rel=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.005, 0.05), st.floats(0.5, 3.0))
def test_wider_margin_needs_lower_degree(delta, ratio):
    a = optimize_degree(IntervalConfig.centered(0, delta, ratio * delta))
    b = optimize_degree(IntervalConfig.centered(0, delta, 2 * ratio * delta))
    assert b.N_p_opt < a.N_p_opt
    assert b.eta_opt < a.eta_opt
