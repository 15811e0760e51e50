import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_value_curve
from storagevalue.dispatch import DispatchModel
from storagevalue.parametric import (
    CurveError,
    PiecewiseLinearCurve,
    build_curve,
    evaluate,
    fbs,
    verify_curve,
)
from storagevalue.timeseries_io import ScenarioData, SynthConfig, synthesize_scenario

HAND = PiecewiseLinearCurve.from_points([(0, 6), (1, 5), (2, 5)])


def check_shape(curve, tol=1e-9):
    """Continuous, piecewise linear, convex and non-increasing."""
    b, v, s = curve.betas, curve.values, curve.slopes
    assert np.all(np.diff(b) > 0)
    assert np.all(s <= tol * np.maximum(1, np.abs(s)))
    assert np.all(np.diff(s) >= -1e-7 * (1 + np.abs(s[:-1])))
    # left and right limits agree at every interior breakpoint
    for i in range(1, len(b) - 1):
        left = v[i - 1] + s[i - 1] * (b[i] - b[i - 1])
        right = v[i]
        assert left == pytest.approx(right, rel=1e-6, abs=1e-6)


def test_evaluate_examples():
    assert HAND(0.5) == 5.5
    assert HAND(1) == 5
    np.testing.assert_array_equal(HAND(np.array([0, 1, 2])), [6, 5, 5])
    with pytest.raises(CurveError, match="outside interval"):
        HAND(3)


def test_curve_validation():
    with pytest.raises(CurveError):
        PiecewiseLinearCurve([0], [1], [])
    with pytest.raises(CurveError):
        PiecewiseLinearCurve([0, 0], [1, 1], [0])
    with pytest.raises(CurveError):
        PiecewiseLinearCurve([0, 1], [1, 1], [0, 0])


def test_fbs_hand_instance(three_period):
    m = DispatchModel(three_period, 0.0)
    curve = fbs(m, 0.0, 2.0)
    assert curve.breakpoints == pytest.approx([(0, 6), (1, 5), (2, 5)], abs=1e-9)
    np.testing.assert_allclose(curve.slopes, [-1, 0], atol=1e-9)
    check_shape(curve)


def test_fbs_flat_interval(three_period):
    curve = fbs(DispatchModel(three_period, 0.0), 1.0, 2.0)
    assert len(curve.betas) == 2
    np.testing.assert_allclose(curve.slopes, [0.0], atol=1e-9)


def test_fbs_first_piece(three_period):
    curve = fbs(DispatchModel(three_period, 0.0), 0.0, 0.5)
    assert len(curve.betas) == 2
    np.testing.assert_allclose(curve.slopes, [-1.0], atol=1e-9)
    assert curve(0.5) == pytest.approx(5.5, abs=1e-9)


def test_hand_curve_matches_dense_resolve(three_period):
    m = DispatchModel(three_period, 0.0)
    curve = fbs(m, 0.0, 2.0)
    grid = np.linspace(0, 2, 41)
    np.testing.assert_allclose(curve(grid), dense_value_curve(m, grid), atol=1e-9)


def test_fbs_rejects_bad_interval(three_period):
    m = DispatchModel(three_period, 0.0, delta=0.5)
    with pytest.raises(CurveError):
        fbs(m, 1.0, 1.0)
    with pytest.raises(CurveError, match="delta"):
        fbs(m, 0.0, 2.0)


def test_build_curve_seeds_at_feasible_start(storage_only_rps):
    m = DispatchModel(storage_only_rps, 1.0)
    curve = build_curve(m, 3.0)
    assert curve.interval[0] == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(CurveError):
        build_curve(m, 0.5)


def test_verify_curve_examples(three_period):
    m = DispatchModel(three_period, 0.0)
    curve = fbs(m, 0.0, 2.0)
    assert verify_curve(curve, m, 200).max_deviation < 1e-6
    assert verify_curve(curve, m, 2).max_deviation == 0.0
    bad = PiecewiseLinearCurve(curve.betas, curve.values, curve.slopes + np.array([0.1, 0.0]))
    assert verify_curve(bad, m, 200).max_deviation > 1e-3
    with pytest.raises(CurveError):
        verify_curve(curve, m, 1)


def test_verify_curve_records_failures(storage_only_rps):
    m = DispatchModel(storage_only_rps, 1.0)
    fake = PiecewiseLinearCurve.from_points([(0, 2), (2, 2)])
    check = verify_curve(fake, m, 5)
    assert [b for b, _ in check.failures] == [0.0, 0.5]
    assert np.isfinite(check.max_deviation)


def test_serialisation(three_period):
    curve = fbs(DispatchModel(three_period, 0.0), 0.0, 2.0)
    data = json.loads(curve.to_json())
    assert data["interval"] == [0.0, 2.0]
    assert len(data["slopes"]) == 2
    back = PiecewiseLinearCurve.from_dict(data)
    np.testing.assert_array_equal(back.betas, curve.betas)
    buf = io.StringIO()
    HAND.to_csv(buf)
    assert buf.getvalue().splitlines() == ["beta_mwh,cost", "0,6", "1,5", "2,5"]


def _synthetic(seed, T=24):
    s = synthesize_scenario(seed, T, SynthConfig(negative_price_prob=0.1))
    top = min(1.0, s.renewable_forecast.sum() / s.demand_forecast.sum())
    return s, 0.6 * top * (seed % 3) / 2


@pytest.mark.parametrize("seed", range(8))
def test_synthetic_curves(seed):
    s, alpha = _synthetic(seed)
    delta = 5.0 * (seed % 2)
    m = DispatchModel(s, alpha, delta)
    curve = build_curve(m, delta + 300.0)
    check_shape(curve)
    assert curve.n_solves <= 2 * len(curve.betas) + 2
    # tangents of a convex function never lie above it
    assert all(g >= -1e-7 for g in curve.tangent_gaps)
    assert verify_curve(curve, m, 60).max_deviation < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1))
def test_midpoint_inequality(seed, u1, u2):
    s, alpha = _synthetic(seed, T=12)
    m = DispatchModel(s, alpha)
    curve = build_curve(m, 200.0)
    lo, hi = curve.interval
    b1, b2 = lo + u1 * (hi - lo), lo + u2 * (hi - lo)
    mid = 0.5 * (b1 + b2)
    assert curve(mid) <= 0.5 * curve(b1) + 0.5 * curve(b2) + 1e-7
    direct = [m.solve(b).objective for b in (b1, b2, mid)]
    assert direct[2] <= 0.5 * direct[0] + 0.5 * direct[1] + 1e-7


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.integers(-10, 60), min_size=2, max_size=6),
    st.lists(st.integers(0, 10), min_size=6, max_size=6),
    st.lists(st.integers(0, 10), min_size=6, max_size=6),
)
def test_curve_shape_on_small_instances(p, d, r):
    T = len(p)
    s = ScenarioData(price=p, demand_forecast=d[:T], renewable_forecast=r[:T])
    m = DispatchModel(s, 0.0)
    curve = fbs(m, 0.0, 20.0)
    check_shape(curve)
    grid = np.linspace(0, 20, 21)
    np.testing.assert_allclose(curve(grid), dense_value_curve(m, grid), atol=1e-6, rtol=1e-6)


def test_depth_cap_is_loud(three_period):
    m = DispatchModel(three_period, 0.0)
    with pytest.raises(CurveError, match="recursion depth"):
        fbs(m, 0.0, 2.0, value_tol=-1.0, max_depth=0)


def test_evaluate_vectorised_matches_scalar():
    grid = np.linspace(0, 2, 9)
    np.testing.assert_array_equal(evaluate(HAND, grid), [evaluate(HAND, g) for g in grid])
