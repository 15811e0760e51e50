import io
import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_dispatch
from storagevalue.analysis import (
    AnalysisError,
    ValueReport,
    cost_saving,
    invert_capacity,
    loc_rl,
    loc_rl_report,
    loc_rps,
    loc_rps_report,
    lower_percentile,
    percentile_bands,
    saving_anchor,
)
from storagevalue.dispatch import DispatchModel
from storagevalue.parametric import PiecewiseLinearCurve, build_curve, fbs
from storagevalue.timeseries_io import ScenarioData, SynthConfig, synthesize_scenario

HAND = PiecewiseLinearCurve.from_points([(0, 6), (1, 5), (2, 5)])


def test_cost_saving_examples():
    assert cost_saving(HAND, 1) == -1
    assert cost_saving(HAND, 0) == 0
    assert cost_saving(HAND, 2) == -1
    with pytest.raises(AnalysisError, match="outside"):
        cost_saving(HAND, 2.5)


def test_anchor_moves_to_feasible_start(storage_only_rps):
    curve = build_curve(DispatchModel(storage_only_rps, 1.0), 3.0)
    assert saving_anchor(curve) == pytest.approx(1.0)
    assert cost_saving(curve, curve.interval[0]) == 0.0
    with pytest.raises(AnalysisError):
        cost_saving(curve, 0.5)


def test_loc_rl_examples():
    assert loc_rl(HAND, 2, 1) == 0
    assert loc_rl(HAND, 1, 1) == 1
    assert loc_rl(HAND, 1.5, 0) == 0
    with pytest.raises(AnalysisError, match="delta exceeds capacity"):
        loc_rl(HAND, 1, 1.5)
    reserved = PiecewiseLinearCurve.from_points([(1, 6), (2, 5)], delta=1.0)
    with pytest.raises(AnalysisError):
        loc_rl(reserved, 2, 0.5)


def test_invert_examples():
    assert invert_capacity(HAND, 5) == 1
    assert invert_capacity(HAND, 6) == 0
    assert invert_capacity(HAND, 5.5) == pytest.approx(0.5)
    with pytest.raises(AnalysisError, match="budget infeasible"):
        invert_capacity(HAND, 4)


def test_invert_tolerates_last_bit_noise_on_flat_tail():
    v = -4727.025508262868
    curve = PiecewiseLinearCurve.from_points([(0, -4000), (460.3, v), (600, np.nextafter(v, -np.inf))])
    assert invert_capacity(curve, curve.values[-1]) == 460.3
    assert invert_capacity(curve, curve.values[-1], rtol=0.0) == 600


def test_loc_rps_identity():
    assert loc_rps(HAND, HAND, 1.3) == 0


def _curves(s, alphas, hi):
    return {a: build_curve(DispatchModel(s, a), hi, lo=0.0) for a in alphas}


def test_loc_rps_zero_when_renewable_already_used():
    s = ScenarioData(price=[1, 2], demand_forecast=[1, 1], renewable_forecast=[1, 0])
    c = _curves(s, (0.0, 0.5), 2.0)
    assert cost_saving(c[0.0], 1) == pytest.approx(-1, abs=1e-9)
    assert cost_saving(c[0.5], 1) == pytest.approx(-1, abs=1e-9)
    assert loc_rps(c[0.0], c[0.5], 1) == pytest.approx(0, abs=1e-9)
    for a, alpha in ((0.0, 0.0), (0.5, 0.5)):
        for beta in (0.0, 1.0):
            want = brute_force_dispatch([1, 2], [1, 1], [1, 0], alpha, beta, 0.5)
            assert c[a](beta) == pytest.approx(want, abs=1e-9)


def test_loc_rps_positive_instance():
    # storage can absorb the cheap-period surplus only if the RPS target does
    # not already force the renewable through it
    p, d, r = [4, 0, -2], [1, 1, 1], [2, 0, 1]
    s = ScenarioData(price=p, demand_forecast=d, renewable_forecast=r)
    c = _curves(s, (0.0, 0.5), 2.0)
    for alpha in (0.0, 0.5):
        for beta in (0.0, 1.0):
            want = brute_force_dispatch(p, d, r, alpha, beta, 0.5)
            assert c[alpha](beta) == pytest.approx(want, abs=1e-9)
    assert loc_rps(c[0.0], c[0.5], 1.0) == pytest.approx(1.0, abs=1e-9)
    report = loc_rps_report(c[0.0], {0.5: c[0.5]}, 1.0)
    assert report.values.tolist() == pytest.approx([1.0])


def test_lower_percentile_convention():
    vals = np.array([[-1.0], [-3.0]])
    assert lower_percentile(vals, 50)[0] == -3
    assert lower_percentile(np.array([[1.0], [2.0], [3.0], [4.0]]), 75)[0] == 3


def test_percentile_bands_single_scenario(three_period):
    grid = [0.0, 0.5, 1.0, 2.0]
    report = percentile_bands([three_period], 0.0, 0.0, grid, [10, 50, 90])
    for band in report.percentile_bands.values():
        np.testing.assert_allclose(band, [0, -0.5, -1, -1], atol=1e-9)
    np.testing.assert_allclose(report.values, [0, -0.5, -1, -1], atol=1e-9)


def test_percentile_bands_median_is_lower(three_period):
    deeper = ScenarioData(price=[5, 1, 4], demand_forecast=[1, 1, 1], renewable_forecast=[0, 0, 0])
    report = percentile_bands([three_period, deeper], 0.0, 0.0, [0.0, 1.0], [50])
    # savings at beta=1 are -1 and -3
    assert report.percentile_bands[50.0][1] == pytest.approx(-3, abs=1e-9)


def test_percentile_bands_excludes_infeasible(storage_only_rps):
    green = ScenarioData(price=[1, 1], demand_forecast=[1, 1], renewable_forecast=[1, 1])
    with pytest.warns(UserWarning, match="excluded"):
        report = percentile_bands([green, storage_only_rps], 1.0, 0.0, [0.0, 1.0], [50])
    # full RPS coverage needs one unit of storage in the second scenario
    assert [e["scenario"] for e in report.excluded] == [1]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(AnalysisError, match="every scenario"):
            percentile_bands([storage_only_rps], 1.0, 0.0, [0.0, 1.0], [50])


def test_percentile_bands_validation(three_period):
    with pytest.raises(AnalysisError):
        percentile_bands([], 0, 0, [0, 1], [50])
    with pytest.raises(AnalysisError):
        percentile_bands([three_period], 0, 0, [0, 1], [100])
    with pytest.raises(AnalysisError):
        percentile_bands([three_period], 0, 1.0, [0, 2], [50])


def test_report_serialisation(three_period):
    report = percentile_bands([three_period], 0.0, 0.0, [0.0, 1.0], [50])
    buf = io.StringIO()
    report.to_csv(buf)
    assert buf.getvalue().splitlines() == ["beta_mwh,p50", "0,0", "1,-1"]
    buf = io.StringIO()
    report.to_csv(buf, magnitude=True)
    assert buf.getvalue().splitlines()[-1] == "1,1"
    data = json.loads(report.to_json())
    assert data["kind"] == "cost_saving" and data["percentile_bands"]["50"] == [0.0, -1.0]
    plain = loc_rl_report(HAND, 2.0, [1.0, 0.0])
    buf = io.StringIO()
    plain.to_csv(buf)
    assert buf.getvalue().splitlines() == ["delta_mwh,loc_rl", "0,0", "1,0"]


def test_report_validation():
    with pytest.raises(AnalysisError):
        ValueReport("cost_saving", [0, 1], [0])
    with pytest.raises(AnalysisError):
        ValueReport("cost_saving", [1, 0], [0, 0])
    with pytest.raises(AnalysisError):
        ValueReport("surplus", [0], [0])


def _synthetic_curve(seed, alpha_frac=0.0, T=24, hi=250.0):
    s = synthesize_scenario(seed, T, SynthConfig(negative_price_prob=0.1))
    top = min(1.0, s.renewable_forecast.sum() / s.demand_forecast.sum())
    m = DispatchModel(s, 0.7 * top * alpha_frac)
    return build_curve(m, hi), m


@pytest.mark.parametrize("seed", range(6))
def test_cost_saving_properties(seed):
    curve, _ = _synthetic_curve(seed, alpha_frac=(seed % 3) / 2)
    lo, hi = curve.interval
    grid = np.linspace(lo, hi, 40)
    cs = np.array([cost_saving(curve, b) for b in grid])
    assert np.all(cs <= 1e-9)
    assert np.all(np.diff(cs) <= 1e-9)
    assert np.all(np.diff(cs, 2) >= -1e-7 * max(1, np.abs(cs).max()))


@pytest.mark.parametrize("seed", range(6))
def test_loc_rl_shape(seed):
    curve, _ = _synthetic_curve(seed)
    beta = curve.interval[1]
    deltas = np.linspace(0, beta, 41)
    v = loc_rl_report(curve, beta, deltas).values
    assert v[0] == 0 and np.all(v >= -1e-9)
    assert np.all(np.diff(v) >= -1e-9)
    # delta -> C(beta - delta) mirrors a convex function, so it is convex too
    assert np.all(np.diff(v, 2) >= -1e-7 * max(1, np.abs(v).max()))


@pytest.mark.parametrize("seed", range(6))
def test_double_optimality(seed):
    curve, m = _synthetic_curve(seed)
    for i, (b, v) in enumerate(curve.breakpoints):
        beta = invert_capacity(curve, v)
        assert beta <= b + 1e-12
        assert curve(beta) <= v + 1e-9
        # every breakpoint past the first starts its level set unless the previous segment is flat
        if i > 0 and curve.slopes[i - 1] < 0:
            assert beta == pytest.approx(b, abs=1e-12)
    # the inverted capacity is confirmed by a fresh solve
    budget = 0.5 * (curve.values[0] + curve.values[-1])
    beta = invert_capacity(curve, budget)
    assert m.solve(beta).objective == pytest.approx(budget, abs=1e-6 * max(1, abs(budget)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 5000), st.integers(0, 100).map(lambda i: i / 100))
def test_rps_dominance_in_floor_mode(seed, frac):
    s = synthesize_scenario(seed, 12, SynthConfig(negative_price_prob=0.1))
    top = min(1.0, s.renewable_forecast.sum() / s.demand_forecast.sum())
    a1, a2 = 0.0, 0.8 * top * frac
    m1, m2 = DispatchModel(s, a1), DispatchModel(s, a2)
    lo = max(m1.min_feasible_capacity(), m2.min_feasible_capacity())
    for beta in np.linspace(lo, lo + 150, 5):
        assert m1.solve(beta).objective <= m2.solve(beta).objective + 1e-7


def test_fbs_based_cs_matches_reference(three_period):
    curve = fbs(DispatchModel(three_period, 0.0), 0.0, 2.0)
    assert cost_saving(curve, 1.0) == pytest.approx(-1, abs=1e-9)
    assert loc_rl(curve, 1.0, 1.0) == pytest.approx(1, abs=1e-9)
    assert invert_capacity(curve, 5.0) == pytest.approx(1, abs=1e-9)
