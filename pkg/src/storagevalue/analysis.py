"""Storage value functions read off cost-vs-capacity curves.

Cost saving ``CS(beta|alpha) = C_alpha(beta) - C_alpha(anchor)`` is non-positive
by construction; ``anchor`` is 0 unless the curve starts later because the
RPS target or the reserve makes small capacities infeasible.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dispatch import DispatchModel
from .lp import InfeasibleError
from .parametric import CurveError, PiecewiseLinearCurve, build_curve, evaluate
from .timeseries_io import ScenarioData

KINDS = ("cost_saving", "loc_rps", "loc_rl")


class AnalysisError(ValueError):
    pass


@dataclass
class ValueReport:
    kind: str
    grid: np.ndarray
    values: np.ndarray
    percentile_bands: Optional[dict] = None
    anchors: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in KINDS:
            raise AnalysisError(f"unknown report kind {self.kind!r}")
        if self.grid.shape != self.values.shape:
            raise AnalysisError("grid and values must have equal length")
        if np.any(np.diff(self.grid) < 0):
            raise AnalysisError("grid must be ascending")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "grid": self.grid.tolist(), "values": self.values.tolist()}
        if self.percentile_bands is not None:
            out["percentile_bands"] = {f"{k:g}": np.asarray(v).tolist() for k, v in self.percentile_bands.items()}
        if self.anchors:
            out["anchors"] = self.anchors
        if self.excluded:
            out["excluded"] = self.excluded
        out.update(self.meta)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self, path_or_buf, fmt=lambda v: f"{v:.9g}", magnitude: bool = False) -> None:
        sign = -1.0 if magnitude else 1.0
        close = False
        if isinstance(path_or_buf, str) or hasattr(path_or_buf, "__fspath__"):
            path_or_buf = open(path_or_buf, "w", newline="")
            close = True
        try:
            writer = csv.writer(path_or_buf, lineterminator="\n")
            abscissa = {"cost_saving": "beta_mwh", "loc_rps": "alpha", "loc_rl": "delta_mwh"}[self.kind]
            if self.percentile_bands:
                keys = sorted(self.percentile_bands)
                writer.writerow([abscissa] + [f"p{k:g}" for k in keys])
                for i, g in enumerate(self.grid):
                    writer.writerow([fmt(g)] + [fmt(sign * self.percentile_bands[k][i] + 0.0) for k in keys])
            else:
                writer.writerow([abscissa, self.kind])
                for g, v in zip(self.grid, self.values):
                    writer.writerow([fmt(g), fmt(sign * v + 0.0)])
        finally:
            if close:
                path_or_buf.close()


def saving_anchor(curve: PiecewiseLinearCurve) -> float:
    """Capacity that cost savings are measured from: 0 if covered, else the curve's start."""
    return 0.0 if curve.covers(0.0) else curve.interval[0]


def cost_saving(curve: PiecewiseLinearCurve, beta: float) -> float:
    if not curve.covers(beta):
        lo, hi = curve.interval
        raise AnalysisError(f"beta={beta:.9g} outside curve coverage [{lo:.9g}, {hi:.9g}]")
    anchor = saving_anchor(curve)
    if beta < anchor:
        raise AnalysisError(f"beta={beta:.9g} below the saving anchor {anchor:.9g}")
    return evaluate(curve, beta) - evaluate(curve, anchor)


def loc_rps(curve_0: PiecewiseLinearCurve, curve_alpha: PiecewiseLinearCurve, beta: float) -> float:
    """Saving lost to the RPS target: ``CS(beta|0) - CS(beta|alpha)``."""
    return cost_saving(curve_0, beta) - cost_saving(curve_alpha, beta)


def loc_rl(curve: PiecewiseLinearCurve, beta: float, delta: float) -> float:
    """Cost of withholding ``delta`` for risk limiting: ``C(beta - delta) - C(beta)``.

    ``curve`` must have been built without a reserve.
    """
    if curve.delta != 0.0:
        raise AnalysisError("loc_rl needs a curve built with delta = 0")
    if delta < 0:
        raise AnalysisError("delta must be non-negative")
    if delta > beta:
        raise AnalysisError("delta exceeds capacity")
    if not (curve.covers(beta) and curve.covers(beta - delta)):
        raise AnalysisError("curve does not cover beta - delta and beta")
    return evaluate(curve, beta - delta) - evaluate(curve, beta)


def invert_capacity(curve: PiecewiseLinearCurve, budget: float, rtol: float = 1e-9) -> float:
    """Smallest covered capacity whose minimal cost does not exceed ``budget``.

    Costs within ``rtol * max(1, |budget|)`` of the budget count as meeting
    it, so a flat tail whose LP values differ in the last bit still starts
    its level set at the first breakpoint.
    """
    b, v = curve.betas, curve.values
    tol = rtol * max(1.0, abs(budget))
    if budget < v.min() - tol:
        raise AnalysisError(f"budget infeasible: {budget:.9g} below curve minimum {v.min():.9g}")
    i = int(np.argmax(v <= budget + tol))
    if i == 0 or v[i] >= budget - tol:
        return float(b[i])
    # v[i-1] > budget > v[i] on a strictly decreasing segment
    beta = b[i - 1] + (budget - v[i - 1]) / curve.slopes[i - 1]
    return float(min(max(beta, b[i - 1]), b[i]))


def lower_percentile(values: np.ndarray, q: float, axis: int = 0) -> np.ndarray:
    """Lower-nearest order statistic: smallest value with empirical CDF >= q/100."""
    return np.percentile(values, q, axis=axis, method="inverted_cdf")


def _scenario_cs(scenario: ScenarioData, alpha: float, delta: float, grid: np.ndarray, rps_mode: str):
    model = DispatchModel(scenario, alpha, delta, rps_mode)
    lo = max(model.min_feasible_capacity(), delta)
    if lo > grid[0] + 1e-9:
        raise InfeasibleError(f"infeasible below beta={lo:.9g}")
    curve = build_curve(model, float(grid[-1]), lo=lo)
    return np.array([cost_saving(curve, g) for g in grid]), saving_anchor(curve)


def percentile_bands(
    scenarios: Sequence[ScenarioData],
    alpha: float,
    delta: float,
    beta_grid,
    percentiles: Sequence[float],
    rps_mode: str = "floor",
) -> ValueReport:
    """Cost-saving curves per scenario and their lower-nearest percentiles per grid point.

    Scenarios that are infeasible anywhere on the grid are dropped with a
    warning and listed in ``report.excluded``. ``report.values`` holds the
    mean saving across retained scenarios.
    """
    if not scenarios:
        raise AnalysisError("no scenarios")
    grid = np.asarray(sorted(float(g) for g in beta_grid))
    if grid.size < 2 or grid[0] < delta:
        raise AnalysisError("beta grid needs at least two points, all >= delta")
    for q in percentiles:
        if not 0 < q < 100:
            raise AnalysisError(f"percentile {q} outside (0, 100)")

    rows, anchors, excluded = [], [], []
    for k, scen in enumerate(scenarios):
        try:
            cs, anchor = _scenario_cs(scen, alpha, delta, grid, rps_mode)
        except (InfeasibleError, CurveError) as exc:
            excluded.append({"scenario": k, "reason": str(exc)})
            continue
        rows.append(cs)
        anchors.append(anchor)
    if excluded:
        warnings.warn(f"{len(excluded)} of {len(scenarios)} scenarios excluded as infeasible on the grid")
    if not rows:
        raise AnalysisError("every scenario is infeasible on the grid")
    mat = np.vstack(rows)
    bands = {float(q): lower_percentile(mat, q) for q in percentiles}
    return ValueReport(
        "cost_saving", grid, mat.mean(axis=0), bands, anchors=anchors, excluded=excluded,
        meta={"alpha": alpha, "delta": delta, "n_scenarios": len(rows)},
    )


def loc_rps_report(curve_0: PiecewiseLinearCurve, curves: dict, beta: float) -> ValueReport:
    """``LOC_RPS(alpha|beta)`` over the alphas keyed in ``curves``."""
    alphas = sorted(curves)
    vals = [loc_rps(curve_0, curves[a], beta) for a in alphas]
    return ValueReport("loc_rps", alphas, vals, meta={"beta": beta})


def loc_rl_report(curve: PiecewiseLinearCurve, beta: float, deltas) -> ValueReport:
    """``LOC_RL(delta|beta)`` over ``deltas``."""
    ds = sorted(float(d) for d in deltas)
    return ValueReport("loc_rl", ds, [loc_rl(curve, beta, d) for d in ds], meta={"beta": beta})
