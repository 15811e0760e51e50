"""Exact piecewise-linear cost-vs-capacity curves by tangent intersection.

The minimal dispatch cost as a function of storage capacity is convex,
piecewise linear and non-increasing. Its slope at any capacity is given by
the dual of the capacity rows, so two solves at the ends of an interval give
two supporting lines. Where those lines cross, either the curve touches the
crossing (a kink, done) or it lies above it and the interval is split there.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dispatch import DispatchModel
from .lp import InfeasibleError

SLOPE_TOL = 1e-7
VALUE_TOL = 1e-6
MERGE_TOL = 1e-9


class CurveError(ValueError):
    pass


@dataclass
class PiecewiseLinearCurve:
    """Breakpoints ``(beta, cost)`` with per-segment slopes.

    ``n_solves`` and ``tangent_gaps`` are construction diagnostics: the LP
    count and ``C(z) - c_z`` at every tangent crossing that was probed.
    """

    betas: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    alpha: float = 0.0
    delta: float = 0.0
    rps_mode: str = "floor"
    n_solves: int = 0
    tangent_gaps: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.betas = np.asarray(self.betas, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.slopes = np.asarray(self.slopes, dtype=float)
        if self.betas.size < 2 or self.betas.size != self.values.size:
            raise CurveError("need at least two breakpoints with one value each")
        if self.slopes.size != self.betas.size - 1:
            raise CurveError("need exactly one slope per segment")
        if np.any(np.diff(self.betas) <= 0):
            raise CurveError("breakpoints must be strictly increasing")

    @classmethod
    def from_points(cls, points, **kw) -> "PiecewiseLinearCurve":
        pts = sorted((float(b), float(v)) for b, v in points)
        betas = np.array([p[0] for p in pts])
        values = np.array([p[1] for p in pts])
        return cls(betas, values, np.diff(values) / np.diff(betas), **kw)

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.betas[0]), float(self.betas[-1])

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.betas.tolist(), self.values.tolist()))

    def covers(self, beta: float, tol: float = MERGE_TOL) -> bool:
        lo, hi = self.interval
        return lo - tol <= beta <= hi + tol

    def __call__(self, beta):
        return evaluate(self, beta)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "delta": self.delta,
            "rps_mode": self.rps_mode,
            "interval": list(self.interval),
            "breakpoints": [[b, v] for b, v in self.breakpoints],
            "slopes": self.slopes.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewiseLinearCurve":
        bp = np.asarray(data["breakpoints"], dtype=float)
        return cls(bp[:, 0], bp[:, 1], data["slopes"], alpha=data.get("alpha", 0.0),
                   delta=data.get("delta", 0.0), rps_mode=data.get("rps_mode", "floor"))

    def to_csv(self, path_or_buf, fmt=lambda v: f"{v:.9g}") -> None:
        close = False
        if isinstance(path_or_buf, str) or hasattr(path_or_buf, "__fspath__"):
            path_or_buf = open(path_or_buf, "w", newline="")
            close = True
        try:
            writer = csv.writer(path_or_buf, lineterminator="\n")
            writer.writerow(["beta_mwh", "cost"])
            for b, v in self.breakpoints:
                writer.writerow([fmt(b), fmt(v)])
        finally:
            if close:
                path_or_buf.close()


def evaluate(curve: PiecewiseLinearCurve, beta):
    """Linear interpolation of the curve; exact at breakpoints."""
    b = np.asarray(beta, dtype=float)
    lo, hi = curve.interval
    tol = MERGE_TOL * max(1.0, abs(hi))
    if np.any(b < lo - tol) or np.any(b > hi + tol):
        raise CurveError(f"beta outside interval [{lo:.9g}, {hi:.9g}]")
    b = np.clip(b, lo, hi)
    i = np.clip(np.searchsorted(curve.betas, b, side="right") - 1, 0, len(curve.slopes) - 1)
    out = curve.values[i] + curve.slopes[i] * (b - curve.betas[i])
    return float(out) if out.ndim == 0 else out


def _merge_collinear(betas: list, values: list, slope_tol: float) -> tuple[np.ndarray, np.ndarray]:
    bs, vs = [betas[0]], [values[0]]
    for b, v in zip(betas[1:], values[1:]):
        if b - bs[-1] > MERGE_TOL:
            bs.append(b)
            vs.append(v)
        elif b == betas[-1]:
            bs[-1], vs[-1] = b, v
    i = 1
    while i < len(bs) - 1:
        s_l = (vs[i] - vs[i - 1]) / (bs[i] - bs[i - 1])
        s_r = (vs[i + 1] - vs[i]) / (bs[i + 1] - bs[i])
        if abs(s_r - s_l) <= slope_tol * (1 + abs(s_l)):
            del bs[i], vs[i]
            i = max(i - 1, 1)
        else:
            i += 1
    return np.array(bs), np.array(vs)


def fbs(
    model: DispatchModel,
    lo: float,
    hi: float,
    *,
    slope_tol: float = SLOPE_TOL,
    value_tol: float = VALUE_TOL,
    max_depth: int = 200,
) -> PiecewiseLinearCurve:
    """Build the cost curve of ``model`` on ``[lo, hi]`` from tangent intersections.

    ``lo`` must be a feasible capacity (see
    :meth:`DispatchModel.min_feasible_capacity`). An interval is closed once
    its two end duals agree within ``slope_tol`` (relative), once the tangents
    cross at an end of the interval, or once the curve meets the crossing
    within ``value_tol`` (relative); otherwise it is split at the crossing.
    """
    if not lo < hi:
        raise CurveError("need lo < hi")
    if lo < model.delta:
        raise CurveError("lo is below the reserved capacity delta")
    start = model.n_solves

    def solve(beta):
        sol = model.solve(beta)
        return sol.objective, sol.capacity_dual

    fx, lx = solve(lo)
    fy, ly = solve(hi)
    points = {lo: fx, hi: fy}
    gaps = []
    stack = [(lo, fx, lx, hi, fy, ly, 0)]
    while stack:
        x, fx, lx, y, fy, ly, depth = stack.pop()
        if abs(lx - ly) <= slope_tol * (1 + abs(lx)):
            continue
        z = (fy - fx + lx * x - ly * y) / (lx - ly)
        if not (x + MERGE_TOL < z < y - MERGE_TOL):
            continue
        cz = fx + lx * (z - x)
        fz, lz = solve(z)
        gaps.append(fz - cz)
        points[z] = fz
        if fz - cz <= value_tol * max(1.0, abs(fz)):
            continue
        if depth >= max_depth:
            raise CurveError(f"recursion depth {max_depth} exceeded near beta={z:.9g}; check tolerances")
        stack.append((z, fz, lz, y, fy, ly, depth + 1))
        stack.append((x, fx, lx, z, fz, lz, depth + 1))

    keys = sorted(points)
    betas, values = _merge_collinear(keys, [points[k] for k in keys], slope_tol)
    slopes = np.diff(values) / np.diff(betas)
    return PiecewiseLinearCurve(
        betas, values, slopes, alpha=model.alpha, delta=model.delta, rps_mode=model.rps_mode,
        n_solves=model.n_solves - start, tangent_gaps=gaps,
    )


def build_curve(model: DispatchModel, hi: float, lo: Optional[float] = None, **kw) -> PiecewiseLinearCurve:
    """FBS seeded at ``max(min feasible capacity, delta)`` unless ``lo`` is given."""
    if lo is None:
        lo = max(model.min_feasible_capacity(), model.delta)
    if not hi > lo:
        raise CurveError(f"upper capacity {hi:.9g} does not exceed the feasible start {lo:.9g}")
    return fbs(model, lo, hi, **kw)


@dataclass
class CurveCheck:
    betas: np.ndarray
    lp_values: np.ndarray
    curve_values: np.ndarray
    failures: list = field(default_factory=list)

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.curve_values - self.lp_values) / np.maximum(1.0, np.abs(self.lp_values))

    @property
    def max_deviation(self) -> float:
        d = self.deviations
        d = d[np.isfinite(d)]
        return float(d.max()) if d.size else float("nan")


def verify_curve(curve: PiecewiseLinearCurve, model: DispatchModel, n_samples: int = 200) -> CurveCheck:
    """Re-solve the LP on an even grid over the curve's interval and compare.

    Deviations are relative, ``|curve - lp| / max(1, |lp|)``. Solves that fail
    are recorded in ``failures`` with NaN values rather than raised.
    """
    if n_samples < 2:
        raise CurveError("n_samples must be at least 2")
    lo, hi = curve.interval
    betas = np.linspace(lo, hi, n_samples)
    lp_vals = np.empty(n_samples)
    failures = []
    for i, b in enumerate(betas):
        try:
            lp_vals[i] = model.solve(float(b)).objective
        except InfeasibleError as exc:
            lp_vals[i] = np.nan
            failures.append((float(b), str(exc)))
    return CurveCheck(betas, lp_vals, evaluate(curve, betas), failures)
