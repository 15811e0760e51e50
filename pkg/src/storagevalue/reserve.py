"""Reserved storage headroom for a risk-limiting requirement.

With demand forecast taken as exact, the reserve ``delta`` covers the
renewable shortfall ``e = r_hat - r`` in a fraction ``Q`` of periods when
``delta >= e``. The smallest such ``delta`` is a quantile of the error law,
taken either from the empirical samples or from a fitted Laplace law.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .timeseries_io import ErrorSampleSet

METHODS = ("empirical", "laplace")


class ReserveError(ValueError):
    pass


@dataclass(frozen=True)
class LaplaceParams:
    location: float
    scale: float
    reference_capacity: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ReserveError("Laplace scale must be positive")


@dataclass
class ReserveCurve:
    method: str
    evaluations: list[tuple[float, float]] = field(default_factory=list)

    @property
    def q(self) -> np.ndarray:
        return np.array([q for q, _ in self.evaluations])

    @property
    def delta(self) -> np.ndarray:
        return np.array([d for _, d in self.evaluations])

    def to_csv(self, path_or_buf, fmt=lambda v: f"{v:.9g}") -> None:
        close = False
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            path_or_buf = open(path_or_buf, "w", newline="")
            close = True
        try:
            writer = csv.writer(path_or_buf, lineterminator="\n")
            writer.writerow(["Q_percent", "delta_mwh", "method"])
            for q, d in self.evaluations:
                writer.writerow([fmt(q), fmt(d), self.method])
        finally:
            if close:
                path_or_buf.close()


def _check_q(Q: float, closed_top: bool) -> None:
    ok = 0 < Q <= 100 if closed_top else 0 < Q < 100
    if not (math.isfinite(Q) and ok):
        rng = "(0, 100]" if closed_top else "(0, 100)"
        raise ReserveError(f"Q={Q} out of range {rng}")


def delta_empirical(errors: ErrorSampleSet, Q: float) -> float:
    """Smallest sample ``v`` with ``#(samples <= v) / n >= Q / 100`` (no interpolation)."""
    _check_q(Q, closed_top=True)
    s = np.sort(errors.samples)
    n = s.size
    # guard against Q*n/100 landing a hair above an integer
    k = math.ceil(Q * n / 100.0 - 1e-9 * max(1.0, Q * n / 100.0))
    k = min(max(k, 1), n)
    return float(s[k - 1]) * errors.scale


def fit_laplace(errors: ErrorSampleSet) -> LaplaceParams:
    """Maximum-likelihood Laplace fit: median location, mean absolute deviation scale."""
    s = errors.samples
    if s.size < 2:
        raise ReserveError("at least two samples are needed to fit a Laplace law")
    mu = float(np.median(s))
    b = float(np.mean(np.abs(s - mu)))
    if b == 0.0:
        raise ReserveError("degenerate scale: all samples identical")
    return LaplaceParams(mu, b, errors.scale)


def delta_laplace(params: LaplaceParams, Q: float) -> float:
    """Closed-form Laplace quantile at ``Q`` percent, in MWh."""
    _check_q(Q, closed_top=False)
    q = Q / 100.0
    if q < 0.5:
        v = params.location + params.scale * math.log(2 * q)
    else:
        v = params.location - params.scale * math.log(2 * (1 - q))
    return v * params.reference_capacity


def build_reserve_curve(errors: ErrorSampleSet, method: str, q_list: Iterable[float]) -> ReserveCurve:
    qs = sorted(float(q) for q in q_list)
    if not qs:
        raise ReserveError("Q list is empty")
    if method == "empirical":
        evals = [(q, delta_empirical(errors, q)) for q in qs]
    elif method == "laplace":
        params = fit_laplace(errors)
        evals = [(q, delta_laplace(params, q)) for q in qs]
    else:
        raise ReserveError(f"unknown method {method!r}; expected one of {METHODS}")
    return ReserveCurve(method, evals)


def reserve_for(errors: ErrorSampleSet, Q: float, method: str = "empirical", clamp: bool = True) -> float:
    """Reserve for a single ``Q``; ``clamp`` floors negative reserves at zero for use in dispatch."""
    delta = build_reserve_curve(errors, method, [Q]).evaluations[0][1]
    return max(delta, 0.0) if clamp else delta
