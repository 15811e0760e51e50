"""Hourly scenario data: CSV ingestion, validation, forecast errors and synthetic generation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from typing import Mapping, Optional, Sequence

import numpy as np

REQUIRED_COLUMNS = ("price", "demand_forecast", "renewable_forecast")
OPTIONAL_COLUMNS = ("demand_actual", "renewable_actual")
CSV_COLUMNS = ("timestamp",) + REQUIRED_COLUMNS + OPTIONAL_COLUMNS


class ScenarioError(ValueError):
    """Raised when scenario input fails validation."""


def _as_series(name: str, values, nonnegative: bool) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ScenarioError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{name} contains non-finite values")
    if nonnegative and np.any(arr < 0):
        raise ScenarioError(f"{name} contains negative values")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScenarioData:
    """Price, demand and renewable series over a horizon of ``T`` periods.

    Prices may be negative. Demand and renewable series must be non-negative.
    Actuals are optional; planning-only scenarios omit them.
    """

    price: np.ndarray
    demand_forecast: np.ndarray
    renewable_forecast: np.ndarray
    demand_actual: Optional[np.ndarray] = None
    renewable_actual: Optional[np.ndarray] = None
    timestamps: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "price", _as_series("price", self.price, False))
        for name in ("demand_forecast", "renewable_forecast") + OPTIONAL_COLUMNS:
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _as_series(name, value, True))
        T = len(self.price)
        if T == 0:
            raise ScenarioError("scenario must have at least one period")
        for name in REQUIRED_COLUMNS + OPTIONAL_COLUMNS:
            value = getattr(self, name)
            if value is not None and len(value) != T:
                raise ScenarioError(f"inconsistent lengths: {name} has {len(value)} entries, expected {T}")
        if self.timestamps is not None:
            if len(self.timestamps) != T:
                raise ScenarioError("inconsistent lengths: timestamps")
            object.__setattr__(self, "timestamps", tuple(str(s) for s in self.timestamps))

    @property
    def horizon(self) -> int:
        return len(self.price)

    @property
    def has_actuals(self) -> bool:
        return self.renewable_actual is not None


@dataclass(frozen=True)
class ErrorSampleSet:
    """Renewable forecast errors ``forecast - actual``.

    In ``relative`` mode the samples are dimensionless fractions of
    ``reference_capacity`` and reserve quantiles are scaled back to MWh.
    """

    samples: np.ndarray
    mode: str = "absolute"
    reference_capacity: Optional[float] = None

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float).ravel().copy()
        if arr.size == 0:
            raise ScenarioError("error sample set is empty")
        if not np.all(np.isfinite(arr)):
            raise ScenarioError("error samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        if self.mode not in ("absolute", "relative"):
            raise ScenarioError(f"unknown error mode {self.mode!r}")
        if self.mode == "relative":
            if self.reference_capacity is None or not self.reference_capacity > 0:
                raise ScenarioError("relative mode requires a positive reference_capacity")

    @property
    def scale(self) -> float:
        """Factor converting sample units to MWh."""
        return float(self.reference_capacity) if self.mode == "relative" else 1.0


def _parse_timestamp(raw: str):
    try:
        return datetime.fromisoformat(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"unparseable timestamp {raw!r}") from None


def _check_increasing(stamps: Sequence[str]) -> None:
    parsed = [_parse_timestamp(s) for s in stamps]
    kinds = {type(p) for p in parsed}
    if len(kinds) > 1:
        raise ScenarioError("mixed timestamp formats")
    for prev, cur in zip(parsed, parsed[1:]):
        if not cur > prev:
            raise ScenarioError(f"timestamps not strictly increasing at {cur!r}")


def load_scenario(path, column_map: Optional[Mapping[str, str]] = None) -> ScenarioData:
    """Read a scenario CSV.

    ``column_map`` maps canonical names (``price``, ``demand_forecast``, ...)
    to the header names used in the file. A ``timestamp`` column is optional;
    when present it must be strictly increasing.
    """
    names = {c: c for c in CSV_COLUMNS}
    if column_map:
        unknown = set(column_map) - set(CSV_COLUMNS)
        if unknown:
            raise ScenarioError(f"unknown canonical column(s): {sorted(unknown)}")
        names.update(column_map)

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if names[col] not in header:
                raise ScenarioError(f"missing column {names[col]!r}")
        present = [c for c in REQUIRED_COLUMNS + OPTIONAL_COLUMNS if names[c] in header]
        has_ts = names["timestamp"] in header
        data = {c: [] for c in present}
        stamps = []
        for lineno, row in enumerate(reader, start=2):
            for c in present:
                cell = row[names[c]]
                if cell is None:
                    raise ScenarioError(f"inconsistent lengths: row {lineno} is short")
                try:
                    data[c].append(float(cell))
                except ValueError:
                    raise ScenarioError(f"non-numeric cell {cell!r} in column {names[c]!r} at line {lineno}") from None
            if has_ts:
                stamps.append(row[names["timestamp"]])

    if has_ts:
        _check_increasing(stamps)
    return ScenarioData(timestamps=tuple(stamps) if has_ts else None, **data)


def write_scenario(scenario: ScenarioData, path) -> None:
    """Write a scenario with the canonical header to a path or text buffer.

    Floats use ``repr`` so reloads are exact.
    """
    if hasattr(path, "write"):
        _write_rows(scenario, path)
    else:
        with open(path, "w", newline="") as fh:
            _write_rows(scenario, fh)


def _write_rows(scenario: ScenarioData, fh) -> None:
    cols = ["timestamp"] + list(REQUIRED_COLUMNS)
    cols += [c for c in OPTIONAL_COLUMNS if getattr(scenario, c) is not None]
    stamps = scenario.timestamps or tuple(str(t) for t in range(scenario.horizon))
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(cols)
    for t in range(scenario.horizon):
        writer.writerow([stamps[t]] + [repr(float(getattr(scenario, c)[t])) for c in cols[1:]])


def extract_errors(
    scenario: ScenarioData, mode: str = "absolute", reference_capacity: Optional[float] = None
) -> ErrorSampleSet:
    """Renewable forecast errors ``r_hat - r``; demand is treated as perfectly predicted."""
    if scenario.renewable_actual is None:
        raise ScenarioError("renewable actuals absent; cannot extract forecast errors")
    err = scenario.renewable_forecast - scenario.renewable_actual
    if mode == "relative":
        if reference_capacity is None or reference_capacity == 0:
            raise ScenarioError("relative mode requires a non-zero reference_capacity")
        err = err / reference_capacity
    return ErrorSampleSet(err, mode=mode, reference_capacity=reference_capacity)


def concat_errors(sets: Sequence[ErrorSampleSet]) -> ErrorSampleSet:
    """Pool several sample sets that share mode and reference capacity."""
    if not sets:
        raise ScenarioError("nothing to pool")
    modes = {(s.mode, s.reference_capacity) for s in sets}
    if len(modes) != 1:
        raise ScenarioError("cannot pool error sets with different modes or reference capacities")
    first = sets[0]
    return ErrorSampleSet(np.concatenate([s.samples for s in sets]), first.mode, first.reference_capacity)


def load_errors(path, column: str = "error", mode: str = "absolute",
                reference_capacity: Optional[float] = None) -> ErrorSampleSet:
    """Read a single-column CSV of forecast errors.

    A scenario CSV with both ``renewable_forecast`` and ``renewable_actual``
    is accepted too, in which case the errors are extracted from it.
    """
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    if column not in header and {"renewable_forecast", "renewable_actual"} <= set(header):
        return extract_errors(load_scenario(path), mode, reference_capacity)
    if column not in header:
        raise ScenarioError(f"missing column {column!r}")
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                values.append(float(row[column]))
            except (TypeError, ValueError):
                raise ScenarioError(f"non-numeric cell {row[column]!r} at line {lineno}") from None
    return ErrorSampleSet(values, mode=mode, reference_capacity=reference_capacity)


@dataclass
class SynthConfig:
    """Knobs for :func:`synthesize_scenario`. Units are MWh per period and currency/MWh."""

    demand_mean: float = 60.0
    demand_swing: float = 20.0
    demand_noise: float = 3.0
    renewable_capacity: float = 80.0
    renewable_persistence: float = 0.9
    renewable_volatility: float = 0.15
    forecast_error_scale: float = 0.05
    price_base: float = 35.0
    price_slope: float = 0.3
    price_noise: float = 6.0
    negative_price_prob: float = 0.0
    negative_price_low: float = -10.0
    price_low: float = -10.0
    price_high: float = 60.0
    demand_cap: float = 100.0
    periods_per_day: int = 24


def synthesize_scenario(seed: int, T: int, config: Optional[SynthConfig] = None) -> ScenarioData:
    """Generate a deterministic synthetic scenario.

    Demand follows a daily sinusoid with an evening peak. Renewable output is
    a clipped AR(1) capacity factor. Prices rise with net demand, are clipped
    to ``[price_low, price_high]`` and with probability ``negative_price_prob``
    per period drop to a uniform draw in ``[negative_price_low, 0)``.
    Actual renewable output differs from the forecast by Laplace noise scaled
    to ``forecast_error_scale * renewable_capacity``; demand is forecast perfectly.
    """
    if T < 1:
        raise ScenarioError("T must be at least 1")
    cfg = config or SynthConfig()
    rng = np.random.default_rng(seed)

    hour = np.arange(T) % cfg.periods_per_day
    phase = 2 * math.pi * (hour - 13) / cfg.periods_per_day
    demand = cfg.demand_mean + cfg.demand_swing * np.cos(phase - math.pi / 3)
    demand = np.clip(demand + rng.normal(0.0, cfg.demand_noise, T), 0.0, cfg.demand_cap)

    cf = np.empty(T)
    level = rng.uniform(0.1, 0.7)
    for t in range(T):
        level = cfg.renewable_persistence * level + (1 - cfg.renewable_persistence) * 0.4
        level += rng.normal(0.0, cfg.renewable_volatility)
        level = min(max(level, 0.0), 1.0)
        cf[t] = level
    renewable_forecast = cfg.renewable_capacity * cf

    err = rng.laplace(0.0, cfg.forecast_error_scale * cfg.renewable_capacity, T)
    renewable_actual = np.clip(renewable_forecast - err, 0.0, cfg.renewable_capacity)

    net = demand - renewable_forecast
    price = cfg.price_base + cfg.price_slope * net + rng.normal(0.0, cfg.price_noise, T)
    price = np.clip(price, cfg.price_low, cfg.price_high)
    if cfg.negative_price_prob > 0:
        neg = rng.random(T) < cfg.negative_price_prob
        price[neg] = rng.uniform(cfg.negative_price_low, 0.0, int(neg.sum()))

    return ScenarioData(
        price=price,
        demand_forecast=demand,
        renewable_forecast=renewable_forecast,
        demand_actual=demand.copy(),
        renewable_actual=renewable_actual,
        timestamps=tuple(str(t) for t in range(T)),
    )


def split_days(scenario: ScenarioData, periods_per_day: int = 24) -> list[ScenarioData]:
    """Cut a long scenario into consecutive day-long scenarios, dropping a partial tail."""
    out = []
    for start in range(0, scenario.horizon - periods_per_day + 1, periods_per_day):
        sl = slice(start, start + periods_per_day)
        kw = {}
        for name in REQUIRED_COLUMNS + OPTIONAL_COLUMNS:
            value = getattr(scenario, name)
            kw[name] = None if value is None else value[sl]
        if scenario.timestamps is not None:
            kw["timestamps"] = scenario.timestamps[sl]
        out.append(ScenarioData(**kw))
    return out
