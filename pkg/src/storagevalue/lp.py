"""Thin LP kernel over HiGHS (dual simplex) returning basic primal/dual pairs.

Dual values follow the sensitivity convention: each multiplier is the
derivative of the optimal objective with respect to the right-hand side of
its row (or bound). The dual objective is therefore ``sum(rhs * dual)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9

HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": FEASIBILITY_TOL,
    "dual_feasibility_tolerance": OPTIMALITY_TOL,
    "presolve": True,
}


class LPError(RuntimeError):
    """Base class for LP solve failures."""


class InfeasibleError(LPError):
    pass


class UnboundedError(LPError):
    pass


class NumericalError(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    eq_duals: np.ndarray
    ub_duals: np.ndarray
    lower_duals: np.ndarray
    upper_duals: np.ndarray
    dual_objective: float
    primal_residual: float
    status: str = "optimal"

    @property
    def duality_gap(self) -> float:
        """Relative gap ``|primal - dual| / max(1, |primal|)``."""
        return abs(self.objective - self.dual_objective) / max(1.0, abs(self.objective))


def _finite_dot(rhs: np.ndarray, duals: np.ndarray) -> float:
    mask = np.isfinite(rhs)
    return float(np.dot(rhs[mask], duals[mask]))


def solve_lp(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, bounds=None) -> LPResult:
    """Minimise ``c @ x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub`` and variable bounds.

    ``bounds`` is a sequence of ``(lo, hi)`` pairs (``None`` for infinite) or a
    single pair applied to every variable; the default is ``x >= 0``.

    Raises
    ------
    InfeasibleError, UnboundedError, NumericalError
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    if not np.all(np.isfinite(c)):
        raise ValueError("objective coefficients must be finite")
    if bounds is None:
        bounds = (0.0, None)
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
        method="highs-ds", options=HIGHS_OPTIONS,
    )
    if res.status == 2:
        raise InfeasibleError(res.message)
    if res.status == 3:
        raise UnboundedError(res.message)
    if res.status != 0:
        raise NumericalError(res.message)

    x = res.x
    b_eq_arr = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    b_ub_arr = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    eq_duals = np.asarray(res.eqlin.marginals) if b_eq is not None else np.zeros(0)
    ub_duals = np.asarray(res.ineqlin.marginals) if b_ub is not None else np.zeros(0)

    lo, hi = _bounds_arrays(bounds, n)
    lower_duals = np.asarray(res.lower.marginals)
    upper_duals = np.asarray(res.upper.marginals)

    dual_obj = (
        _finite_dot(b_eq_arr, eq_duals)
        + _finite_dot(b_ub_arr, ub_duals)
        + _finite_dot(lo, lower_duals)
        + _finite_dot(hi, upper_duals)
    )

    resid = 0.0
    if A_eq is not None:
        resid = max(resid, float(np.max(np.abs(A_eq @ x - b_eq_arr), initial=0.0)))
    if A_ub is not None:
        resid = max(resid, float(np.max(A_ub @ x - b_ub_arr, initial=0.0)))
    resid = max(resid, float(np.max(lo - x, initial=0.0)), float(np.max(x - hi, initial=0.0)))

    return LPResult(
        x=x, objective=float(res.fun), eq_duals=eq_duals, ub_duals=ub_duals,
        lower_duals=lower_duals, upper_duals=upper_duals,
        dual_objective=dual_obj, primal_residual=resid,
    )


def _bounds_arrays(bounds, n: int) -> tuple[np.ndarray, np.ndarray]:
    if len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        bounds = [bounds] * n
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
    return lo, hi
