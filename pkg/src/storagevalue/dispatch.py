"""Minimal-cost storage dispatch under an RPS target with reserved headroom.

Per period ``t`` the operator buys ``g`` from the grid, charges ``a`` from the
grid, discharges ``b``, and routes renewable output to demand (``r_d``) or to
storage (``r_s``); the rest is curtailed. State of charge evolves as
``x_t = x_{t-1} + a_t + r_s_t - b_t`` with ``x_0 = x_T = 0`` and is capped by
``beta - delta``. Cost is ``sum(p_t * (g_t + a_t))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .lp import InfeasibleError, LPResult, solve_lp
from .timeseries_io import ScenarioData

RPS_MODES = ("floor", "equality")


class DispatchError(ValueError):
    """Invalid dispatch problem parameters."""


class StructurallyInfeasible(InfeasibleError):
    """No storage capacity makes the RPS target reachable."""


@dataclass(frozen=True)
class DispatchProblem:
    scenario: ScenarioData
    alpha: float
    beta: float
    delta: float = 0.0
    rps_mode: str = "floor"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DispatchError("alpha must lie in [0, 1]")
        if not self.beta >= 0.0:
            raise DispatchError("beta must be non-negative")
        if not self.delta >= 0.0:
            raise DispatchError("delta must be non-negative")
        if self.delta > self.beta:
            raise DispatchError("delta exceeds capacity")
        if self.rps_mode not in RPS_MODES:
            raise DispatchError(f"rps_mode must be one of {RPS_MODES}")


@dataclass
class DispatchSolution:
    g: np.ndarray
    a: np.ndarray
    b: np.ndarray
    r_d: np.ndarray
    r_s: np.ndarray
    x: np.ndarray
    objective: float
    capacity_dual: float
    status: str = "optimal"
    duality_gap: float = field(default=0.0, repr=False)
    primal_residual: float = field(default=0.0, repr=False)

    def to_dict(self) -> dict:
        out = {k: [float(v) for v in getattr(self, k)] for k in ("g", "a", "b", "r_d", "r_s", "x")}
        out.update(objective=self.objective, capacity_dual=self.capacity_dual, status=self.status)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class DispatchModel:
    """Dispatch LP for a fixed scenario, RPS target and reserve.

    The constraint matrices are assembled once; :meth:`solve` only swaps the
    capacity right-hand side, which is what the parametric sweep needs.
    """

    def __init__(self, scenario: ScenarioData, alpha: float, delta: float = 0.0, rps_mode: str = "floor"):
        if not 0.0 <= alpha <= 1.0:
            raise DispatchError("alpha must lie in [0, 1]")
        if not delta >= 0.0:
            raise DispatchError("delta must be non-negative")
        if rps_mode not in RPS_MODES:
            raise DispatchError(f"rps_mode must be one of {RPS_MODES}")
        self.scenario = scenario
        self.alpha = float(alpha)
        self.delta = float(delta)
        self.rps_mode = rps_mode
        self.n_solves = 0
        self._build()

    # variable blocks, each of length T: g, a, b, r_d, r_s, x_1..x_T
    def _idx(self, block: int) -> slice:
        T = self.scenario.horizon
        return slice(block * T, (block + 1) * T)

    def _build(self):
        s = self.scenario
        T = s.horizon
        n = 6 * T
        p = s.price
        d = s.demand_forecast
        rhat = s.renewable_forecast
        I = sparse.identity(T, format="csr")
        Z = sparse.csr_matrix((T, T))
        # x_t - x_{t-1}
        D = sparse.identity(T, format="csr") - sparse.eye(T, k=-1, format="csr")

        self.c = np.concatenate([p, p, np.zeros(4 * T)])

        balance = sparse.hstack([I, Z, I, I, Z, Z])
        soc = sparse.hstack([Z, -I, I, Z, -I, D])
        rps_row = np.zeros(n)
        rps_row[self._idx(3)] = 1.0
        rps_row[self._idx(4)] = 1.0
        required = self.alpha * float(d.sum())

        eq_blocks = [balance, soc]
        b_eq = [d, np.zeros(T)]
        ub_blocks = [sparse.hstack([Z, Z, Z, I, I, Z])]
        b_ub = [rhat]
        if self.rps_mode == "equality":
            eq_blocks.append(sparse.csr_matrix(rps_row))
            b_eq.append([required])
        else:
            ub_blocks.append(sparse.csr_matrix(-rps_row))
            b_ub.append([-required])
        # capacity rows x_t <= beta - delta for t = 1..T-1 (x_T is pinned to 0)
        n_cap = T - 1
        if n_cap:
            cap = sparse.hstack([sparse.csr_matrix((n_cap, 5 * T)), sparse.identity(T, format="csr")[:n_cap]])
            ub_blocks.append(cap)
        self.A_eq = sparse.vstack(eq_blocks, format="csr")
        self.b_eq = np.concatenate([np.asarray(v, dtype=float) for v in b_eq])
        self.A_ub = sparse.vstack(ub_blocks, format="csr")
        self._b_ub_fixed = np.concatenate([np.asarray(v, dtype=float) for v in b_ub])
        self.n_cap = n_cap
        self.bounds = [(0.0, None)] * (6 * T - 1) + [(0.0, 0.0)]
        self.required_renewable = required

    def _b_ub(self, beta: float) -> np.ndarray:
        return np.concatenate([self._b_ub_fixed, np.full(self.n_cap, beta - self.delta)])

    def solve(self, beta: float) -> DispatchSolution:
        """Solve at storage capacity ``beta``.

        Raises :class:`~storagevalue.lp.InfeasibleError` when no dispatch
        meets the RPS target within the usable capacity ``beta - delta``.
        """
        if not beta >= 0.0:
            raise DispatchError("beta must be non-negative")
        if self.delta > beta:
            raise DispatchError("delta exceeds capacity")
        self.n_solves += 1
        try:
            res = solve_lp(self.c, self.A_eq, self.b_eq, self.A_ub, self._b_ub(beta), self.bounds)
        except InfeasibleError as exc:
            raise InfeasibleError(
                f"dispatch infeasible at beta={beta:.9g} (alpha={self.alpha}, delta={self.delta}): {exc}"
            ) from None
        return self._unpack(res)

    def _unpack(self, res: LPResult) -> DispatchSolution:
        v = np.maximum(res.x, 0.0)
        x = np.concatenate([[0.0], v[self._idx(5)]])
        cap_duals = res.ub_duals[len(res.ub_duals) - self.n_cap:] if self.n_cap else np.zeros(0)
        return DispatchSolution(
            g=v[self._idx(0)], a=v[self._idx(1)], b=v[self._idx(2)],
            r_d=v[self._idx(3)], r_s=v[self._idx(4)], x=x,
            objective=res.objective,
            capacity_dual=float(np.sum(cap_duals)),
            duality_gap=res.duality_gap,
            primal_residual=res.primal_residual,
        )

    def min_feasible_capacity(self) -> float:
        """Smallest ``beta`` for which :meth:`solve` is feasible."""
        s = self.scenario
        if self.required_renewable > float(s.renewable_forecast.sum()) * (1 + 1e-12) + 1e-12:
            raise StructurallyInfeasible("structurally infeasible: RPS target exceeds total renewable forecast")
        T = s.horizon
        # extra variable u bounds every x_t; minimise u
        c = np.zeros(6 * T + 1)
        c[-1] = 1.0
        A_eq = sparse.hstack([self.A_eq, sparse.csr_matrix((self.A_eq.shape[0], 1))], format="csr")
        n_fixed = len(self._b_ub_fixed)
        A_fixed = sparse.hstack([self.A_ub[:n_fixed], sparse.csr_matrix((n_fixed, 1))])
        blocks = [A_fixed]
        if self.n_cap:
            blocks.append(sparse.hstack([self.A_ub[n_fixed:], -np.ones((self.n_cap, 1))]))
        A_ub = sparse.vstack(blocks, format="csr")
        b_ub = np.concatenate([self._b_ub_fixed, np.zeros(self.n_cap)])
        try:
            res = solve_lp(c, A_eq, self.b_eq, A_ub, b_ub, self.bounds + [(0.0, None)])
        except InfeasibleError:
            raise StructurallyInfeasible(
                "structurally infeasible: no storage capacity meets the RPS target"
            ) from None
        return self.delta + max(res.objective, 0.0)


def solve_dispatch(problem: DispatchProblem) -> DispatchSolution:
    model = DispatchModel(problem.scenario, problem.alpha, problem.delta, problem.rps_mode)
    return model.solve(problem.beta)


def min_feasible_capacity(scenario: ScenarioData, alpha: float, delta: float = 0.0,
                          rps_mode: str = "floor") -> float:
    """Smallest storage capacity (including the reserve ``delta``) that admits a feasible dispatch."""
    return DispatchModel(scenario, alpha, delta, rps_mode).min_feasible_capacity()
