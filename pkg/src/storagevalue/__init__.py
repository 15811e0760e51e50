"""Value of storage under a renewable portfolio standard."""

from .analysis import (ValueReport, cost_saving, invert_capacity, loc_rl, loc_rps,
                       percentile_bands)
from .dispatch import (DispatchModel, DispatchProblem, DispatchSolution, min_feasible_capacity,
                       solve_dispatch)
from .lp import InfeasibleError, LPError, NumericalError, UnboundedError, solve_lp
from .parametric import PiecewiseLinearCurve, build_curve, evaluate, fbs, verify_curve
from .reserve import (LaplaceParams, ReserveCurve, build_reserve_curve, delta_empirical,
                      delta_laplace, fit_laplace)
from .timeseries_io import (ErrorSampleSet, ScenarioData, SynthConfig, extract_errors,
                            load_scenario, synthesize_scenario, write_scenario)

__version__ = "0.1.0"
