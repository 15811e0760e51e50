"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 infeasible model, 4 numerical failure.
Every failure writes one ``error: <category>: <message>`` line to stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from . import analysis, reserve
from .dispatch import DispatchModel, DispatchProblem, solve_dispatch
from .lp import InfeasibleError, LPError
from .parametric import CurveError, build_curve
from .timeseries_io import SynthConfig, load_errors, load_scenario, split_days, synthesize_scenario, write_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4


def fmt(v: float) -> str:
    return f"{v:.9g}"


def _round(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj) -> str:
    return json.dumps(_round(obj), indent=2) + "\n"


def _resolve_delta(args) -> float:
    if args.risk is not None:
        if args.delta is not None:
            raise ValueError("give either --delta or --risk, not both")
        if args.errors is None:
            raise ValueError("--risk needs --errors")
        errs = load_errors(args.errors, mode=args.error_mode, reference_capacity=args.reference_capacity)
        return reserve.reserve_for(errs, args.risk, args.method)
    return 0.0 if args.delta is None else args.delta


def _model(args, delta: Optional[float] = None, alpha: Optional[float] = None) -> DispatchModel:
    scen = load_scenario(args.input)
    return DispatchModel(scen, args.alpha if alpha is None else alpha,
                         _resolve_delta(args) if delta is None else delta, args.rps_mode)


def cmd_synth(args) -> None:
    cfg = SynthConfig(negative_price_prob=args.negative_price_prob)
    scen = synthesize_scenario(args.seed, args.T, cfg)
    buf = io.StringIO()
    write_scenario(scen, buf)
    _emit(buf.getvalue(), args.out)


def cmd_delta(args) -> None:
    errs = load_errors(args.errors, column=args.column, mode=args.error_mode,
                       reference_capacity=args.reference_capacity)
    q_list = args.q_list if args.q_list is not None else ([args.risk] if args.risk is not None else None)
    if not q_list:
        raise ValueError("--q-list or --risk is required")
    curve = reserve.build_reserve_curve(errs, args.method, q_list)
    if args.format == "json":
        _emit(_dump_json({"method": curve.method, "evaluations": curve.evaluations}), args.out)
    else:
        buf = io.StringIO()
        curve.to_csv(buf)
        _emit(buf.getvalue(), args.out)


def cmd_solve(args) -> None:
    scen = load_scenario(args.input)
    if args.beta is None:
        raise ValueError("--beta is required")
    problem = DispatchProblem(scen, args.alpha, args.beta, _resolve_delta(args), args.rps_mode)
    sol = solve_dispatch(problem)
    if args.format == "csv":
        buf = io.StringIO()
        buf.write("t,g,a,b,r_d,r_s,x\n")
        for t in range(scen.horizon):
            row = [sol.g[t], sol.a[t], sol.b[t], sol.r_d[t], sol.r_s[t], sol.x[t + 1]]
            buf.write(",".join([str(t + 1)] + [fmt(v + 0.0) for v in row]) + "\n")
        _emit(buf.getvalue(), args.out)
    else:
        _emit(_dump_json(sol.to_dict()), args.out)


def _curve(args, model: DispatchModel):
    if args.beta_max is None:
        raise ValueError("--beta-max is required")
    return build_curve(model, args.beta_max, lo=args.beta_min)


def cmd_curve(args) -> None:
    curve = _curve(args, _model(args))
    if args.format == "json":
        _emit(_dump_json(curve.to_dict()), args.out)
    else:
        buf = io.StringIO()
        curve.to_csv(buf)
        _emit(buf.getvalue(), args.out)


def cmd_invert(args) -> None:
    if args.budget is None:
        raise ValueError("--budget is required")
    curve = _curve(args, _model(args))
    beta = analysis.invert_capacity(curve, args.budget)
    _emit(fmt(beta) + "\n", args.out)


def _scenarios(args):
    scens = [load_scenario(p) for p in args.input_files]
    if args.split_days:
        scens = [d for s in scens for d in split_days(s, args.split_days)]
    return scens


def cmd_analyze(args) -> None:
    if args.kind == "cost_saving":
        if args.beta_max is None:
            raise ValueError("--beta-max is required")
        lo = args.beta_min if args.beta_min is not None else 0.0
        grid = np.linspace(lo, args.beta_max, args.points)
        delta = _resolve_delta(args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = analysis.percentile_bands(_scenarios(args), args.alpha, delta, grid,
                                               args.percentiles, args.rps_mode)
        for ex in report.excluded:
            print(f"warning: scenario {ex['scenario']} excluded: {ex['reason']}", file=sys.stderr)
    else:
        if args.beta is None:
            raise ValueError("--beta is required")
        scen = load_scenario(args.input_files[0])
        beta_max = args.beta_max if args.beta_max is not None else args.beta
        if args.kind == "loc_rps":
            if not args.alphas:
                raise ValueError("--alphas is required for loc_rps")
            delta = _resolve_delta(args)
            curves = {}
            for a in [0.0] + list(args.alphas):
                model = DispatchModel(scen, a, delta, args.rps_mode)
                curves[a] = build_curve(model, beta_max)
            report = analysis.loc_rps_report(curves[0.0], {a: curves[a] for a in args.alphas}, args.beta)
        else:
            deltas = args.deltas
            if deltas is None:
                if args.q_list is None or args.errors is None:
                    raise ValueError("loc_rl needs --deltas or --q-list with --errors")
                errs = load_errors(args.errors, mode=args.error_mode, reference_capacity=args.reference_capacity)
                rc = reserve.build_reserve_curve(errs, args.method, args.q_list)
                deltas = [max(d, 0.0) for d in rc.delta]
            model = DispatchModel(scen, args.alpha, 0.0, args.rps_mode)
            curve = build_curve(model, beta_max)
            report = analysis.loc_rl_report(curve, args.beta, deltas)
    if args.format == "json":
        _emit(_dump_json(report.to_dict()), args.out)
    else:
        buf = io.StringIO()
        report.to_csv(buf, magnitude=args.magnitude)
        _emit(buf.getvalue(), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storagevalue", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common_out(p, default_format="csv"):
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        p.add_argument("--out", help="output path (default: stdout)")

    def reserve_opts(p):
        p.add_argument("--delta", type=float, help="reserved capacity in MWh")
        p.add_argument("--risk", type=float, help="risk-limiting level Q in percent; needs --errors")
        p.add_argument("--errors", help="forecast-error CSV (column 'error') or scenario CSV with actuals")
        p.add_argument("--method", choices=reserve.METHODS, default="empirical")
        p.add_argument("--error-mode", choices=("absolute", "relative"), default="absolute")
        p.add_argument("--reference-capacity", type=float)

    def dispatch_opts(p):
        p.add_argument("--alpha", type=float, default=0.0, help="RPS target in [0, 1]")
        p.add_argument("--rps-mode", choices=("floor", "equality"), default="floor")

    p = sub.add_parser("synth", help="write a synthetic scenario CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--T", type=int, default=24)
    p.add_argument("--negative-price-prob", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("delta", help="reserve curve from forecast errors")
    p.add_argument("--errors", required=True)
    p.add_argument("--column", default="error")
    p.add_argument("--q-list", type=_floats)
    p.add_argument("--risk", type=float)
    p.add_argument("--method", choices=reserve.METHODS, default="empirical")
    p.add_argument("--error-mode", choices=("absolute", "relative"), default="absolute")
    p.add_argument("--reference-capacity", type=float)
    common_out(p)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("solve", help="solve one dispatch problem")
    p.add_argument("--input", required=True)
    p.add_argument("--beta", type=float)
    dispatch_opts(p)
    reserve_opts(p)
    common_out(p, "json")
    p.set_defaults(func=cmd_solve)

    for name, func, helptext in (("curve", cmd_curve, "cost-vs-capacity curve"),
                                 ("invert", cmd_invert, "minimal capacity for a cost budget")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--input", required=True)
        p.add_argument("--beta-min", type=float, help="default: smallest feasible capacity")
        p.add_argument("--beta-max", type=float)
        dispatch_opts(p)
        reserve_opts(p)
        if name == "invert":
            p.add_argument("--budget", type=float)
            p.add_argument("--out")
        else:
            common_out(p)
        p.set_defaults(func=func)

    p = sub.add_parser("analyze", help="cost saving bands and lost opportunity costs")
    p.add_argument("--input", dest="input_files", nargs="+", required=True)
    p.add_argument("--kind", choices=analysis.KINDS, default="cost_saving")
    p.add_argument("--split-days", type=int, nargs="?", const=24, default=0,
                   help="cut each input into day-long scenarios of this many periods")
    p.add_argument("--beta", type=float, help="capacity for loc_rps / loc_rl")
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--percentiles", type=_floats, default=[10.0, 25.0, 50.0, 75.0, 90.0])
    p.add_argument("--alphas", type=_floats)
    p.add_argument("--deltas", type=_floats)
    p.add_argument("--q-list", type=_floats)
    p.add_argument("--magnitude", action="store_true", help="report savings as positive numbers")
    dispatch_opts(p)
    reserve_opts(p)
    common_out(p)
    p.set_defaults(func=cmd_analyze)
    return parser


def _category(exc: BaseException) -> tuple[int, str]:
    if isinstance(exc, InfeasibleError):
        return EXIT_INFEASIBLE, "infeasible"
    if isinstance(exc, (LPError, ArithmeticError)):
        return EXIT_NUMERICAL, "numerical"
    if isinstance(exc, CurveError) and "recursion depth" in str(exc):
        return EXIT_NUMERICAL, "numerical"
    if isinstance(exc, (ValueError, OSError)):
        return EXIT_VALIDATION, "validation"
    raise exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:
        code, category = _category(exc)
        msg = " ".join(str(exc).split())
        print(f"error: {category}: {msg}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
