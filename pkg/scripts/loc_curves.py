"""Lost opportunity costs on one synthetic week.

LOC_RPS is tabulated over RPS levels at a few capacities, and LOC_RL over the
reserves implied by a range of risk levels. The default week has renewables
close to total demand, so high RPS levels force curtailment trade-offs.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

from storagevalue.analysis import loc_rl, loc_rps
from storagevalue.dispatch import DispatchModel
from storagevalue.parametric import build_curve
from storagevalue.reserve import reserve_for
from storagevalue.timeseries_io import SynthConfig, extract_errors, synthesize_scenario


@dataclass
class Config:
    seed: int = 7
    periods: int = 24 * 7
    negative_price_prob: float = 0.05
    renewable_capacity: float = 150.0
    alphas: tuple = (0.5, 0.6, 0.65, 0.7)
    betas: tuple = (50.0, 150.0, 400.0)
    q_list: tuple = (50.0, 70.0, 80.0, 90.0, 96.0, 99.0)
    rl_beta: float = 200.0


def loc_rps_table(scen, cfg: Config):
    hi = max(cfg.betas)
    curves = {a: build_curve(DispatchModel(scen, a), hi, lo=0.0) for a in (0.0,) + cfg.alphas}
    return [[a] + [loc_rps(curves[0.0], curves[a], b) for b in cfg.betas] for a in cfg.alphas]


def loc_rl_table(scen, cfg: Config):
    errors = extract_errors(scen)
    curve = build_curve(DispatchModel(scen, 0.0), cfg.rl_beta, lo=0.0)
    rows = []
    for q in cfg.q_list:
        d = min(reserve_for(errors, q), cfg.rl_beta)
        rows.append([q, d, loc_rl(curve, cfg.rl_beta, d)])
    return rows


def main(argv=None) -> int:
    cfg = Config()
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=cfg.seed)
    args = p.parse_args(argv)
    cfg.seed = args.seed
    scen = synthesize_scenario(cfg.seed, cfg.periods, SynthConfig(
        renewable_capacity=cfg.renewable_capacity, negative_price_prob=cfg.negative_price_prob))

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["alpha"] + [f"loc_rps_beta_{b:g}" for b in cfg.betas])
    for row in loc_rps_table(scen, cfg):
        w.writerow([f"{round(v, 6) + 0.0:.6g}" for v in row])
    print()
    w.writerow(["Q_percent", "delta_mwh", f"loc_rl_beta_{cfg.rl_beta:g}"])
    for row in loc_rl_table(scen, cfg):
        w.writerow([f"{round(v, 6) + 0.0:.6g}" for v in row])
    return 0


if __name__ == "__main__":
    sys.exit(main())
