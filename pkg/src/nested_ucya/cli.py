"""Command line: ``design``, ``simulate``, ``sweep`` and ``selftest``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .experiment import ExperimentConfig, load_config, parse_config, run_experiment, run_trial


def _config(args) -> ExperimentConfig:
    overrides = dict(kv.split("=", 1) for kv in args.set or [])
    overrides = {k.strip(): v.strip() for k, v in overrides.items()}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "estimator", None):
        overrides["estimator"] = args.estimator
    if args.enforce_c4:
        overrides["enforce_c4"] = "true"
    if args.config:
        return load_config(args.config, **overrides)
    return parse_config("", **overrides)


def cmd_design(args) -> int:
    from .design import dof, format_grid

    model = _config(args).model()
    d = model.design
    n_vdc, n_hdc, cap = dof(d)
    print(f"ports          {d.M_vr} x {d.M_hr} (P={model.ps.P})")
    print(f"allocation     N_vd={d.N_vd} N_hd={d.N_hd} N_vs={d.N_vs} N_hs={d.N_hs}")
    print(f"RF chains      {d.M_rf}")
    print(f"coarray        {n_vdc} x {n_hdc}, capacity {cap} devices")
    side = "one-sided" if model.cmap.shape[0] < n_vdc else "two-sided"
    print(f"lag map        {side}, {model.cmap.shape[0]} vertical lags")
    print(format_grid(d))
    return 0


def cmd_simulate(args) -> int:
    from .metrics import rmse

    cfg = _config(args)
    snr_index = 0
    for res in run_trial(cfg, snr_index, 0):
        print(f"[{res.estimator}] SNR {res.snr_db:g} dB, {res.seconds:.2f} s")
        if res.failure:
            print(f"  failed: {res.failure}")
            continue
        for k in range(res.theta_true.size):
            print("  true ({:7.3f}, {:7.3f})  est ({:7.3f}, {:7.3f})".format(
                *np.degrees([res.theta_true[k], res.phi_true[k], res.theta_est[k], res.phi_est[k]])))
        az, el = rmse(res.theta_true, res.phi_true, res.theta_est, res.phi_est)
        print(f"  rmse az {az:.4f} deg, el {el:.4f} deg")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg, args.out)
    print("snr_db,estimator,rmse_az_deg,rmse_el_deg,n_fail")
    for r in result.rmse_rows():
        print(f"{r['snr_db']:g},{r['estimator']},{r['rmse_az_deg']:.4f},{r['rmse_el_deg']:.4f},{r['n_fail']}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_all

    return 0 if run_all() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nested-ucya", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, estimator=False):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--enforce-c4", action="store_true", help="require N_vd divisible by N_hd")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        if estimator:
            p.add_argument("--estimator", choices=["tensor", "matrix", "both"])

    common(sub.add_parser("design", help="solve the RF allocation and print the port grid"))
    common(sub.add_parser("simulate", help="run one trial and print the estimates"), estimator=True)
    p = sub.add_parser("sweep", help="Monte-Carlo RMSE against SNR")
    common(p, estimator=True)
    p.add_argument("--out", default="results", help="directory for rmse.csv and scatter.csv")
    sub.add_parser("selftest", help="quick invariant checks").set_defaults(
        config=None, seed=None, enforce_c4=False, set=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"design": cmd_design, "simulate": cmd_simulate,
               "sweep": cmd_sweep, "selftest": cmd_selftest}[args.command]
    try:
        return handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
