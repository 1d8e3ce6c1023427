"""Command-line front end: single tests on CSV data and simulation campaigns.

Exit codes: 0 = null not rejected, 2 = null rejected, 1 = any failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from .data import CATEGORICAL, load_csv
from .errors import ProxyNullError
from .teststats import WeightMeasure

EXIT_ACCEPT = 0
EXIT_ERROR = 1
EXIT_REJECT = 2

_MODE_ALIASES = {
    "continuous-single": "continuous_single",
    "continuous-two-proxy": "continuous_two_proxy",
    "discrete": "discrete",
}

_BASIS_ALIASES = {
    "complex-exp": "complex_exp",
    "sin": "sin",
    "cos": "cos",
    "identity": "identity",
    "indicator": "indicator",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxynull",
        description="Test the causal null hypothesis 'X has no direct effect on Y' "
        "from observational samples with negative-control proxies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run one hypothesis test on a CSV file")
    t.add_argument("--input", required=True, help="CSV file (header row required)")
    t.add_argument("--x", required=True, help="exposure column name")
    t.add_argument("--y", required=True, help="outcome column name")
    t.add_argument("--w", required=True, help="negative-control outcome column name")
    t.add_argument("--z", default=None, help="negative-control exposure column name")
    t.add_argument("--covariates", default=None, help="comma-separated covariate columns")
    t.add_argument("--mode", default="continuous-single", choices=sorted(_MODE_ALIASES))
    t.add_argument("--basis", default="complex-exp", choices=sorted(_BASIS_ALIASES))
    t.add_argument("--k", type=int, default=100, help="number of frequency grid points")
    t.add_argument("--t-max", type=float, default=3.0)
    t.add_argument("--sigma-s", type=float, default=2.0, help="weight measure scale")
    t.add_argument("--lam", type=float, default=None, help="fixed regularization (default: CV)")
    t.add_argument("--cv-folds", type=int, default=5)
    t.add_argument("--b", type=int, default=500, help="bootstrap replications")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--delimiter", default=",")
    t.add_argument("--no-projection", action="store_true",
                   help="skip the moment-projection adjustment of the weights")
    t.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    s = sub.add_parser("simulate", help="run a Monte-Carlo campaign on a named scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--n", required=True, help="comma-separated sample sizes")
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gamma-w", default="1.0", help="comma-separated W->Y strengths (example1)")
    s.add_argument("--mode", default=None, choices=["single", "two-proxy"],
                   help="force single- or two-proxy testing on two-proxy scenarios")
    s.add_argument("--basis", default="complex-exp", choices=sorted(_BASIS_ALIASES))
    s.add_argument("--k", type=int, default=100)
    s.add_argument("--t-max", type=float, default=3.0)
    s.add_argument("--sigma-s", type=float, default=2.0)
    s.add_argument("--b", type=int, default=200, help="bootstrap replications per test")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: PROXYNULL_THREADS or 1)")
    s.add_argument("--out-dir", default=".", help="directory for JSON/CSV reports")
    return parser


def _cmd_test(args) -> int:
    kinds = {}
    mode = _MODE_ALIASES[args.mode]
    if mode == "discrete":
        kinds = {"x": CATEGORICAL, "y": CATEGORICAL, "w": CATEGORICAL}
    covariates = tuple(c.strip() for c in args.covariates.split(",")) if args.covariates else ()
    data = load_csv(
        args.input,
        x=args.x, y=args.y, w=args.w, z=args.z,
        covariates=covariates,
        kinds=kinds,
        delimiter=args.delimiter,
    )
    cfg = harness.TestConfig(
        mode=mode,
        basis=_BASIS_ALIASES[args.basis],
        k=args.k,
        t_max=args.t_max,
        measure=WeightMeasure(scale=args.sigma_s),
        lam=args.lam,
        cv_folds=args.cv_folds,
        replications=args.b,
        alpha=args.alpha,
        seed=args.seed,
        projection=not args.no_projection,
    )
    report = harness.run_test(data, cfg)
    payload = json.dumps(report.to_json_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return EXIT_REJECT if report.reject else EXIT_ACCEPT


def _scenario_mode(scenario: str, forced: str | None) -> str:
    if scenario.startswith("sec612"):
        return "discrete"
    if forced == "two-proxy":
        return "continuous_two_proxy"
    if forced == "single":
        return "continuous_single"
    if scenario.startswith(("example1", "h3-nonlinear")):
        return "continuous_two_proxy"
    return "continuous_single"


def _cmd_simulate(args) -> int:
    n_values = [int(v) for v in args.n.split(",") if v.strip()]
    if not n_values or min(n_values) < harness.MIN_SAMPLES:
        raise ProxyNullError(f"invalid sample sizes {args.n!r}")
    gamma_values = [float(v) for v in str(args.gamma_w).split(",") if v.strip()]
    workers = args.threads
    if workers is None:
        workers = int(os.environ.get("PROXYNULL_THREADS", "1"))
    mode = _scenario_mode(args.scenario, args.mode)
    cfg = harness.TestConfig(
        mode=mode,
        basis=_BASIS_ALIASES[args.basis],
        k=args.k,
        t_max=args.t_max,
        measure=WeightMeasure(scale=args.sigma_s),
        replications=args.b,
        alpha=args.alpha,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    code = EXIT_ACCEPT
    for gamma_w in gamma_values:
        report = harness.run_simulation(
            args.scenario, n_values, args.reps, cfg,
            master_seed=args.seed, gamma_w=gamma_w, workers=workers,
        )
        tag = args.scenario if len(gamma_values) == 1 else f"{args.scenario}-gw{gamma_w:g}"
        json_path = out_dir / f"{tag}.json"
        csv_path = out_dir / f"{tag}.csv"
        json_path.write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        report.write_csv(csv_path)
        header = f"scenario={args.scenario} gamma_w={gamma_w:g} reps={args.reps} B={args.b}"
        print(header)
        print(f"{'n':>8} {'rate':>8} {'wilson95':>20}")
        for row in report.summary():
            print(
                f"{row['n']:>8} {row['rate']:>8.3f} "
                f"[{row['wilson_low']:.3f}, {row['wilson_high']:.3f}]"
            )
        print(f"reports: {json_path} {csv_path}")
    return code


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "test":
            return _cmd_test(args)
        return _cmd_simulate(args)
    except (ProxyNullError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
