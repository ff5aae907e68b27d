#!/usr/bin/env python3
"""
Command-line entry point:

    ncc run --config <file> [--out <dir>] [--workers N] [--data <path>]
    ncc compare --dir <dir> [--threshold E ...] [--budget 50n ...]
    ncc check --suite {projections,estimators,descent} [--quick] [--out report.json]
    ncc gen-data --task poison --seed S --out <file> [--theta-star {gaussian,ones}]
    ncc params --scheme {pvr,zerosarah} --L <v> [--p P | --n N --a A] [--r R]
    ncc serve [--host H] [--port P]
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from .checks import SUITES
from .config import Config
from .harness import DEFAULT_THRESHOLDS, ExperimentHandler

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncc", description="Variance-reduced smoothed GDA for minimax problems")
    parser.add_argument("--log-level", default=None, help="Overrides NCC_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment config")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--out", default=None, help="Output directory")
    run.add_argument("--workers", type=int, default=None, help="Concurrent runs")
    run.add_argument("--data", default=None, help="LIBSVM file, overrides the problem data path of the config")

    compare = sub.add_parser("compare", help="Summarize a run directory")
    compare.add_argument("--dir", required=True, help="Run directory")
    compare.add_argument("--threshold", type=float, action="append", default=None,
                         help="Stationarity threshold (repeatable)")
    compare.add_argument("--budget", action="append", default=[],
                         help="Oracle budget such as 50n or 100000 (repeatable)")

    check = sub.add_parser("check", help="Run a Monte-Carlo verification suite")
    check.add_argument("--suite", required=True, choices=SUITES)
    check.add_argument("--quick", action="store_true", help="Fewer draws and replicas")
    check.add_argument("--seed", type=int, default=0, help="Master seed")
    check.add_argument("--out", default=None, help="JSON report path")
    check.add_argument("--workers", type=int, default=None)

    gen = sub.add_parser("gen-data", help="Generate a synthetic dataset")
    gen.add_argument("--task", required=True, choices=["poison"])
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, help="LIBSVM output path")
    gen.add_argument("--n", type=int, default=1000)
    gen.add_argument("--d", type=int, default=100)
    gen.add_argument("--noise-var", type=float, default=1e-3)
    gen.add_argument("--theta-star", choices=["gaussian", "ones"], default="gaussian",
                     help="Planted model: N(0, I) or the all-ones vector")

    params = sub.add_parser("params", help="Print step-size bounds")
    params.add_argument("--scheme", required=True, choices=["pvr", "zerosarah"])
    params.add_argument("--L", dest="L", type=float, required=True, help="Smoothness constant")
    params.add_argument("--p", type=float, default=0.5, help="PVR full-gradient probability")
    params.add_argument("--n", type=int, default=None, help="ZeroSARAH component count")
    params.add_argument("--a", type=float, default=2.0, help="ZeroSARAH batch factor")
    params.add_argument("--r", type=float, default=None, help="Smoothing weight, defaults to 2L")
    params.add_argument("--D-Y", dest="D_Y", type=float, default=2 ** 0.5, help="Diameter of Y")
    params.add_argument("--json", action="store_true", help="Print JSON instead of text")

    serve = sub.add_parser("serve", help="Start the HTTP service")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _emit(result: Dict[str, Any], as_json: bool = False) -> int:
    if as_json:
        print(json.dumps(result.get("data"), indent=2))
    else:
        print(result.get("message", ""))
    return 0 if result.get("success") else 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    Config.configure_logging(args.log_level)

    if args.command == "serve":
        import uvicorn
        uvicorn.run("ncc_api:app", host=args.host, port=args.port)
        return 0

    try:
        handler = ExperimentHandler()
    except Exception as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1

    if args.command == "run":
        return _emit(handler.run_experiment(args.config, output_dir=args.out, workers=args.workers,
                                              data=args.data))
    if args.command == "compare":
        return _emit(handler.compare(args.dir, thresholds=args.threshold or DEFAULT_THRESHOLDS, budgets=args.budget))
    if args.command == "check":
        return _emit(handler.run_checks(args.suite, quick=args.quick, master_seed=args.seed, out=args.out,
                                        workers=args.workers))
    if args.command == "gen-data":
        return _emit(handler.generate_data(args.task, args.seed, args.out, n=args.n, d=args.d,
                                           noise_var=args.noise_var, theta_star=args.theta_star))
    if args.command == "params":
        return _emit(handler.step_size_bounds(args.scheme, args.L, p=args.p, n=args.n, a=args.a, r=args.r,
                                              D_Y=args.D_Y), as_json=args.json)
    return 2


if __name__ == "__main__":
    sys.exit(main())
