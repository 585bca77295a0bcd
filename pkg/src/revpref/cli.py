"""Command-line entry point: ``revpref {oracle,train,predict,trial,sweep}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from revpref import harness, polytope
from revpref.all_pairs import AllPairsLearner
from revpref.oracle import solve_linear, solve_separable
from revpref.separable import DerivativeGrid
from revpref.types import LinearValuation, SeparableConcaveValuation


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _emit(obj, out: str | None) -> None:
    text = obj if isinstance(obj, str) else json.dumps(obj, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_oracle(args) -> int:
    if args.curvature is None:
        x = solve_linear(LinearValuation(args.values), args.prices, args.budget)
    else:
        x = solve_separable(SeparableConcaveValuation(args.values, args.curvature), args.prices, args.budget)
    _emit({"bundle": x.tolist()}, args.output)
    return 0


def cmd_train(args) -> int:
    config = harness.load_config(args.config)
    streams = harness.trial_streams(config.seed)
    truth, dist = harness.generate_instance(config, streams["instance"])
    model, info = harness.train_learner(config, truth, dist, streams)
    harness.save_model(model, args.output)
    if args.log and "training" in info:
        Path(args.log).write_text(info["training"].log_csv())
    return 0


def cmd_predict(args) -> int:
    model = harness.load_model(args.model)
    rng = np.random.default_rng(args.seed)
    prices = np.array(args.prices)
    if isinstance(model, AllPairsLearner):
        x, found = model.predict(prices, args.budget), True
    elif isinstance(model, DerivativeGrid):
        x, found = model.predict_with_status(prices, args.budget, rng)
    else:
        x, found = polytope.predict(model, prices, args.budget, rng), True
    _emit({"bundle": x.tolist(), "thresholds_found": found}, args.output)
    return 0


def cmd_trial(args) -> int:
    result = harness.run_trial(harness.load_config(args.config))
    _emit(result.to_dict(), args.output)
    return 0


def cmd_sweep(args) -> int:
    config = harness.load_config(args.config)
    rows = harness.sweep(config, args.m, trials=args.trials, timing=not args.no_timing)
    _emit(harness.sweep_csv(rows), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revpref", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="solve one agent instance and print the optimal bundle")
    p.add_argument("--values", type=_floats, required=True, help="linear values, or a_i with --curvature")
    p.add_argument("--curvature", type=_floats, help="b_i for separable quadratics")
    p.add_argument("--prices", type=_floats, required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("train", help="train a learner from a config file and write model JSON")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--log", help="polytope training log CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict a bundle from model JSON")
    p.add_argument("model")
    p.add_argument("--prices", type=_floats, required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("trial", help="run one train/evaluate trial and print result JSON")
    p.add_argument("config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("sweep", help="error versus training size, as CSV")
    p.add_argument("config")
    p.add_argument("--m", type=_ints, required=True, help="comma-separated training sizes")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--no-timing", action="store_true", help="write 0 in the seconds column")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"revpref: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
