"""Command-line interface: ``run``, ``eval``, ``lfd`` and ``features``."""

import argparse
import csv
import logging
import sys

import numpy as np

from .features import FEATURE_NAMES, features_for
from .harness import directions_csv, evaluate_policy, load_config, run_experiment
from .lfd import LfdConfig, run_lfd
from .rng import SplitMix64, derive
from .rollout import RolloutConfig
from .tetris import ActionPlacement, CallMeter, TetrisEnv, read_board


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def read_weights(path):
    """Weights from a CSV file: the last row of a ``weights.csv``-style table
    (``beta_*`` columns) or a bare row of eight numbers."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: no weights found")
    header = rows[0]
    beta_cols = [f"beta_{n}" for n in FEATURE_NAMES]
    if all(c in header for c in beta_cols):
        if len(rows) < 2:
            raise ValueError(f"{path}: header without data")
        idx = [header.index(c) for c in beta_cols]
        return np.array([float(rows[-1][i]) for i in idx])
    if set(header) <= set(FEATURE_NAMES) | {""} and len(rows) > 1:
        rows = rows[1:]
    vals = [float(v) for v in rows[-1] if v.strip()]
    if len(vals) != len(FEATURE_NAMES):
        raise ValueError(f"{path}: expected {len(FEATURE_NAMES)} weights, got {len(vals)}")
    return np.array(vals)


def cmd_run(args):
    config = load_config(args.config)
    overrides = {"output_dir": args.out}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.parallel is not None:
        overrides["parallel"] = args.parallel
    for k, v in overrides.items():
        setattr(config, k, v)
    summary = run_experiment(config)
    for path in summary.files:
        print(path)
    if summary.aborted:
        for variant, rep in summary.aborted:
            print(f"aborted: {variant} replication {rep}", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args):
    weights = read_weights(args.weights)
    res = evaluate_policy(weights, args.games, args.seed, args.step_cap)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["mean_score", "std_score", "games", "capped_games"])
    w.writerow([repr(res.mean_score), repr(res.std_score), res.games, res.capped_games])
    return 0


def cmd_lfd(args):
    env = TetrisEnv()
    rows = []
    status = 0
    for r in range(args.replications):
        rng = SplitMix64(derive(args.seed, r))
        res = run_lfd(env, RolloutConfig(args.M, args.T, args.gamma),
                      LfdConfig(args.alpha, not args.plain_policy, args.max_iterations),
                      rng, CallMeter())
        rows.append((r, res.direction_state))
        if not res.completed:
            print(f"replication {r}: iteration cap reached with undecided directions",
                  file=sys.stderr)
            status = 1
    sys.stdout.write(directions_csv(rows))
    return status


def cmd_features(args):
    state = read_board(args.board, args.piece)
    fv = features_for(state, ActionPlacement(args.rotation, args.column))
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.header:
        w.writerow(FEATURE_NAMES)
    w.writerow([repr(float(v)) for v in fv])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="ipse", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--replications", type=int)
    p.add_argument("--parallel", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate a weight vector by greedy play")
    p.add_argument("--weights", required=True)
    p.add_argument("--games", type=int, default=30)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--step-cap", type=int, default=10**6)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("lfd", help="learn feature directions, print directions.csv")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--max-iterations", type=int, default=5000)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--gamma", type=float, default=RolloutConfig.gamma)
    p.add_argument("--plain-policy", action="store_true",
                   help="disable the reward-first rollout policy")
    p.set_defaults(func=cmd_lfd)

    p = sub.add_parser("features", help="print the features of one placement as CSV")
    p.add_argument("--board", required=True)
    p.add_argument("--piece", required=True)
    p.add_argument("--rotation", type=int, required=True)
    p.add_argument("--column", type=int, required=True)
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_features)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
